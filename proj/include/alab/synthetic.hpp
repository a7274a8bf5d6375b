#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alab/dataset.hpp"
#include "alab/rules.hpp"

namespace alab {

// Deterministic synthetic dataset: a pseudo-random embedding space where
// every stem has a planted completion sitting exactly at the normalized
// parallelogram offset, plus human-like and model-like response
// distributions whose modal-mass shares hit the requested targets exactly
// (modal count = round(share * responses_per_stem)).
struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_stems = 100;
    std::size_t vocab_size = 2000;  // includes the planted words
    std::size_t dim = 16;
    double human_modal_share = 0.64;
    double llm_modal_share = 0.85;
    std::uint64_t responses_per_stem = 100;  // per system
    std::string human_system = "human";
    std::string llm_system = "llm";
};

struct SynthData {
    std::vector<std::string> vocab;               // id order
    std::vector<std::vector<double>> vectors;     // unit rows, id order
    std::vector<AnalogyStem> stems;
    std::vector<std::string> planted;             // planted completion per stem
    std::vector<ResponseDistribution> responses;  // human then llm, per stem
    std::vector<RatingRow> ratings;               // one pre-averaged row per (stem, d)
    std::vector<std::pair<std::string, double>> wordfreq;  // Zipf over the vocabulary
};

// Throws ErrorKind::Infeasible when a share cannot be realized with the
// requested counts (the modal count must stay strictly above every tail
// count, and tail mass must split into counts of at least 2 so the
// min-producer filter leaves the distribution untouched).
SynthData generate_synthetic(const SynthConfig& config);

// Writes embeddings.txt, stems.csv, responses.csv, ratings.csv,
// wordfreq.tsv, and manifest.json under out_dir (created if missing).
void write_synthetic(const SynthData& data, const SynthConfig& config, const std::string& out_dir);

}  // namespace alab
