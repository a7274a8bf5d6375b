#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alab/dataset.hpp"
#include "alab/embedding_store.hpp"
#include "alab/rules.hpp"

namespace alab {

struct CprPoint {
    double tau = 0.0;         // percent of the vocabulary, in (0, 100]
    double proportion = 0.0;  // weighted share of responses retrieved at tau
};

// Cumulative proportion retrieved: the share of observed responses whose
// predicted rank percentile falls within the top tau percent.
struct CprCurve {
    RuleKind rule = RuleKind::Parallelogram;
    std::string system;
    std::vector<CprPoint> points;        // sorted by tau ascending
    std::uint64_t n_responses = 0;       // total production weight retained
    std::uint64_t n_oov_skipped = 0;
};

struct RankObs {
    std::uint32_t rank = 0;
    double weight = 1.0;  // production count
};

struct PercentileObs {
    double percentile = 0.0;
    double weight = 1.0;
};

CprCurve cpr(std::span<const RankObs> ranks, std::uint64_t v_effective, std::span<const double> taus);

// Same curve from precomputed percentiles; used when the effective
// vocabulary size varies per stem (stem-word exclusions).
CprCurve cpr_from_percentiles(std::span<const PercentileObs> obs, std::span<const double> taus);

struct CentroidResult {
    QueryVector centroid;  // convex combination of unit rows, not renormalized
    std::size_t n_used = 0;
    std::size_t n_oov = 0;
};

// Frequency-weighted centroid over the in-vocabulary responses, with the
// relative frequencies renormalized over that subset.
CentroidResult weighted_centroid(const EmbeddingStore& store, const ResponseDistribution& dist);

// Cosine similarity of two response centroids.
double centroid_convergence(const EmbeddingStore& store, const ResponseDistribution& d1,
                            const ResponseDistribution& d2);

struct WeightedRating {
    double value = 0.0;
    std::size_t n_rated = 0;
    std::size_t n_unrated = 0;  // entries dropped for missing ratings
};

// Production-count-weighted mean rating over the rated entries.
WeightedRating weighted_mean_rating(const ResponseDistribution& dist, const RatingTable& ratings);

struct PredictorSet {
    double parallelogram_alignment = 0.0;  // cos(v(B)-v(A), v(D)-v(C))
    double cd_similarity = 0.0;            // cos(v(C), v(D))
    double nn_score = 0.0;                 // cos(C,D) or cos(B,D) per the NN test
    double log_freq = 0.0;
};

// cos(b - a, d - c) on the vectors exactly as given (no renormalization, so
// the value is invariant to translating all four vectors). Throws
// DegenerateRelation when either difference is (near) zero.
double relation_alignment(std::span<const double> a, std::span<const double> b,
                          std::span<const double> c, std::span<const double> d);

PredictorSet predictors(const EmbeddingStore& store, const FrequencyTable& freq,
                        const AnalogyStem& stem, const std::string& d_term);

struct AnalysisRow {
    std::string stem_id;
    double weighted_rating_human = 0.0;
    double weighted_rating_llm = 0.0;
    PredictorSet human_means;
    PredictorSet llm_means;
    // All deltas are LLM - human.
    double d_parallelogram = 0.0;
    double d_cd = 0.0;
    double d_nn = 0.0;
    double d_logfreq = 0.0;
    double d_rating = 0.0;
};

struct DeltaSkips {
    std::size_t stems_skipped = 0;      // stem missing from a side or side empty
    std::size_t oov_entries = 0;        // completions without an embedding
    std::size_t degenerate_entries = 0; // zero relation vector
    std::size_t unrated_entries = 0;    // completions without a rating
    std::size_t freq_oov_entries = 0;   // log frequency fell back to the floor
};

struct DeltaResult {
    std::vector<AnalysisRow> rows;
    DeltaSkips skips;
};

// Per-stem frequency-weighted predictor and rating means for each system,
// plus their LLM - human difference scores. Stems whose human or LLM side
// yields no usable entries are skipped and counted.
DeltaResult delta_rows(std::span<const AnalogyStem> stems,
                       std::span<const ResponseDistribution> human_dists,
                       std::span<const ResponseDistribution> llm_dists, const RatingTable& ratings,
                       const EmbeddingStore& store, const FrequencyTable& freq);

}  // namespace alab
