#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alab/dataset.hpp"
#include "alab/embedding_store.hpp"
#include "alab/metrics.hpp"
#include "alab/rules.hpp"

namespace alab {

struct RunConfig {
    std::string embeddings_path;
    std::string stems_path;
    std::string responses_path;
    std::string ratings_path;   // required by report/predictors/regress paths
    std::string wordfreq_path;  // optional; missing table means every word hits the OOV floor
    std::string out_dir;

    bool exclude_stem = false;
    bool lowercase = false;
    bool raw_offsets = false;
    std::uint64_t min_count = 2;
    std::vector<double> taus = {0.01, 0.1, 1.0, 10.0, 100.0};
    double oov_floor = 1e-9;
    std::string model_spec = "both";  // A | B | both | custom
    std::vector<std::string> custom_predictors;
    bool modal_only = false;
    bool deterministic = false;  // omit the timestamp from summary.json
    bool no_cache = false;       // skip building the binary embedding cache
    std::string human_system = "human";
    std::size_t threads = 0;  // 0 = ANALOGYLAB_THREADS or hardware concurrency
};

// Loads text embeddings through the binary cache: an up-to-date sibling
// cache file is used when present, otherwise the text file is parsed and
// (unless no_cache) the cache is written next to it for the next run.
EmbeddingStore load_embeddings_cached(const std::string& path, const LoadOptions& options, bool no_cache);

// One ranked response: the unit of ranks.jsonl.
struct RankLine {
    std::string stem_id;
    std::string system;
    RuleKind rule;
    std::string d_term;
    std::uint64_t count = 0;
    std::uint32_t rank = 0;
    double percentile = 0.0;
    std::optional<std::string> nn_target;
};

struct RankStageCounts {
    std::uint64_t input_entries = 0;  // (stem, system, d_term, rule) items attempted
    std::uint64_t used_entries = 0;
    std::uint64_t skipped_unknown_stem = 0;  // distribution references no stem row
    std::uint64_t skipped_stem_oov = 0;
    std::uint64_t skipped_d_term_oov = 0;
    std::uint64_t skipped_degenerate = 0;
    std::uint64_t skipped_excluded = 0;  // d_term removed by --exclude-stem
    // Production-weighted OOV + degenerate skips per system, for CprCurve.
    std::map<std::pair<std::string, int>, std::uint64_t> weighted_skips;  // (system, rule) -> weight
};

struct RankStageResult {
    std::vector<RankLine> lines;  // stems-file order, systems in first-appearance order
    RankStageCounts counts;
};

// Ranks every (stem, system, response, rule) work item with a bounded
// worker pool; aggregation order is fixed so output never depends on the
// thread count.
RankStageResult run_rank_stage(const EmbeddingStore& store, std::span<const AnalogyStem> stems,
                               std::span<const ResponseDistribution> dists, const RunConfig& config,
                               std::span<const RuleKind> rules);

// Runs the whole pipeline and writes the report bundle under out_dir:
// ranks.jsonl, cpr.csv, centroids.csv, predictors.csv, deltas.csv,
// regression.json, ttests.json, summary.json.
void run_pipeline(const RunConfig& config);

}  // namespace alab
