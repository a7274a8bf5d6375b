#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alab/embedding_store.hpp"

namespace alab {

// The three completion rules. Each one turns an A:B::C stem into a query
// direction; candidates are then ranked by cosine to that query.
enum class RuleKind {
    Parallelogram,     // v(B) - v(A) + v(C), renormalized
    CDSimilarity,      // v(C)
    NearestNeighbor,   // v(C) if cos(A,B) > cos(A,C), else v(B)
};

const char* to_string(RuleKind rule);
RuleKind rule_from_string(std::string_view name);

struct AnalogyStem {
    std::string id;
    std::string a, b, c;
    std::string relation_category;  // empty = unlabeled
    std::string relation_subtype;
};

struct RankResult {
    RuleKind rule;
    std::string d_term;
    std::uint32_t rank = 0;
    double percentile = 0.0;  // 100 * rank / effective vocabulary size
    std::optional<std::string> nn_target;  // B or C, NearestNeighbor only
};

struct RuleOptions {
    bool exclude_stem = false;  // remove {a, b, c} from the candidate set
    bool raw_offsets = false;   // parallelogram offset from unnormalized input rows
};

// v(B) - v(A) + v(C) from the stored unit rows, L2-normalized. With
// raw_offsets the offset is taken over the pre-normalization input vectors
// instead (requires a store loaded from text; the binary cache keeps only
// normalized rows).
QueryVector parallelogram_query(const EmbeddingStore& store, const AnalogyStem& stem,
                                bool raw_offsets = false);

QueryVector cd_query(const EmbeddingStore& store, const AnalogyStem& stem);

// Retrieval target per the relative-similarity test; ties go to B.
std::pair<QueryVector, std::string> nn_query(const EmbeddingStore& store, const AnalogyStem& stem);

// Dispatches to the rule's query constructor. nn_target_out is filled for
// NearestNeighbor and cleared otherwise.
QueryVector rule_query(const EmbeddingStore& store, const AnalogyStem& stem, RuleKind rule,
                       bool raw_offsets, std::optional<std::string>* nn_target_out);

// Distinct in-vocabulary WordIds of {a, b, c}.
std::vector<WordId> stem_word_ids(const EmbeddingStore& store, const AnalogyStem& stem);

RankResult rank_completion(const EmbeddingStore& store, const AnalogyStem& stem,
                           const std::string& d_term, RuleKind rule, const RuleOptions& options = {});

// Ranks every d_term under the same stem and rule in one matrix pass.
std::vector<RankResult> rank_completions(const EmbeddingStore& store, const AnalogyStem& stem,
                                         std::span<const std::string> d_terms, RuleKind rule,
                                         const RuleOptions& options = {});

}  // namespace alab
