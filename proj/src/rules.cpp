#include "alab/rules.hpp"

#include <algorithm>
#include <cmath>

#include "alab/errors.hpp"

namespace alab {

const char* to_string(RuleKind rule) {
    switch (rule) {
        case RuleKind::Parallelogram: return "parallelogram";
        case RuleKind::CDSimilarity: return "cd";
        case RuleKind::NearestNeighbor: return "nn";
    }
    return "?";
}

RuleKind rule_from_string(std::string_view name) {
    if (name == "parallelogram") return RuleKind::Parallelogram;
    if (name == "cd") return RuleKind::CDSimilarity;
    if (name == "nn") return RuleKind::NearestNeighbor;
    throw Error(ErrorKind::Usage, "unknown rule: '" + std::string(name) + "' (expected parallelogram|cd|nn)");
}

QueryVector parallelogram_query(const EmbeddingStore& store, const AnalogyStem& stem,
                                bool raw_offsets) {
    WordId a = store.require(stem.a);
    WordId b = store.require(stem.b);
    WordId c = store.require(stem.c);
    if (raw_offsets && !store.has_original_norms()) {
        throw Error(ErrorKind::Usage,
                    "raw offsets need the pre-normalization vector norms, which the binary "
                    "embedding cache does not keep; reload from the text file");
    }
    const double sa = raw_offsets ? store.original_norm(a) : 1.0;
    const double sb = raw_offsets ? store.original_norm(b) : 1.0;
    const double sc = raw_offsets ? store.original_norm(c) : 1.0;

    auto ra = store.row(a);
    auto rb = store.row(b);
    auto rc = store.row(c);
    QueryVector q;
    q.values.resize(store.dim());
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < store.dim(); ++j) {
        double v = sb * static_cast<double>(rb[j]) - sa * static_cast<double>(ra[j]) +
                   sc * static_cast<double>(rc[j]);
        q.values[j] = v;
        norm_sq += v * v;
    }
    double norm = std::sqrt(norm_sq);
    if (norm < 1e-10) {
        throw Error(ErrorKind::DegenerateQuery,
                    "degenerate parallelogram query for stem " + stem.a + ":" + stem.b + "::" + stem.c +
                        " (offset sum has near-zero norm)");
    }
    for (double& v : q.values) v /= norm;
    q.normalized = true;
    return q;
}

QueryVector cd_query(const EmbeddingStore& store, const AnalogyStem& stem) {
    WordId c = store.require(stem.c);
    auto rc = store.row(c);
    QueryVector q;
    q.values.assign(rc.begin(), rc.end());
    q.normalized = true;
    return q;
}

std::pair<QueryVector, std::string> nn_query(const EmbeddingStore& store, const AnalogyStem& stem) {
    WordId a = store.require(stem.a);
    WordId b = store.require(stem.b);
    WordId c = store.require(stem.c);
    // Target is C when A sits strictly closer to B; ties go to B.
    bool target_is_c = store.cosine(a, b) > store.cosine(a, c);
    WordId target = target_is_c ? c : b;
    auto rt = store.row(target);
    QueryVector q;
    q.values.assign(rt.begin(), rt.end());
    q.normalized = true;
    return {std::move(q), store.word(target)};
}

QueryVector rule_query(const EmbeddingStore& store, const AnalogyStem& stem, RuleKind rule,
                       bool raw_offsets, std::optional<std::string>* nn_target_out) {
    if (nn_target_out) nn_target_out->reset();
    switch (rule) {
        case RuleKind::Parallelogram:
            return parallelogram_query(store, stem, raw_offsets);
        case RuleKind::CDSimilarity:
            return cd_query(store, stem);
        case RuleKind::NearestNeighbor: {
            auto [q, target] = nn_query(store, stem);
            if (nn_target_out) *nn_target_out = target;
            return q;
        }
    }
    throw Error(ErrorKind::Usage, "invalid rule");
}

std::vector<WordId> stem_word_ids(const EmbeddingStore& store, const AnalogyStem& stem) {
    std::vector<WordId> ids;
    for (const std::string* w : {&stem.a, &stem.b, &stem.c}) {
        if (auto id = store.find(*w)) ids.push_back(*id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

RankResult rank_completion(const EmbeddingStore& store, const AnalogyStem& stem,
                           const std::string& d_term, RuleKind rule, const RuleOptions& options) {
    std::span<const std::string> one(&d_term, 1);
    return rank_completions(store, stem, one, rule, options)[0];
}

std::vector<RankResult> rank_completions(const EmbeddingStore& store, const AnalogyStem& stem,
                                         std::span<const std::string> d_terms, RuleKind rule,
                                         const RuleOptions& options) {
    std::optional<std::string> nn_target;
    QueryVector q = rule_query(store, stem, rule, options.raw_offsets, &nn_target);

    std::vector<WordId> exclusions;
    if (options.exclude_stem) {
        exclusions = stem_word_ids(store, stem);
    }

    std::vector<WordId> targets;
    targets.reserve(d_terms.size());
    for (const auto& d : d_terms) {
        WordId id = store.require(d);
        if (options.exclude_stem && std::binary_search(exclusions.begin(), exclusions.end(), id)) {
            throw Error(ErrorKind::Usage, "completion '" + d + "' is excluded by --exclude-stem");
        }
        targets.push_back(id);
    }

    auto ranks = store.ranks_of_many(q, targets, exclusions);
    const double v_effective = static_cast<double>(store.effective_size(exclusions));

    std::vector<RankResult> out;
    out.reserve(d_terms.size());
    for (std::size_t i = 0; i < d_terms.size(); ++i) {
        RankResult r;
        r.rule = rule;
        r.d_term = d_terms[i];
        r.rank = ranks[i];
        r.percentile = 100.0 * static_cast<double>(ranks[i]) / v_effective;
        r.nn_target = nn_target;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace alab
