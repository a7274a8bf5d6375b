#include "alab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "alab/errors.hpp"

namespace alab {

namespace {

std::vector<double> checked_taus(std::span<const double> taus) {
    if (taus.empty()) {
        throw Error(ErrorKind::Usage, "cpr requires at least one tau");
    }
    std::vector<double> sorted(taus.begin(), taus.end());
    std::sort(sorted.begin(), sorted.end());
    for (double tau : sorted) {
        if (!(tau > 0.0 && tau <= 100.0)) {
            throw Error(ErrorKind::Usage, "tau must be in (0, 100], got " + std::to_string(tau));
        }
    }
    return sorted;
}

double cosine_raw(std::span<const double> x, std::span<const double> y) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        dot += x[j] * y[j];
        nx += x[j] * x[j];
        ny += y[j] * y[j];
    }
    return dot / std::sqrt(nx * ny);
}

}  // namespace

CprCurve cpr(std::span<const RankObs> ranks, std::uint64_t v_effective, std::span<const double> taus) {
    if (ranks.empty()) {
        throw Error(ErrorKind::EmptyInput, "cpr: no ranks");
    }
    if (v_effective < 1) {
        throw Error(ErrorKind::Usage, "cpr: v_effective must be >= 1");
    }
    std::vector<PercentileObs> obs;
    obs.reserve(ranks.size());
    for (const auto& r : ranks) {
        if (r.rank < 1 || r.rank > v_effective) {
            throw Error(ErrorKind::Usage, "cpr: rank " + std::to_string(r.rank) +
                                              " outside [1, " + std::to_string(v_effective) + "]");
        }
        if (!(r.weight > 0.0)) {
            throw Error(ErrorKind::Usage, "cpr: weights must be positive");
        }
        obs.push_back({100.0 * static_cast<double>(r.rank) / static_cast<double>(v_effective), r.weight});
    }
    return cpr_from_percentiles(obs, taus);
}

CprCurve cpr_from_percentiles(std::span<const PercentileObs> obs, std::span<const double> taus) {
    if (obs.empty()) {
        throw Error(ErrorKind::EmptyInput, "cpr: no observations");
    }
    auto sorted_taus = checked_taus(taus);
    double total_weight = 0.0;
    for (const auto& o : obs) {
        if (!(o.weight > 0.0)) {
            throw Error(ErrorKind::Usage, "cpr: weights must be positive");
        }
        total_weight += o.weight;
    }

    CprCurve curve;
    curve.n_responses = static_cast<std::uint64_t>(std::llround(total_weight));
    curve.points.reserve(sorted_taus.size());
    for (double tau : sorted_taus) {
        double retrieved = 0.0;
        for (const auto& o : obs) {
            if (o.percentile <= tau) retrieved += o.weight;
        }
        curve.points.push_back({tau, retrieved / total_weight});
    }
    return curve;
}

CentroidResult weighted_centroid(const EmbeddingStore& store, const ResponseDistribution& dist) {
    CentroidResult result;
    result.centroid.values.assign(store.dim(), 0.0);
    result.centroid.normalized = false;

    std::uint64_t in_vocab_weight = 0;
    std::vector<std::pair<WordId, std::uint64_t>> rows;
    for (const auto& e : dist.entries) {
        if (auto id = store.find(e.d_term)) {
            rows.emplace_back(*id, e.count);
            in_vocab_weight += e.count;
            ++result.n_used;
        } else {
            ++result.n_oov;
        }
    }
    if (rows.empty()) {
        throw Error(ErrorKind::Oov,
                    "weighted_centroid: no in-vocabulary responses for stem '" + dist.stem_id + "'");
    }

    // f_r renormalized over the in-vocabulary subset keeps the centroid a
    // convex combination of unit rows.
    for (const auto& [id, count] : rows) {
        double f = static_cast<double>(count) / static_cast<double>(in_vocab_weight);
        auto row = store.row(id);
        for (std::size_t j = 0; j < store.dim(); ++j) {
            result.centroid.values[j] += f * static_cast<double>(row[j]);
        }
    }
    return result;
}

double centroid_convergence(const EmbeddingStore& store, const ResponseDistribution& d1,
                            const ResponseDistribution& d2) {
    auto c1 = weighted_centroid(store, d1);
    auto c2 = weighted_centroid(store, d2);
    return std::clamp(cosine_raw(c1.centroid.values, c2.centroid.values), -1.0, 1.0);
}

WeightedRating weighted_mean_rating(const ResponseDistribution& dist, const RatingTable& ratings) {
    WeightedRating out;
    double weighted_sum = 0.0;
    std::uint64_t weight = 0;
    for (const auto& e : dist.entries) {
        auto rating = ratings.mean_rating(dist.stem_id, e.d_term);
        if (!rating) {
            ++out.n_unrated;
            continue;
        }
        weighted_sum += static_cast<double>(e.count) * *rating;
        weight += e.count;
        ++out.n_rated;
    }
    if (out.n_rated == 0) {
        throw Error(ErrorKind::EmptyInput,
                    "weighted_mean_rating: no rated entries for stem '" + dist.stem_id + "'");
    }
    out.value = weighted_sum / static_cast<double>(weight);
    return out;
}

double relation_alignment(std::span<const double> a, std::span<const double> b,
                          std::span<const double> c, std::span<const double> d) {
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double r1 = b[j] - a[j];
        double r2 = d[j] - c[j];
        dot += r1 * r2;
        n1 += r1 * r1;
        n2 += r2 * r2;
    }
    if (n1 < 1e-24 || n2 < 1e-24) {
        throw Error(ErrorKind::DegenerateRelation,
                    "relation_alignment: zero relation vector (identical embeddings)");
    }
    return std::clamp(dot / std::sqrt(n1 * n2), -1.0, 1.0);
}

PredictorSet predictors(const EmbeddingStore& store, const FrequencyTable& freq,
                        const AnalogyStem& stem, const std::string& d_term) {
    WordId a = store.require(stem.a);
    WordId b = store.require(stem.b);
    WordId c = store.require(stem.c);
    WordId d = store.require(d_term);

    auto to_double = [&](WordId id) {
        auto row = store.row(id);
        return std::vector<double>(row.begin(), row.end());
    };
    std::vector<double> va = to_double(a), vb = to_double(b), vc = to_double(c), vd = to_double(d);

    PredictorSet out;
    out.parallelogram_alignment = relation_alignment(va, vb, vc, vd);
    out.cd_similarity = store.cosine(c, d);
    // Same target selection as the NN completion rule; the tie goes to B.
    out.nn_score = store.cosine(a, b) > store.cosine(a, c) ? store.cosine(c, d) : store.cosine(b, d);
    out.log_freq = freq.log_frequency(d_term);
    return out;
}

namespace {

struct SideMeans {
    PredictorSet means;
    double rating = 0.0;
    bool ok = false;
};

// Weighted predictor means over the usable entries of one distribution.
// OOV and degenerate entries are excluded from all four predictor means so
// the means stay comparable across predictors.
SideMeans side_means(const EmbeddingStore& store, const FrequencyTable& freq,
                     const AnalogyStem& stem, const ResponseDistribution& dist,
                     const RatingTable& ratings, DeltaSkips& skips) {
    SideMeans out;
    double w_total = 0.0;
    PredictorSet acc;
    for (const auto& e : dist.entries) {
        PredictorSet p;
        try {
            p = predictors(store, freq, stem, e.d_term);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::Oov) {
                ++skips.oov_entries;
            } else if (err.kind() == ErrorKind::DegenerateRelation) {
                ++skips.degenerate_entries;
            } else {
                throw;
            }
            continue;
        }
        double w = static_cast<double>(e.count);
        acc.parallelogram_alignment += w * p.parallelogram_alignment;
        acc.cd_similarity += w * p.cd_similarity;
        acc.nn_score += w * p.nn_score;
        acc.log_freq += w * p.log_freq;
        w_total += w;
        if (!freq.contains(e.d_term)) ++skips.freq_oov_entries;
    }
    if (w_total == 0.0) return out;

    WeightedRating rating;
    try {
        rating = weighted_mean_rating(dist, ratings);
    } catch (const Error& err) {
        if (err.kind() == ErrorKind::EmptyInput) {
            skips.unrated_entries += dist.entries.size();
            return out;
        }
        throw;
    }
    skips.unrated_entries += rating.n_unrated;

    out.means.parallelogram_alignment = acc.parallelogram_alignment / w_total;
    out.means.cd_similarity = acc.cd_similarity / w_total;
    out.means.nn_score = acc.nn_score / w_total;
    out.means.log_freq = acc.log_freq / w_total;
    out.rating = rating.value;
    out.ok = true;
    return out;
}

}  // namespace

DeltaResult delta_rows(std::span<const AnalogyStem> stems,
                       std::span<const ResponseDistribution> human_dists,
                       std::span<const ResponseDistribution> llm_dists, const RatingTable& ratings,
                       const EmbeddingStore& store, const FrequencyTable& freq) {
    std::map<std::string_view, const ResponseDistribution*> human_by_stem, llm_by_stem;
    for (const auto& d : human_dists) human_by_stem[d.stem_id] = &d;
    for (const auto& d : llm_dists) llm_by_stem[d.stem_id] = &d;

    DeltaResult result;
    for (const auto& stem : stems) {
        auto h = human_by_stem.find(stem.id);
        auto l = llm_by_stem.find(stem.id);
        if (h == human_by_stem.end() || l == llm_by_stem.end()) {
            ++result.skips.stems_skipped;
            continue;
        }
        SideMeans hm = side_means(store, freq, stem, *h->second, ratings, result.skips);
        SideMeans lm = side_means(store, freq, stem, *l->second, ratings, result.skips);
        if (!hm.ok || !lm.ok) {
            ++result.skips.stems_skipped;
            continue;
        }
        AnalysisRow row;
        row.stem_id = stem.id;
        row.weighted_rating_human = hm.rating;
        row.weighted_rating_llm = lm.rating;
        row.human_means = hm.means;
        row.llm_means = lm.means;
        row.d_parallelogram = lm.means.parallelogram_alignment - hm.means.parallelogram_alignment;
        row.d_cd = lm.means.cd_similarity - hm.means.cd_similarity;
        row.d_nn = lm.means.nn_score - hm.means.nn_score;
        row.d_logfreq = lm.means.log_freq - hm.means.log_freq;
        row.d_rating = lm.rating - hm.rating;
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace alab
