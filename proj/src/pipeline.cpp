#include "alab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "alab/csv.hpp"
#include "alab/errors.hpp"
#include "alab/parallel.hpp"
#include "alab/stats.hpp"

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace alab {

namespace {

constexpr RuleKind kAllRules[] = {RuleKind::Parallelogram, RuleKind::CDSimilarity,
                                  RuleKind::NearestNeighbor};

std::string cache_path_for(const std::string& text_path, bool lowercase) {
    return text_path + (lowercase ? ".lower.alab" : ".alab");
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) {
        throw Error(ErrorKind::Usage, std::string("missing required input: ") + what);
    }
    if (!fs::exists(path)) {
        throw Error(ErrorKind::Usage, std::string(what) + " file not found: " + path);
    }
}

std::ifstream open_input(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, std::string("cannot open ") + what + ": " + path);
    }
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write output file: " + path.string());
    }
    return out;
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Analysis parameters only: out_dir and the thread count stay out of the
// echo because neither affects the results, and determinism is checked by
// byte-comparing bundles across runs and thread counts.
json config_echo(const RunConfig& config) {
    json j;
    j["embeddings"] = config.embeddings_path;
    j["stems"] = config.stems_path;
    j["responses"] = config.responses_path;
    j["ratings"] = config.ratings_path;
    j["wordfreq"] = config.wordfreq_path;
    j["exclude_stem"] = config.exclude_stem;
    j["lowercase"] = config.lowercase;
    j["raw_offsets"] = config.raw_offsets;
    j["min_count"] = config.min_count;
    j["taus"] = config.taus;
    j["oov_floor"] = config.oov_floor;
    j["model_spec"] = config.model_spec;
    j["custom_predictors"] = config.custom_predictors;
    j["modal_only"] = config.modal_only;
    j["human_system"] = config.human_system;
    return j;
}

}  // namespace

EmbeddingStore load_embeddings_cached(const std::string& path, const LoadOptions& options,
                                      bool no_cache) {
    require_file(path, "embeddings");
    {
        std::ifstream probe(path, std::ios::binary);
        if (EmbeddingStore::sniff_cache(probe)) {
            return EmbeddingStore::load_cache(probe);
        }
    }
    const std::string cache_path = cache_path_for(path, options.lowercase);
    if (fs::exists(cache_path) && fs::last_write_time(cache_path) >= fs::last_write_time(path)) {
        auto in = open_input(cache_path, "embedding cache");
        return EmbeddingStore::load_cache(in);
    }
    auto in = open_input(path, "embeddings");
    EmbeddingStore store = EmbeddingStore::load_text(in, options);
    if (!no_cache) {
        // Best effort: a read-only directory should not fail the run.
        try {
            const std::string tmp = cache_path + ".tmp";
            {
                auto out = open_output(tmp);
                store.write_cache(out);
            }
            fs::rename(tmp, cache_path);
        } catch (const std::exception&) {
        }
    }
    return store;
}

RankStageResult run_rank_stage(const EmbeddingStore& store, std::span<const AnalogyStem> stems,
                               std::span<const ResponseDistribution> dists, const RunConfig& config,
                               std::span<const RuleKind> rules) {
    std::map<std::string_view, const AnalogyStem*> stem_by_id;
    for (const auto& s : stems) stem_by_id.emplace(s.id, &s);

    struct Item {
        const ResponseDistribution* dist;
        RuleKind rule;
    };
    std::vector<Item> items;
    items.reserve(dists.size() * rules.size());
    for (const auto& d : dists) {
        for (RuleKind rule : rules) items.push_back({&d, rule});
    }

    struct ItemResult {
        std::vector<RankLine> lines;
        RankStageCounts counts;
    };
    std::vector<ItemResult> slots(items.size());

    RuleOptions rule_options{config.exclude_stem, config.raw_offsets};

    parallel_for(items.size(), config.threads, [&](std::size_t i) {
        const auto& [dist, rule] = items[i];
        ItemResult& r = slots[i];
        auto& c = r.counts;
        const auto weighted_key = std::make_pair(dist->system, static_cast<int>(rule));
        auto skip_all = [&](std::uint64_t& counter) {
            counter += dist->entries.size();
            c.weighted_skips[weighted_key] += dist->total_count();
        };

        c.input_entries += dist->entries.size();
        auto stem_it = stem_by_id.find(dist->stem_id);
        if (stem_it == stem_by_id.end()) {
            skip_all(c.skipped_unknown_stem);
            return;
        }
        const AnalogyStem& stem = *stem_it->second;

        std::optional<std::string> nn_target;
        try {
            rule_query(store, stem, rule, config.raw_offsets, &nn_target);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::Oov) {
                skip_all(c.skipped_stem_oov);
            } else if (err.kind() == ErrorKind::DegenerateQuery) {
                skip_all(c.skipped_degenerate);
            } else {
                throw;
            }
            return;
        }

        auto stem_ids = stem_word_ids(store, stem);
        std::vector<const ResponseEntry*> kept;
        std::vector<std::string> kept_terms;
        for (const auto& e : dist->entries) {
            auto id = store.find(e.d_term);
            if (!id) {
                ++c.skipped_d_term_oov;
                c.weighted_skips[weighted_key] += e.count;
                continue;
            }
            if (config.exclude_stem && std::binary_search(stem_ids.begin(), stem_ids.end(), *id)) {
                ++c.skipped_excluded;
                c.weighted_skips[weighted_key] += e.count;
                continue;
            }
            kept.push_back(&e);
            kept_terms.push_back(e.d_term);
        }
        if (kept.empty()) return;

        auto results = rank_completions(store, stem, kept_terms, rule, rule_options);
        c.used_entries += kept.size();
        r.lines.reserve(kept.size());
        for (std::size_t j = 0; j < kept.size(); ++j) {
            RankLine line;
            line.stem_id = dist->stem_id;
            line.system = dist->system;
            line.rule = rule;
            line.d_term = kept[j]->d_term;
            line.count = kept[j]->count;
            line.rank = results[j].rank;
            line.percentile = results[j].percentile;
            line.nn_target = results[j].nn_target;
            r.lines.push_back(std::move(line));
        }
    });

    RankStageResult out;
    for (auto& slot : slots) {
        out.lines.insert(out.lines.end(), std::make_move_iterator(slot.lines.begin()),
                         std::make_move_iterator(slot.lines.end()));
        auto& c = slot.counts;
        out.counts.input_entries += c.input_entries;
        out.counts.used_entries += c.used_entries;
        out.counts.skipped_unknown_stem += c.skipped_unknown_stem;
        out.counts.skipped_stem_oov += c.skipped_stem_oov;
        out.counts.skipped_d_term_oov += c.skipped_d_term_oov;
        out.counts.skipped_degenerate += c.skipped_degenerate;
        out.counts.skipped_excluded += c.skipped_excluded;
        for (const auto& [key, w] : c.weighted_skips) out.counts.weighted_skips[key] += w;
    }
    return out;
}

namespace {

// ---- report stages -------------------------------------------------------

struct PreparedData {
    std::vector<ResponseDistribution> dists;  // filtered (and modal when requested)
    std::vector<std::string> systems;         // first-appearance order, human first if present
    std::uint64_t dropped_empty = 0;          // distributions emptied by the filter
    std::map<std::string, std::vector<double>> modal_shares;  // system -> per-stem shares
};

PreparedData prepare_distributions(std::span<const ResponseDistribution> raw, const RunConfig& config) {
    PreparedData out;
    for (const auto& dist : raw) {
        ResponseDistribution filtered = filter_min_producers(dist, config.min_count);
        if (filtered.entries.empty()) {
            ++out.dropped_empty;
            continue;
        }
        out.modal_shares[filtered.system].push_back(modal_mass_share(filtered));
        if (config.modal_only) {
            filtered = modal_responses(filtered);
        }
        if (std::find(out.systems.begin(), out.systems.end(), filtered.system) == out.systems.end()) {
            out.systems.push_back(filtered.system);
        }
        out.dists.push_back(std::move(filtered));
    }
    // Keep the human system first for readable outputs.
    auto human = std::find(out.systems.begin(), out.systems.end(), config.human_system);
    if (human != out.systems.end()) {
        std::rotate(out.systems.begin(), human, human + 1);
    }
    return out;
}

using DistIndex =
    std::map<std::pair<std::string_view, std::string_view>, const ResponseDistribution*>;

DistIndex build_dist_index(std::span<const ResponseDistribution> dists) {
    DistIndex index;
    for (const auto& d : dists) index[{d.stem_id, d.system}] = &d;
    return index;
}

const ResponseDistribution* find_dist(const DistIndex& index, std::string_view stem_id,
                                      std::string_view system) {
    auto it = index.find(std::make_pair(stem_id, system));
    return it == index.end() ? nullptr : it->second;
}

json rank_line_json(const RankLine& line) {
    json j;
    j["stem_id"] = line.stem_id;
    j["system"] = line.system;
    j["rule"] = to_string(line.rule);
    j["d_term"] = line.d_term;
    j["count"] = line.count;
    j["rank"] = line.rank;
    j["percentile"] = line.percentile;
    if (line.nn_target) j["nn_target"] = *line.nn_target;
    return j;
}

void write_ranks_jsonl(const fs::path& path, const RankStageResult& stage) {
    auto out = open_output(path);
    out << json{{"schema", "analogylab.ranks.v1"}}.dump() << '\n';
    for (const auto& line : stage.lines) {
        out << rank_line_json(line).dump() << '\n';
    }
}

struct CprOutputs {
    std::vector<CprCurve> curves;  // (rule, system) in fixed order
    json mean_ranks = json::array();
};

CprOutputs compute_cpr(const RankStageResult& stage, std::span<const std::string> systems,
                       const RunConfig& config) {
    CprOutputs out;
    for (RuleKind rule : kAllRules) {
        for (const auto& system : systems) {
            std::vector<PercentileObs> obs;
            std::vector<double> ranks, weights;
            for (const auto& line : stage.lines) {
                if (line.rule != rule || line.system != system) continue;
                obs.push_back({line.percentile, static_cast<double>(line.count)});
                ranks.push_back(static_cast<double>(line.rank));
                weights.push_back(static_cast<double>(line.count));
            }
            if (obs.empty()) continue;
            CprCurve curve = cpr_from_percentiles(obs, config.taus);
            curve.rule = rule;
            curve.system = system;
            auto skip_it = stage.counts.weighted_skips.find({system, static_cast<int>(rule)});
            curve.n_oov_skipped = skip_it == stage.counts.weighted_skips.end() ? 0 : skip_it->second;
            out.curves.push_back(std::move(curve));

            MeanCi mean_rank = weighted_mean_ci(ranks, weights);
            json mr;
            mr["rule"] = to_string(rule);
            mr["system"] = system;
            mr["mean_rank"] = mean_rank.mean;
            mr["ci_low"] = mean_rank.ci_low;
            mr["ci_high"] = mean_rank.ci_high;
            mr["n"] = mean_rank.n;
            out.mean_ranks.push_back(std::move(mr));
        }
    }
    return out;
}

void write_cpr_csv(const fs::path& path, std::span<const CprCurve> curves) {
    auto out = open_output(path);
    out << "# schema: analogylab.cpr.v1\n";
    out << "rule,system,tau,proportion,n_responses,n_oov_skipped\n";
    for (const auto& curve : curves) {
        for (const auto& point : curve.points) {
            out << to_string(curve.rule) << ',' << csv_escape(curve.system) << ','
                << format_double(point.tau) << ',' << format_double(point.proportion) << ','
                << curve.n_responses << ',' << curve.n_oov_skipped << '\n';
        }
    }
}

struct CentroidStage {
    json csv_rows = json::array();  // flat rows for the CSV writer
    std::map<std::string, std::vector<double>> per_system;  // convergences across stems
    std::uint64_t input_pairs = 0;
    std::uint64_t used_pairs = 0;
    std::uint64_t skipped_missing_human = 0;
    std::uint64_t skipped_all_oov = 0;
};

CentroidStage compute_centroids(const EmbeddingStore& store, std::span<const AnalogyStem> stems,
                                const DistIndex& dists, std::span<const std::string> systems,
                                const RunConfig& config) {
    CentroidStage stage;
    for (const auto& stem : stems) {
        const ResponseDistribution* human = find_dist(dists, stem.id, config.human_system);
        for (const auto& system : systems) {
            if (system == config.human_system) continue;
            const ResponseDistribution* other = find_dist(dists, stem.id, system);
            if (!other) continue;
            ++stage.input_pairs;
            if (!human) {
                ++stage.skipped_missing_human;
                continue;
            }
            try {
                auto ch = weighted_centroid(store, *human);
                auto co = weighted_centroid(store, *other);
                double convergence =
                    centroid_convergence(store, *human, *other);
                json row;
                row["stem_id"] = stem.id;
                row["system"] = system;
                row["convergence"] = convergence;
                row["human_in_vocab"] = ch.n_used;
                row["human_oov"] = ch.n_oov;
                row["system_in_vocab"] = co.n_used;
                row["system_oov"] = co.n_oov;
                stage.csv_rows.push_back(std::move(row));
                stage.per_system[system].push_back(convergence);
                ++stage.used_pairs;
            } catch (const Error& err) {
                if (err.kind() == ErrorKind::Oov) {
                    ++stage.skipped_all_oov;
                } else {
                    throw;
                }
            }
        }
    }
    return stage;
}

void write_centroids_csv(const fs::path& path, const CentroidStage& stage) {
    auto out = open_output(path);
    out << "# schema: analogylab.centroids.v1\n";
    out << "stem_id,system,convergence,human_in_vocab,human_oov,system_in_vocab,system_oov\n";
    for (const auto& row : stage.csv_rows) {
        out << csv_escape(row["stem_id"].get<std::string>()) << ','
            << csv_escape(row["system"].get<std::string>()) << ','
            << format_double(row["convergence"].get<double>()) << ','
            << row["human_in_vocab"].get<std::uint64_t>() << ',' << row["human_oov"].get<std::uint64_t>()
            << ',' << row["system_in_vocab"].get<std::uint64_t>() << ','
            << row["system_oov"].get<std::uint64_t>() << '\n';
    }
}

struct SystemMeansRow {
    std::string stem_id;
    std::string system;
    double weight_used = 0.0;
    PredictorSet means;
    std::optional<double> rating;
    std::uint64_t n_oov = 0;
    std::uint64_t n_degenerate = 0;
    std::uint64_t n_unrated = 0;
    std::uint64_t n_freq_oov = 0;  // log frequency fell back to the floor
    bool has_predictors = false;
};

SystemMeansRow system_means(const EmbeddingStore& store, const FrequencyTable& freq,
                            const AnalogyStem& stem, const ResponseDistribution& dist,
                            const RatingTable& ratings) {
    SystemMeansRow row;
    row.stem_id = stem.id;
    row.system = dist.system;
    PredictorSet acc;
    for (const auto& e : dist.entries) {
        PredictorSet p;
        try {
            p = predictors(store, freq, stem, e.d_term);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::Oov) {
                ++row.n_oov;
            } else if (err.kind() == ErrorKind::DegenerateRelation) {
                ++row.n_degenerate;
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
        row.weight_used += w;
        if (!freq.contains(e.d_term)) ++row.n_freq_oov;
    }
    if (row.weight_used > 0.0) {
        row.means.parallelogram_alignment = acc.parallelogram_alignment / row.weight_used;
        row.means.cd_similarity = acc.cd_similarity / row.weight_used;
        row.means.nn_score = acc.nn_score / row.weight_used;
        row.means.log_freq = acc.log_freq / row.weight_used;
        row.has_predictors = true;
    }
    try {
        WeightedRating r = weighted_mean_rating(dist, ratings);
        row.rating = r.value;
        row.n_unrated = r.n_unrated;
    } catch (const Error& err) {
        if (err.kind() != ErrorKind::EmptyInput) throw;
        row.n_unrated = dist.entries.size();
    }
    return row;
}

void write_predictors_csv(const fs::path& path, std::span<const SystemMeansRow> rows) {
    auto out = open_output(path);
    out << "# schema: analogylab.predictors.v1\n";
    out << "stem_id,system,weight_used,parallelogram,cd_similarity,nn_score,log_freq,rating,"
           "n_oov,n_degenerate,n_unrated,n_freq_floor\n";
    for (const auto& row : rows) {
        out << csv_escape(row.stem_id) << ',' << csv_escape(row.system) << ','
            << format_double(row.weight_used) << ',';
        if (row.has_predictors) {
            out << format_double(row.means.parallelogram_alignment) << ','
                << format_double(row.means.cd_similarity) << ',' << format_double(row.means.nn_score)
                << ',' << format_double(row.means.log_freq) << ',';
        } else {
            out << ",,,,";
        }
        if (row.rating) out << format_double(*row.rating);
        out << ',' << row.n_oov << ',' << row.n_degenerate << ',' << row.n_unrated << ','
            << row.n_freq_oov << '\n';
    }
}

void write_deltas_csv(const fs::path& path, std::span<const AnalysisRow> rows) {
    auto out = open_output(path);
    out << "# schema: analogylab.deltas.v1\n";
    out << "stem_id,human_parallelogram,human_cd,human_nn,human_logfreq,human_rating,"
           "llm_parallelogram,llm_cd,llm_nn,llm_logfreq,llm_rating,"
           "d_parallelogram,d_cd,d_nn,d_logfreq,d_rating\n";
    for (const auto& r : rows) {
        out << csv_escape(r.stem_id) << ',' << format_double(r.human_means.parallelogram_alignment)
            << ',' << format_double(r.human_means.cd_similarity) << ','
            << format_double(r.human_means.nn_score) << ',' << format_double(r.human_means.log_freq)
            << ',' << format_double(r.weighted_rating_human) << ','
            << format_double(r.llm_means.parallelogram_alignment) << ','
            << format_double(r.llm_means.cd_similarity) << ',' << format_double(r.llm_means.nn_score)
            << ',' << format_double(r.llm_means.log_freq) << ','
            << format_double(r.weighted_rating_llm) << ',' << format_double(r.d_parallelogram) << ','
            << format_double(r.d_cd) << ',' << format_double(r.d_nn) << ','
            << format_double(r.d_logfreq) << ',' << format_double(r.d_rating) << '\n';
    }
}

struct DeltaColumn {
    const char* name;
    double AnalysisRow::* member;
};

constexpr DeltaColumn kDeltaColumns[] = {
    {"d_parallelogram", &AnalysisRow::d_parallelogram},
    {"d_cd", &AnalysisRow::d_cd},
    {"d_nn", &AnalysisRow::d_nn},
    {"d_logfreq", &AnalysisRow::d_logfreq},
};

std::vector<std::string> model_predictor_names(const std::string& spec,
                                               std::span<const std::string> custom) {
    if (spec == "A") return {"d_parallelogram", "d_cd", "d_logfreq"};
    if (spec == "B") return {"d_parallelogram", "d_nn", "d_logfreq"};
    if (spec == "custom") {
        if (custom.empty()) {
            throw Error(ErrorKind::Usage, "custom model requires --predictors");
        }
        return {custom.begin(), custom.end()};
    }
    throw Error(ErrorKind::Usage, "unknown model spec: '" + spec + "' (expected A|B|both|custom)");
}

json regression_json_for(std::span<const AnalysisRow> rows, const std::string& label,
                         std::span<const std::string> names) {
    std::vector<std::vector<double>> columns;
    std::vector<std::string> used_names;
    for (const auto& name : names) {
        const DeltaColumn* col = nullptr;
        for (const auto& c : kDeltaColumns) {
            if (name == c.name) col = &c;
        }
        if (!col) {
            throw Error(ErrorKind::Usage, "unknown delta predictor: '" + name +
                                              "' (expected d_parallelogram|d_cd|d_nn|d_logfreq)");
        }
        std::vector<double> values;
        values.reserve(rows.size());
        for (const auto& r : rows) values.push_back(r.*(col->member));
        columns.push_back(std::move(values));
        used_names.push_back(name);
    }
    std::vector<double> outcome;
    outcome.reserve(rows.size());
    for (const auto& r : rows) outcome.push_back(r.d_rating);

    RegressionResult res = ols_standardized(columns, used_names, outcome, label);
    json j;
    j["label"] = res.model_label;
    j["n"] = res.n;
    j["r_squared"] = res.r_squared;
    json coeffs = json::array();
    for (const auto& c : res.coefficients) {
        coeffs.push_back({{"name", c.name}, {"beta", c.beta}, {"t", c.t_stat}, {"p", c.p_two_sided}});
    }
    j["coefficients"] = std::move(coeffs);
    return j;
}

json build_regressions(std::span<const AnalysisRow> rows, const RunConfig& config) {
    json out;
    out["schema"] = "analogylab.regression.v1";
    out["outcome"] = "d_rating";
    out["models"] = json::array();

    std::vector<std::pair<std::string, std::vector<std::string>>> specs;
    if (config.model_spec == "both") {
        specs.emplace_back("A", model_predictor_names("A", {}));
        specs.emplace_back("B", model_predictor_names("B", {}));
    } else {
        specs.emplace_back(config.model_spec,
                           model_predictor_names(config.model_spec, config.custom_predictors));
    }

    for (const auto& [label, names] : specs) {
        if (rows.size() <= names.size() + 1) {
            out["skipped_reason"] = "insufficient delta rows: n = " + std::to_string(rows.size()) +
                                    ", need > k + 1 = " + std::to_string(names.size() + 1);
            continue;
        }
        try {
            out["models"].push_back(regression_json_for(rows, label, names));
        } catch (const Error& err) {
            json failed;
            failed["label"] = label;
            failed["error"] = {{"kind", to_string(err.kind())}, {"message", err.what()}};
            out["models"].push_back(std::move(failed));
        }
    }
    return out;
}

json build_ttests(std::span<const AnalogyStem> stems, const DistIndex& dists,
                  std::span<const std::string> systems, const RatingTable& ratings,
                  const RunConfig& config) {
    json out;
    out["schema"] = "analogylab.ttests.v1";
    out["human_system"] = config.human_system;
    out["tests"] = json::array();

    for (const auto& system : systems) {
        if (system == config.human_system) continue;
        std::vector<double> llm_ratings, human_ratings;
        for (const auto& stem : stems) {
            const ResponseDistribution* human = find_dist(dists, stem.id, config.human_system);
            const ResponseDistribution* other = find_dist(dists, stem.id, system);
            if (!human || !other) continue;
            std::optional<double> hv, ov;
            try {
                hv = weighted_mean_rating(*human, ratings).value;
                ov = weighted_mean_rating(*other, ratings).value;
            } catch (const Error& err) {
                if (err.kind() != ErrorKind::EmptyInput) throw;
                continue;
            }
            human_ratings.push_back(*hv);
            llm_ratings.push_back(*ov);
        }
        json t;
        t["system"] = system;
        t["n_stems"] = llm_ratings.size();
        try {
            PairedTestResult res = paired_t_test(llm_ratings, human_ratings);
            t["mean_diff"] = res.mean_diff;
            t["ci_low"] = res.ci_low;
            t["ci_high"] = res.ci_high;
            t["t"] = res.t_stat;
            t["df"] = res.df;
            t["p"] = res.p_two_sided;
        } catch (const Error& err) {
            t["skipped_reason"] = err.what();
        }
        out["tests"].push_back(std::move(t));
    }
    return out;
}

}  // namespace

void run_pipeline(const RunConfig& config) {
    // Validate the whole configuration before any computation.
    require_file(config.embeddings_path, "embeddings");
    require_file(config.stems_path, "stems");
    require_file(config.responses_path, "responses");
    require_file(config.ratings_path, "ratings");
    require_file(config.wordfreq_path, "wordfreq");
    if (config.out_dir.empty()) {
        throw Error(ErrorKind::Usage, "missing required output directory");
    }
    if (config.model_spec != "A" && config.model_spec != "B" && config.model_spec != "both" &&
        config.model_spec != "custom") {
        throw Error(ErrorKind::Usage, "unknown model spec: '" + config.model_spec + "'");
    }
    fs::create_directories(config.out_dir);
    const fs::path out_dir(config.out_dir);

    LoadOptions load_options;
    load_options.lowercase = config.lowercase;
    EmbeddingStore store = load_embeddings_cached(config.embeddings_path, load_options, config.no_cache);

    auto stems_in = open_input(config.stems_path, "stems");
    std::vector<AnalogyStem> stems = load_stems(stems_in);
    auto responses_in = open_input(config.responses_path, "responses");
    std::vector<ResponseDistribution> raw_dists = load_responses(responses_in);
    auto ratings_in = open_input(config.ratings_path, "ratings");
    RatingTable ratings = RatingTable::load(ratings_in);
    auto freq_in = open_input(config.wordfreq_path, "wordfreq");
    FrequencyTable freq = FrequencyTable::load(freq_in, config.oov_floor);

    PreparedData prepared = prepare_distributions(raw_dists, config);

    // Ranking (the parallel stage) and CPR.
    RankStageResult rank_stage = run_rank_stage(store, stems, prepared.dists, config, kAllRules);
    write_ranks_jsonl(out_dir / "ranks.jsonl", rank_stage);
    CprOutputs cpr_outputs = compute_cpr(rank_stage, prepared.systems, config);
    write_cpr_csv(out_dir / "cpr.csv", cpr_outputs.curves);

    // Centroid convergence.
    DistIndex dist_index = build_dist_index(prepared.dists);
    CentroidStage centroid_stage =
        compute_centroids(store, stems, dist_index, prepared.systems, config);
    write_centroids_csv(out_dir / "centroids.csv", centroid_stage);

    // Per-system predictor means.
    std::vector<SystemMeansRow> predictor_rows;
    for (const auto& stem : stems) {
        for (const auto& system : prepared.systems) {
            const ResponseDistribution* dist = find_dist(dist_index, stem.id, system);
            if (!dist) continue;
            predictor_rows.push_back(system_means(store, freq, stem, *dist, ratings));
        }
    }
    write_predictors_csv(out_dir / "predictors.csv", predictor_rows);

    // Pooled LLM vs human difference scores.
    std::vector<ResponseDistribution> human_dists, pooled_llm;
    for (const auto& stem : stems) {
        const ResponseDistribution* human = find_dist(dist_index, stem.id, config.human_system);
        if (human) human_dists.push_back(*human);
        ResponseDistribution pooled{stem.id, "llm_pooled", {}};
        for (const auto& system : prepared.systems) {
            if (system == config.human_system) continue;
            const ResponseDistribution* dist = find_dist(dist_index, stem.id, system);
            if (!dist) continue;
            for (const auto& e : dist->entries) {
                auto it = std::find_if(pooled.entries.begin(), pooled.entries.end(),
                                       [&](const ResponseEntry& p) { return p.d_term == e.d_term; });
                if (it == pooled.entries.end()) {
                    pooled.entries.push_back(e);
                } else {
                    it->count += e.count;
                }
            }
        }
        if (!pooled.entries.empty()) pooled_llm.push_back(std::move(pooled));
    }
    DeltaResult deltas = delta_rows(stems, human_dists, pooled_llm, ratings, store, freq);
    write_deltas_csv(out_dir / "deltas.csv", deltas.rows);

    // Regressions and paired t-tests.
    json regressions = build_regressions(deltas.rows, config);
    {
        auto out = open_output(out_dir / "regression.json");
        out << regressions.dump(2) << '\n';
    }
    json ttests = build_ttests(stems, dist_index, prepared.systems, ratings, config);
    {
        auto out = open_output(out_dir / "ttests.json");
        out << ttests.dump(2) << '\n';
    }

    // Summary with config echo and skip reconciliation.
    json summary;
    summary["schema"] = "analogylab.summary.v1";
    if (!config.deterministic) summary["generated_at"] = utc_timestamp();
    summary["config"] = config_echo(config);
    summary["embeddings"] = {{"vocab", store.size()},
                             {"dim", store.dim()},
                             {"norms_dropped", store.norms_dropped()}};
    summary["inputs"] = {{"n_stems", stems.size()},
                         {"n_distributions", raw_dists.size()},
                         {"n_distributions_used", prepared.dists.size()},
                         {"n_distributions_emptied_by_filter", prepared.dropped_empty},
                         {"n_rating_rows", ratings.n_rows()},
                         {"n_wordfreq_entries", freq.size()}};

    const auto& rc = rank_stage.counts;
    summary["counts"]["rank_stage"] = {
        {"input_entries", rc.input_entries},
        {"used_entries", rc.used_entries},
        {"skipped_unknown_stem", rc.skipped_unknown_stem},
        {"skipped_stem_oov", rc.skipped_stem_oov},
        {"skipped_d_term_oov", rc.skipped_d_term_oov},
        {"skipped_degenerate", rc.skipped_degenerate},
        {"skipped_excluded", rc.skipped_excluded},
    };
    summary["counts"]["centroid_stage"] = {
        {"input_pairs", centroid_stage.input_pairs},
        {"used_pairs", centroid_stage.used_pairs},
        {"skipped_missing_human", centroid_stage.skipped_missing_human},
        {"skipped_all_oov", centroid_stage.skipped_all_oov},
    };
    summary["counts"]["delta_stage"] = {
        {"input_stems", stems.size()},
        {"used_rows", deltas.rows.size()},
        {"skipped_stems", deltas.skips.stems_skipped},
        {"oov_entries", deltas.skips.oov_entries},
        {"degenerate_entries", deltas.skips.degenerate_entries},
        {"unrated_entries", deltas.skips.unrated_entries},
        {"freq_floor_entries", deltas.skips.freq_oov_entries},
    };

    json shares = json::object();
    for (const auto& [system, values] : prepared.modal_shares) {
        double sum = 0.0;
        for (double v : values) sum += v;
        shares[system] = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    }
    summary["modal_shares"] = std::move(shares);

    json convergence_means = json::object();
    for (const auto& [system, values] : centroid_stage.per_system) {
        double sum = 0.0;
        for (double v : values) sum += v;
        convergence_means[system] = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    }
    summary["centroid_convergence_means"] = std::move(convergence_means);
    summary["mean_ranks"] = cpr_outputs.mean_ranks;

    {
        auto out = open_output(out_dir / "summary.json");
        out << summary.dump(2) << '\n';
    }
}

}  // namespace alab
