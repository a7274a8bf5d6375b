// analogylab: evaluates A:B::C:D word analogies in an embedding space.
//
// Subcommands cover the full pipeline from raw files to analysis reports:
//   ingest      validate inputs and build the binary embedding cache
//   rank        rank observed completions under one completion rule
//   cpr         cumulative-proportion-retrieved curves per rule and system
//   centroids   human-vs-system response centroid convergence
//   predictors  per-stem predictor means and LLM-minus-human delta scores
//   regress     standardized OLS on a deltas.csv file
//   ttest       paired t-tests on a predictors.csv file
//   report      everything above into one output bundle
//   synth       deterministic synthetic dataset with planted completions
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alab/csv.hpp"
#include "alab/dataset.hpp"
#include "alab/embedding_store.hpp"
#include "alab/errors.hpp"
#include "alab/metrics.hpp"
#include "alab/pipeline.hpp"
#include "alab/rules.hpp"
#include "alab/stats.hpp"
#include "alab/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alab;

namespace {

int exit_code_for(const Error& err) {
    if (err.is_usage()) return 1;
    if (err.is_numeric()) return 3;
    return 2;
}

void print_error(const Error& err) {
    json j;
    j["error"] = {{"kind", to_string(err.kind())}, {"message", err.what()}};
    std::cerr << j.dump() << std::endl;
}

std::ifstream open_or_throw(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, std::string("cannot open ") + what + ": " + path);
    }
    return in;
}

struct CommonPaths {
    std::string embeddings, stems, responses, ratings, wordfreq;
};

void add_embedding_flags(CLI::App* cmd, CommonPaths& paths, RunConfig& config) {
    cmd->add_option("--embeddings", paths.embeddings, "GloVe-style text file or binary cache")
        ->required();
    cmd->add_flag("--lowercase", config.lowercase, "fold words to ASCII lowercase on load");
    cmd->add_flag("--no-cache", config.no_cache, "do not build a binary cache next to the text file");
}

EmbeddingStore load_store(const CommonPaths& paths, const RunConfig& config) {
    LoadOptions options;
    options.lowercase = config.lowercase;
    return load_embeddings_cached(paths.embeddings, options, config.no_cache);
}

std::vector<ResponseDistribution> load_prepared_responses(const std::string& path,
                                                          const RunConfig& config) {
    auto in = open_or_throw(path, "responses");
    auto raw = load_responses(in);
    std::vector<ResponseDistribution> out;
    for (const auto& dist : raw) {
        auto filtered = filter_min_producers(dist, config.min_count);
        if (filtered.entries.empty()) continue;
        if (config.modal_only) filtered = modal_responses(filtered);
        out.push_back(std::move(filtered));
    }
    return out;
}

// Reads one of our own CSV outputs: skips `# schema:` lines, returns the
// header-to-column mapping plus rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw Error(ErrorKind::Parse, "missing column '" + name + "'");
    }
};

CsvTable read_csv_table(const std::string& path, const char* what) {
    auto in = open_or_throw(path, what);
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) {
        throw Error(ErrorKind::EmptyInput, std::string(what) + " file has no rows: " + path);
    }
    return table;
}

double parse_double_field(const std::string& field, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, std::string("bad ") + what + " value: '" + field + "'");
    }
}

int cmd_ingest(const CommonPaths& paths, const RunConfig& config) {
    json out;
    out["schema"] = "analogylab.ingest.v1";
    EmbeddingStore store = load_store(paths, config);
    out["embeddings"] = {{"vocab", store.size()},
                         {"dim", store.dim()},
                         {"norms_dropped", store.norms_dropped()}};
    if (!paths.stems.empty()) {
        auto in = open_or_throw(paths.stems, "stems");
        out["n_stems"] = load_stems(in).size();
    }
    if (!paths.responses.empty()) {
        auto in = open_or_throw(paths.responses, "responses");
        auto dists = load_responses(in);
        std::uint64_t total = 0;
        for (const auto& d : dists) total += d.total_count();
        out["responses"] = {{"n_distributions", dists.size()}, {"total_count", total}};
    }
    if (!paths.ratings.empty()) {
        auto in = open_or_throw(paths.ratings, "ratings");
        auto ratings = RatingTable::load(in);
        out["ratings"] = {{"n_rows", ratings.n_rows()}, {"n_pairs", ratings.n_pairs()}};
    }
    if (!paths.wordfreq.empty()) {
        auto in = open_or_throw(paths.wordfreq, "wordfreq");
        out["n_wordfreq_entries"] = FrequencyTable::load(in, config.oov_floor).size();
    }
    std::cout << out.dump(2) << std::endl;
    return 0;
}

int cmd_rank(const CommonPaths& paths, RunConfig& config, const std::string& rule_name,
             std::size_t top_k_n, const std::string& out_path) {
    EmbeddingStore store = load_store(paths, config);
    auto stems_in = open_or_throw(paths.stems, "stems");
    auto stems = load_stems(stems_in);

    std::vector<ResponseDistribution> dists;
    if (!paths.responses.empty()) {
        dists = load_prepared_responses(paths.responses, config);
    }

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) throw Error(ErrorKind::Io, "cannot write " + out_path);
        out = &file_out;
    }
    *out << json{{"schema", "analogylab.ranks.v1"}}.dump() << '\n';

    std::vector<RuleKind> rules;
    if (rule_name == "all") {
        rules = {RuleKind::Parallelogram, RuleKind::CDSimilarity, RuleKind::NearestNeighbor};
    } else {
        rules = {rule_from_string(rule_name)};
    }

    if (!dists.empty()) {
        RankStageResult stage = run_rank_stage(store, stems, dists, config, rules);
        for (const auto& line : stage.lines) {
            json j;
            j["type"] = "rank";
            j["stem_id"] = line.stem_id;
            j["system"] = line.system;
            j["rule"] = to_string(line.rule);
            j["d_term"] = line.d_term;
            j["count"] = line.count;
            j["rank"] = line.rank;
            j["percentile"] = line.percentile;
            if (line.nn_target) j["nn_target"] = *line.nn_target;
            *out << j.dump() << '\n';
        }
    }

    if (top_k_n > 0) {
        RuleOptions rule_options{config.exclude_stem, config.raw_offsets};
        for (const auto& stem : stems) {
            for (RuleKind rule : rules) {
                std::optional<std::string> nn_target;
                QueryVector q;
                try {
                    q = rule_query(store, stem, rule, config.raw_offsets, &nn_target);
                } catch (const Error& err) {
                    if (err.kind() == ErrorKind::Oov || err.kind() == ErrorKind::DegenerateQuery) {
                        json j;
                        j["type"] = "topk";
                        j["stem_id"] = stem.id;
                        j["rule"] = to_string(rule);
                        j["skipped_reason"] = err.what();
                        *out << j.dump() << '\n';
                        continue;
                    }
                    throw;
                }
                std::vector<WordId> exclusions;
                if (rule_options.exclude_stem) exclusions = stem_word_ids(store, stem);
                auto top = store.top_k(q, top_k_n, exclusions);
                json words = json::array();
                for (const auto& scored : top) {
                    words.push_back({{"word", store.word(scored.id)}, {"cosine", scored.cosine}});
                }
                json j;
                j["type"] = "topk";
                j["stem_id"] = stem.id;
                j["rule"] = to_string(rule);
                if (nn_target) j["nn_target"] = *nn_target;
                j["top"] = std::move(words);
                *out << j.dump() << '\n';
            }
        }
    }
    return 0;
}

int cmd_cpr(const CommonPaths& paths, RunConfig& config, const std::string& out_path) {
    EmbeddingStore store = load_store(paths, config);
    auto stems_in = open_or_throw(paths.stems, "stems");
    auto stems = load_stems(stems_in);
    auto dists = load_prepared_responses(paths.responses, config);

    std::vector<std::string> systems;
    for (const auto& d : dists) {
        if (std::find(systems.begin(), systems.end(), d.system) == systems.end()) {
            systems.push_back(d.system);
        }
    }

    const RuleKind rules[] = {RuleKind::Parallelogram, RuleKind::CDSimilarity,
                              RuleKind::NearestNeighbor};
    RankStageResult stage = run_rank_stage(store, stems, dists, config, rules);

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) throw Error(ErrorKind::Io, "cannot write " + out_path);
        out = &file_out;
    }
    *out << "# schema: analogylab.cpr.v1\n";
    *out << "rule,system,tau,proportion,n_responses,n_oov_skipped\n";
    for (RuleKind rule : rules) {
        for (const auto& system : systems) {
            std::vector<PercentileObs> obs;
            for (const auto& line : stage.lines) {
                if (line.rule == rule && line.system == system) {
                    obs.push_back({line.percentile, static_cast<double>(line.count)});
                }
            }
            if (obs.empty()) continue;
            CprCurve curve = cpr_from_percentiles(obs, config.taus);
            auto skip_it = stage.counts.weighted_skips.find({system, static_cast<int>(rule)});
            std::uint64_t skipped =
                skip_it == stage.counts.weighted_skips.end() ? 0 : skip_it->second;
            for (const auto& point : curve.points) {
                *out << to_string(rule) << ',' << csv_escape(system) << ','
                     << format_double(point.tau) << ',' << format_double(point.proportion) << ','
                     << curve.n_responses << ',' << skipped << '\n';
            }
        }
    }
    return 0;
}

int cmd_centroids(const CommonPaths& paths, RunConfig& config, const std::string& out_path) {
    EmbeddingStore store = load_store(paths, config);
    auto stems_in = open_or_throw(paths.stems, "stems");
    auto stems = load_stems(stems_in);
    auto dists = load_prepared_responses(paths.responses, config);

    std::map<std::string, std::pair<const ResponseDistribution*, const ResponseDistribution*>> unused;
    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) throw Error(ErrorKind::Io, "cannot write " + out_path);
        out = &file_out;
    }
    *out << "# schema: analogylab.centroids.v1\n";
    *out << "stem_id,system,convergence,human_in_vocab,human_oov,system_in_vocab,system_oov\n";
    for (const auto& stem : stems) {
        const ResponseDistribution* human = nullptr;
        std::vector<const ResponseDistribution*> others;
        for (const auto& d : dists) {
            if (d.stem_id != stem.id) continue;
            if (d.system == config.human_system) human = &d;
            else others.push_back(&d);
        }
        if (!human) continue;
        for (const auto* other : others) {
            try {
                auto ch = weighted_centroid(store, *human);
                auto co = weighted_centroid(store, *other);
                double convergence = centroid_convergence(store, *human, *other);
                *out << csv_escape(stem.id) << ',' << csv_escape(other->system) << ','
                     << format_double(convergence) << ',' << ch.n_used << ',' << ch.n_oov << ','
                     << co.n_used << ',' << co.n_oov << '\n';
            } catch (const Error& err) {
                if (err.kind() != ErrorKind::Oov) throw;
            }
        }
    }
    return 0;
}

int cmd_predictors(const CommonPaths& paths, RunConfig& config, const std::string& out_dir) {
    // The full report already computes these; reuse it for the two files.
    RunConfig full = config;
    full.embeddings_path = paths.embeddings;
    full.stems_path = paths.stems;
    full.responses_path = paths.responses;
    full.ratings_path = paths.ratings;
    full.wordfreq_path = paths.wordfreq;
    full.out_dir = out_dir;
    run_pipeline(full);
    std::cout << "wrote " << (fs::path(out_dir) / "predictors.csv").string() << " and "
              << (fs::path(out_dir) / "deltas.csv").string() << std::endl;
    return 0;
}

int cmd_regress(const std::string& deltas_path, const RunConfig& config) {
    CsvTable table = read_csv_table(deltas_path, "deltas");
    std::vector<AnalysisRow> rows;
    std::size_t c_par = table.column("d_parallelogram");
    std::size_t c_cd = table.column("d_cd");
    std::size_t c_nn = table.column("d_nn");
    std::size_t c_lf = table.column("d_logfreq");
    std::size_t c_rating = table.column("d_rating");
    for (const auto& r : table.rows) {
        AnalysisRow row;
        row.d_parallelogram = parse_double_field(r[c_par], "d_parallelogram");
        row.d_cd = parse_double_field(r[c_cd], "d_cd");
        row.d_nn = parse_double_field(r[c_nn], "d_nn");
        row.d_logfreq = parse_double_field(r[c_lf], "d_logfreq");
        row.d_rating = parse_double_field(r[c_rating], "d_rating");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw Error(ErrorKind::EmptyInput, "deltas file has no rows");
    }

    json out;
    out["schema"] = "analogylab.regression.v1";
    out["outcome"] = "d_rating";
    out["models"] = json::array();

    auto run_model = [&](const std::string& label, const std::vector<std::string>& names) {
        std::vector<std::vector<double>> columns;
        for (const auto& name : names) {
            std::vector<double> col;
            col.reserve(rows.size());
            for (const auto& r : rows) {
                if (name == "d_parallelogram") col.push_back(r.d_parallelogram);
                else if (name == "d_cd") col.push_back(r.d_cd);
                else if (name == "d_nn") col.push_back(r.d_nn);
                else if (name == "d_logfreq") col.push_back(r.d_logfreq);
                else throw Error(ErrorKind::Usage, "unknown predictor: '" + name + "'");
            }
            columns.push_back(std::move(col));
        }
        std::vector<double> outcome;
        for (const auto& r : rows) outcome.push_back(r.d_rating);
        RegressionResult res = ols_standardized(columns, names, outcome, label);
        json coeffs = json::array();
        for (const auto& c : res.coefficients) {
            coeffs.push_back(
                {{"name", c.name}, {"beta", c.beta}, {"t", c.t_stat}, {"p", c.p_two_sided}});
        }
        out["models"].push_back({{"label", res.model_label},
                                 {"n", res.n},
                                 {"r_squared", res.r_squared},
                                 {"coefficients", std::move(coeffs)}});
    };

    if (config.model_spec == "both" || config.model_spec == "A") {
        run_model("A", {"d_parallelogram", "d_cd", "d_logfreq"});
    }
    if (config.model_spec == "both" || config.model_spec == "B") {
        run_model("B", {"d_parallelogram", "d_nn", "d_logfreq"});
    }
    if (config.model_spec == "custom") {
        if (config.custom_predictors.empty()) {
            throw Error(ErrorKind::Usage, "custom model requires --predictors");
        }
        run_model("custom", config.custom_predictors);
    }
    std::cout << out.dump(2) << std::endl;
    return 0;
}

int cmd_ttest(const std::string& predictors_path, const RunConfig& config) {
    CsvTable table = read_csv_table(predictors_path, "predictors");
    std::size_t c_stem = table.column("stem_id");
    std::size_t c_system = table.column("system");
    std::size_t c_rating = table.column("rating");

    // stem -> system -> rating
    std::map<std::string, std::map<std::string, double>> ratings;
    std::vector<std::string> systems;
    for (const auto& r : table.rows) {
        if (r[c_rating].empty()) continue;
        ratings[r[c_stem]][r[c_system]] = parse_double_field(r[c_rating], "rating");
        if (std::find(systems.begin(), systems.end(), r[c_system]) == systems.end() &&
            r[c_system] != config.human_system) {
            systems.push_back(r[c_system]);
        }
    }

    json out;
    out["schema"] = "analogylab.ttests.v1";
    out["human_system"] = config.human_system;
    out["tests"] = json::array();
    for (const auto& system : systems) {
        std::vector<double> x, y;
        for (const auto& [stem, by_system] : ratings) {
            auto h = by_system.find(config.human_system);
            auto o = by_system.find(system);
            if (h == by_system.end() || o == by_system.end()) continue;
            x.push_back(o->second);
            y.push_back(h->second);
        }
        json t;
        t["system"] = system;
        t["n_stems"] = x.size();
        try {
            PairedTestResult res = paired_t_test(x, y);
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
    std::cout << out.dump(2) << std::endl;
    return 0;
}

int cmd_synth(const SynthConfig& synth_config, const std::string& out_dir) {
    SynthData data = generate_synthetic(synth_config);
    write_synthetic(data, synth_config, out_dir);
    json out;
    out["schema"] = "analogylab.synth.v1";
    out["out_dir"] = out_dir;
    out["n_stems"] = data.stems.size();
    out["vocab"] = data.vocab.size();
    out["files"] = {"embeddings.txt", "stems.csv",   "responses.csv",
                    "ratings.csv",    "wordfreq.tsv", "manifest.json"};
    std::cout << out.dump(2) << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"word-analogy completion rules, rank analytics, and response-distribution "
                 "comparisons over word embeddings"};
    app.require_subcommand(1);

    RunConfig config;
    CommonPaths paths;
    std::string rule_name = "parallelogram";
    std::size_t top_k_n = 0;
    std::string out_path;
    std::string out_dir = "analogylab_out";
    std::string deltas_path, predictors_path;
    SynthConfig synth_config;

    auto add_analysis_flags = [&](CLI::App* cmd, bool with_ratings, bool with_wordfreq) {
        add_embedding_flags(cmd, paths, config);
        cmd->add_option("--stems", paths.stems, "stems.csv")->required();
        cmd->add_option("--responses", paths.responses, "responses.csv")->required();
        if (with_ratings) cmd->add_option("--ratings", paths.ratings, "ratings.csv")->required();
        if (with_wordfreq) cmd->add_option("--wordfreq", paths.wordfreq, "wordfreq.tsv")->required();
        cmd->add_option("--min-count", config.min_count,
                        "drop responses produced fewer times than this (default 2)");
        cmd->add_flag("--modal-only", config.modal_only, "keep only modal responses, ties preserved");
        cmd->add_flag("--exclude-stem", config.exclude_stem,
                      "exclude the stem words A, B, C from the candidate vocabulary");
        cmd->add_flag("--raw-offsets", config.raw_offsets,
                      "build the parallelogram offset from unnormalized input vectors");
        cmd->add_option("--threads", config.threads, "worker threads (default ANALOGYLAB_THREADS)");
    };

    auto* ingest = app.add_subcommand("ingest", "validate inputs and build the embedding cache");
    add_embedding_flags(ingest, paths, config);
    ingest->add_option("--stems", paths.stems, "stems.csv");
    ingest->add_option("--responses", paths.responses, "responses.csv");
    ingest->add_option("--ratings", paths.ratings, "ratings.csv");
    ingest->add_option("--wordfreq", paths.wordfreq, "wordfreq.tsv");

    auto* rank = app.add_subcommand("rank", "rank observed completions under a completion rule");
    add_embedding_flags(rank, paths, config);
    rank->add_option("--stems", paths.stems, "stems.csv")->required();
    rank->add_option("--responses", paths.responses, "responses.csv (optional with --top-k)");
    rank->add_option("--rule", rule_name, "parallelogram|cd|nn|all")->required();
    rank->add_option("--top-k", top_k_n, "also emit the rule's top-K candidates per stem");
    rank->add_option("--min-count", config.min_count, "drop responses produced fewer times than this");
    rank->add_flag("--modal-only", config.modal_only, "keep only modal responses");
    rank->add_flag("--exclude-stem", config.exclude_stem, "exclude stem words from candidates");
    rank->add_flag("--raw-offsets", config.raw_offsets, "unnormalized parallelogram offsets");
    rank->add_option("--threads", config.threads, "worker threads");
    rank->add_option("--out", out_path, "output JSONL path (default stdout)");

    auto* cpr_cmd = app.add_subcommand("cpr", "cumulative proportion retrieved per rule and system");
    add_analysis_flags(cpr_cmd, false, false);
    cpr_cmd->add_option("--taus", config.taus, "rank-percentile thresholds (percent)");
    cpr_cmd->add_option("--out", out_path, "output CSV path (default stdout)");

    auto* centroids_cmd = app.add_subcommand("centroids", "response-centroid convergence vs human");
    add_analysis_flags(centroids_cmd, false, false);
    centroids_cmd->add_option("--human-system", config.human_system, "system name treated as human");
    centroids_cmd->add_option("--out", out_path, "output CSV path (default stdout)");

    auto* predictors_cmd =
        app.add_subcommand("predictors", "per-stem predictor means and delta scores");
    add_analysis_flags(predictors_cmd, true, true);
    predictors_cmd->add_option("--human-system", config.human_system, "system name treated as human");
    predictors_cmd->add_option("--oov-floor", config.oov_floor, "frequency floor for unlisted words");
    predictors_cmd->add_option("--out-dir", out_dir, "output directory");

    auto* regress = app.add_subcommand("regress", "standardized OLS over a deltas.csv");
    regress->add_option("--deltas", deltas_path, "deltas.csv from `predictors` or `report`")
        ->required();
    regress->add_option("--model", config.model_spec, "A|B|both|custom (default both)");
    regress->add_option("--predictors", config.custom_predictors,
                        "custom predictor columns, e.g. d_parallelogram d_logfreq");

    auto* ttest = app.add_subcommand("ttest", "paired t-tests of ratings vs human, by system");
    ttest->add_option("--predictors-csv", predictors_path, "predictors.csv from `report`")
        ->required();
    ttest->add_option("--human-system", config.human_system, "system name treated as human");
    ttest->add_flag("--by-system", "compare each system to human (always on; flag kept for scripts)");

    auto* report = app.add_subcommand("report", "run the full pipeline into an output bundle");
    add_analysis_flags(report, true, true);
    report->add_option("--taus", config.taus, "rank-percentile thresholds (percent)");
    report->add_option("--human-system", config.human_system, "system name treated as human");
    report->add_option("--oov-floor", config.oov_floor, "frequency floor for unlisted words");
    report->add_option("--model", config.model_spec, "A|B|both|custom (default both)");
    report->add_option("--predictors", config.custom_predictors, "custom predictor columns");
    report->add_flag("--deterministic", config.deterministic, "omit the timestamp from summary.json");
    report->add_option("--out-dir", out_dir, "output directory")->required();

    auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic dataset");
    synth->add_option("--seed", synth_config.seed, "RNG seed");
    synth->add_option("--n-stems", synth_config.n_stems, "number of stems (default 100)");
    synth->add_option("--vocab-size", synth_config.vocab_size, "vocabulary size (default 2000)");
    synth->add_option("--dim", synth_config.dim, "embedding dimensionality (default 16)");
    synth->add_option("--human-modal-share", synth_config.human_modal_share,
                      "target modal mass share for the human system (default 0.64)");
    synth->add_option("--llm-modal-share", synth_config.llm_modal_share,
                      "target modal mass share for the model system (default 0.85)");
    synth->add_option("--responses-per-stem", synth_config.responses_per_stem,
                      "responses per stem per system (default 100)");
    synth->add_option("--out-dir", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    try {
        if (ingest->parsed()) return cmd_ingest(paths, config);
        if (rank->parsed()) return cmd_rank(paths, config, rule_name, top_k_n, out_path);
        if (cpr_cmd->parsed()) return cmd_cpr(paths, config, out_path);
        if (centroids_cmd->parsed()) return cmd_centroids(paths, config, out_path);
        if (predictors_cmd->parsed()) return cmd_predictors(paths, config, out_dir);
        if (regress->parsed()) return cmd_regress(deltas_path, config);
        if (ttest->parsed()) return cmd_ttest(predictors_path, config);
        if (report->parsed()) {
            config.embeddings_path = paths.embeddings;
            config.stems_path = paths.stems;
            config.responses_path = paths.responses;
            config.ratings_path = paths.ratings;
            config.wordfreq_path = paths.wordfreq;
            config.out_dir = out_dir;
            run_pipeline(config);
            std::cout << "report written to " << out_dir << std::endl;
            return 0;
        }
        if (synth->parsed()) return cmd_synth(synth_config, out_dir);
    } catch (const Error& err) {
        print_error(err);
        return exit_code_for(err);
    } catch (const std::exception& err) {
        json j;
        j["error"] = {{"kind", "internal"}, {"message", err.what()}};
        std::cerr << j.dump() << std::endl;
        return 2;
    }
    return 1;
}
