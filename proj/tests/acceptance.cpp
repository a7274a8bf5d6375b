// Acceptance suite: one pass/fail line per criterion, nonzero exit when a
// required criterion fails. Criterion 9 needs external data (the original
// embeddings plus response/rating files) and is skipped unless
// ANALOGYLAB_PAPER_DATA points at a directory holding them.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

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
#include "support/test_util.hpp"

using namespace alab;
using namespace alab::test;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int failures = 0;

struct Check {
    std::string name;
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& why) {
        if (!condition && ok) {
            ok = false;
            detail = why;
        }
    }
};

void report(const Check& check) {
    if (check.ok) {
        std::cout << "[PASS] " << check.name;
        if (!check.detail.empty()) std::cout << " — " << check.detail;
        std::cout << '\n';
    } else {
        std::cout << "[FAIL] " << check.name << " — " << check.detail << '\n';
        ++failures;
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) { return format_double(v); }

// ---- criterion 1 ----------------------------------------------------------

void criterion_1() {
    Check check{"criterion 1: rank_of/top_k agree with the O(V^2) brute-force sorter"};
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0xC0FFEE);
    std::size_t stores = 0;
    for (int round = 0; round < 200 && check.ok; ++round) {
        std::size_t vocab = 2 + rng() % 49;  // <= 50
        std::size_t dim = 1 + rng() % 8;     // <= 8
        auto store = store_from_text(random_store_text(rng, vocab, dim, true));
        BruteForce oracle(store);
        QueryVector q = random_query(rng, store.dim());
        ++stores;

        auto expected_order = oracle.full_order(q, {});
        auto got_order = store.top_k(q, store.size());
        check.expect(got_order.size() == expected_order.size(), "top_k size mismatch");
        for (std::size_t i = 0; i < got_order.size() && check.ok; ++i) {
            check.expect(got_order[i].id == expected_order[i].id,
                         "top_k order diverges at position " + std::to_string(i) + " in store " +
                             std::to_string(round));
        }
        for (WordId w = 0; w < store.size() && check.ok; ++w) {
            check.expect(store.rank_of(q, w) == oracle.rank(q, w, {}),
                         "rank_of mismatch for word " + std::to_string(w) + " in store " +
                             std::to_string(round));
        }
        // Exclusions path, small random subset.
        std::vector<WordId> excl;
        for (WordId w = 0; w < store.size(); ++w) {
            if (rng() % 5 == 0) excl.push_back(w);
        }
        if (excl.size() < store.size()) {
            auto expected_ex = oracle.full_order(q, excl);
            auto got_ex = store.top_k(q, store.size(), excl);
            check.expect(got_ex.size() == expected_ex.size(), "excluded top_k size mismatch");
            for (std::size_t i = 0; i < got_ex.size() && check.ok; ++i) {
                check.expect(got_ex[i].id == expected_ex[i].id, "excluded top_k order diverges");
            }
        }
    }
    double elapsed = seconds_since(start);
    check.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s exceeds the 10 s budget");
    if (check.ok) {
        check.detail = std::to_string(stores) + " stores incl. tie cases, " + fmt(elapsed) + " s";
    }
    report(check);
}

// ---- criterion 2 ----------------------------------------------------------

void criterion_2() {
    Check check{"criterion 2: planted parallelogram completions recovered at rank 1"};
    auto start = std::chrono::steady_clock::now();

    SynthConfig config;
    config.seed = 2024;
    config.n_stems = 120;
    config.vocab_size = 2000;
    config.dim = 16;
    auto data = generate_synthetic(config);
    TempDir dir("accept_synth");
    write_synthetic(data, config, dir.path().string());
    auto store = EmbeddingStore::load_file((dir.path() / "embeddings.txt").string());

    std::vector<RankObs> planted_ranks;
    std::size_t rank_one = 0;
    for (std::size_t s = 0; s < data.stems.size(); ++s) {
        auto result = rank_completion(store, data.stems[s], data.planted[s], RuleKind::Parallelogram);
        if (result.rank == 1) ++rank_one;
        planted_ranks.push_back({result.rank, 1.0});
    }
    check.expect(rank_one == data.stems.size(),
                 "only " + std::to_string(rank_one) + " of " + std::to_string(data.stems.size()) +
                     " planted completions at rank 1");

    // CPR at the smallest tau that covers rank 1 is exactly 1.0.
    double tau_min = 100.0 / static_cast<double>(store.size());
    std::vector<double> taus{tau_min};
    auto curve = cpr(planted_ranks, store.size(), taus);
    check.expect(curve.points[0].proportion == 1.0,
                 "CPR(" + fmt(tau_min) + ") = " + fmt(curve.points[0].proportion) + ", expected 1.0");

    double elapsed = seconds_since(start);
    check.expect(elapsed < 5.0, "runtime " + fmt(elapsed) + " s exceeds the 5 s budget");
    if (check.ok) {
        check.detail = std::to_string(data.stems.size()) + " stems, CPR(" + fmt(tau_min) +
                       ") = 1.0, " + fmt(elapsed) + " s";
    }
    report(check);
}

// ---- criterion 3 ----------------------------------------------------------

void criterion_3() {
    Check check{"criterion 3: rule-reduction identities hold exactly"};
    std::mt19937_64 rng(333);
    std::size_t cases = 0, nn_cases = 0;
    while (cases < 1000 && check.ok) {
        std::size_t vocab = 8 + rng() % 25;
        std::size_t dim = 2 + rng() % 7;
        auto store = store_from_text(random_store_text(rng, vocab, dim, false));
        AnalogyStem stem;
        stem.id = "r";
        stem.a = store.word(rng() % store.size());
        stem.b = stem.a;  // A = B
        stem.c = store.word(rng() % store.size());
        ++cases;

        QueryVector qp = parallelogram_query(store, stem);
        auto order_p = store.top_k(qp, store.size());
        auto order_c = store.top_k(cd_query(store, stem), store.size());
        for (std::size_t i = 0; i < order_p.size() && check.ok; ++i) {
            check.expect(order_p[i].id == order_c[i].id,
                         "A=B: parallelogram ordering differs from CD at position " +
                             std::to_string(i));
        }

        // Independent stem for the NN identity.
        AnalogyStem nn_stem;
        nn_stem.id = "n";
        nn_stem.a = store.word(rng() % store.size());
        nn_stem.b = store.word(rng() % store.size());
        nn_stem.c = store.word(rng() % store.size());
        if (store.cosine(nn_stem.a, nn_stem.b) > store.cosine(nn_stem.a, nn_stem.c)) {
            ++nn_cases;
            auto [qn, target] = nn_query(store, nn_stem);
            check.expect(target == nn_stem.c, "NN target should be C when cos(A,B) > cos(A,C)");
            auto order_n = store.top_k(qn, store.size());
            auto order_cd = store.top_k(cd_query(store, nn_stem), store.size());
            for (std::size_t i = 0; i < order_n.size() && check.ok; ++i) {
                check.expect(order_n[i].id == order_cd[i].id,
                             "NN ordering differs from CD at position " + std::to_string(i));
            }
        }
    }
    if (check.ok) {
        check.detail = std::to_string(cases) + " A=B cases, " + std::to_string(nn_cases) +
                       " NN-target-C cases, zero failures";
    }
    report(check);
}

// ---- criterion 4 ----------------------------------------------------------

void criterion_4() {
    Check check{"criterion 4: CPR fixture and curve properties"};
    std::vector<RankObs> fixture{{1, 1.0}, {5, 1.0}, {50, 1.0}};
    std::vector<double> tau5{5.0};
    auto curve = cpr(fixture, 100, tau5);
    check.expect(curve.points[0].proportion == 2.0 / 3.0,
                 "CPR fixture: got " + fmt(curve.points[0].proportion) + ", expected 2/3 exactly");

    std::mt19937_64 rng(44);
    for (int round = 0; round < 50 && check.ok; ++round) {
        std::uint64_t v = 10 + rng() % 5000;
        std::vector<RankObs> ranks;
        std::size_t n = 1 + rng() % 80;
        for (std::size_t i = 0; i < n; ++i) {
            ranks.push_back({static_cast<std::uint32_t>(1 + rng() % v),
                             static_cast<double>(1 + rng() % 7)});
        }
        std::vector<double> taus{0.01, 0.1, 1.0, 5.0, 25.0, 100.0};
        auto c = cpr(ranks, v, taus);
        for (std::size_t i = 1; i < c.points.size() && check.ok; ++i) {
            check.expect(c.points[i].proportion >= c.points[i - 1].proportion,
                         "CPR not monotone in tau");
        }
        check.expect(c.points.back().proportion == 1.0, "CPR(100) != 1.0");
    }
    if (check.ok) check.detail = "fixture 2/3 exact, monotone over 50 random curves";
    report(check);
}

// ---- criterion 5 ----------------------------------------------------------

double oracle_det(const std::vector<std::vector<double>>& m) {
    std::size_t k = m.size();
    if (k == 1) return m[0][0];
    double sum = 0.0;
    for (std::size_t col = 0; col < k; ++col) {
        std::vector<std::vector<double>> minor;
        for (std::size_t r = 1; r < k; ++r) {
            std::vector<double> row;
            for (std::size_t c = 0; c < k; ++c) {
                if (c != col) row.push_back(m[r][c]);
            }
            minor.push_back(std::move(row));
        }
        double term = m[0][col] * oracle_det(minor);
        sum += (col % 2 == 0) ? term : -term;
    }
    return sum;
}

std::vector<double> oracle_betas(const std::vector<std::vector<double>>& x_cols,
                                 const std::vector<double>& y) {
    const std::size_t k = x_cols.size();
    const std::size_t n = y.size();
    auto zscore = [&](const std::vector<double>& col) {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        double sd = std::sqrt(ss / static_cast<double>(n - 1));
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = (col[i] - mean) / sd;
        return z;
    };
    std::vector<std::vector<double>> xz;
    for (const auto& col : x_cols) xz.push_back(zscore(col));
    std::vector<double> yz = zscore(y);
    std::vector<std::vector<double>> g(k, std::vector<double>(k));
    std::vector<double> r(k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += xz[a][i] * xz[b][i];
            g[a][b] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xz[a][i] * yz[i];
        r[a] = s;
    }
    double d = oracle_det(g);
    std::vector<double> betas(k);
    for (std::size_t j = 0; j < k; ++j) {
        auto gj = g;
        for (std::size_t a = 0; a < k; ++a) gj[a][j] = r[a];
        betas[j] = oracle_det(gj) / d;
    }
    return betas;
}

void criterion_5() {
    Check check{"criterion 5: statistics kernel fixtures"};

    std::vector<double> x{2.0, 4.0, 6.0};
    std::vector<double> y{1.0, 2.0, 3.0};
    auto t = paired_t_test(x, y);
    check.expect(std::abs(t.t_stat - 3.4641) < 1e-4,
                 "paired t: got t = " + fmt(t.t_stat) + ", expected 3.4641 +- 1e-4");
    check.expect(std::abs(t.p_two_sided - 0.0742) < 1e-3,
                 "paired t: got p = " + fmt(t.p_two_sided) + ", expected 0.0742 +- 1e-3");

    std::ifstream table(std::string(ALAB_TEST_DATA_DIR) + "/t_cdf_table.csv");
    check.expect(table.good(), "t_cdf_table.csv missing");
    std::string line;
    std::getline(table, line);
    double max_err = 0.0;
    std::size_t rows = 0;
    while (std::getline(table, line)) {
        auto f = split_csv_line(line);
        double err = std::abs(student_t_cdf(std::stod(f[1]), std::stod(f[0])) - std::stod(f[2]));
        max_err = std::max(max_err, err);
        ++rows;
    }
    check.expect(rows > 600, "t table unexpectedly short");
    check.expect(max_err < 1e-8,
                 "t CDF max error " + fmt(max_err) + " vs the high-precision table (tol 1e-8)");

    std::mt19937_64 rng(555);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    double max_beta_err = 0.0;
    for (int round = 0; round < 20; ++round) {
        std::size_t k = 1 + rng() % 4;
        std::size_t n = k + 10 + rng() % 190;
        std::vector<std::vector<double>> cols(k, std::vector<double>(n));
        std::vector<double> yy(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) cols[j][i] = uniform() * (1.0 + 0.5 * j);
            yy[i] = uniform();
            for (std::size_t j = 0; j < k; ++j) yy[i] += (0.3 + 0.2 * j) * cols[j][i];
        }
        std::vector<std::string> names;
        for (std::size_t j = 0; j < k; ++j) names.push_back("p" + std::to_string(j));
        auto fit = ols_standardized(cols, names, yy, "acc");
        auto expected = oracle_betas(cols, yy);
        for (std::size_t j = 0; j < k; ++j) {
            max_beta_err = std::max(max_beta_err, std::abs(fit.coefficients[j].beta - expected[j]));
        }
    }
    check.expect(max_beta_err < 1e-10,
                 "OLS max |beta - oracle| = " + fmt(max_beta_err) + " (tol 1e-10)");

    if (check.ok) {
        check.detail = "t fixture ok, t-CDF max err " + fmt(max_err) + ", OLS max err " +
                       fmt(max_beta_err);
    }
    report(check);
}

// ---- criterion 6 ----------------------------------------------------------

void criterion_6() {
    Check check{"criterion 6: parallelogram alignment is translation invariant"};
    std::mt19937_64 rng(666);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    std::size_t done = 0;
    double max_dev = 0.0;
    while (done < 500 && check.ok) {
        std::size_t dim = 2 + rng() % 15;
        std::vector<double> a(dim), b(dim), c(dim), d(dim), t(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            a[j] = uniform();
            b[j] = uniform();
            c[j] = uniform();
            d[j] = uniform();
            t[j] = uniform() * 20.0;
        }
        double before;
        try {
            before = relation_alignment(a, b, c, d);
        } catch (const Error&) {
            continue;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            a[j] += t[j];
            b[j] += t[j];
            c[j] += t[j];
            d[j] += t[j];
        }
        double after = relation_alignment(a, b, c, d);
        double dev = std::abs(after - before);
        max_dev = std::max(max_dev, dev);
        check.expect(dev < 1e-9, "deviation " + fmt(dev) + " on case " + std::to_string(done));
        ++done;
    }
    if (check.ok) check.detail = "500 cases, max deviation " + fmt(max_dev);
    report(check);
}

// ---- criterion 7 ----------------------------------------------------------

void criterion_7() {
    Check check{"criterion 7: synthetic modal-share contrast and modal-only report"};
    SynthConfig config;
    config.seed = 4317;
    config.n_stems = 100;
    config.vocab_size = 2500;
    config.dim = 16;
    config.human_modal_share = 0.64;
    config.llm_modal_share = 0.85;
    config.responses_per_stem = 100;
    auto data = generate_synthetic(config);
    TempDir dir("accept_modal");
    write_synthetic(data, config, dir.path().string());

    RunConfig run;
    run.embeddings_path = (dir.path() / "embeddings.txt").string();
    run.stems_path = (dir.path() / "stems.csv").string();
    run.responses_path = (dir.path() / "responses.csv").string();
    run.ratings_path = (dir.path() / "ratings.csv").string();
    run.wordfreq_path = (dir.path() / "wordfreq.tsv").string();
    run.out_dir = (dir.path() / "report").string();
    run.modal_only = true;
    run.deterministic = true;
    run_pipeline(run);

    json summary = json::parse(read_file(dir.path() / "report" / "summary.json"));
    double granularity = 1.0 / static_cast<double>(config.responses_per_stem);
    double human_share = summary["modal_shares"]["human"];
    double llm_share = summary["modal_shares"]["llm"];
    check.expect(std::abs(human_share - 0.64) <= granularity,
                 "human modal share " + fmt(human_share) + " misses 0.64 beyond 1/" +
                     std::to_string(config.responses_per_stem));
    check.expect(std::abs(llm_share - 0.85) <= granularity,
                 "llm modal share " + fmt(llm_share) + " misses 0.85 beyond granularity");

    // Schema-valid outputs all the way through the modal-only delta analysis.
    const std::map<std::string, std::string> schemas{
        {"regression.json", "analogylab.regression.v1"},
        {"ttests.json", "analogylab.ttests.v1"},
        {"summary.json", "analogylab.summary.v1"},
    };
    for (const auto& [file, schema] : schemas) {
        json parsed = json::parse(read_file(dir.path() / "report" / file));
        check.expect(parsed["schema"] == schema, file + " schema mismatch");
    }
    for (const char* file : {"cpr.csv", "centroids.csv", "predictors.csv", "deltas.csv"}) {
        std::ifstream in(dir.path() / "report" / file);
        std::string first;
        std::getline(in, first);
        check.expect(first.rfind("# schema: analogylab.", 0) == 0,
                     std::string(file) + " missing schema line");
    }
    std::string ranks_first;
    {
        std::ifstream in(dir.path() / "report" / "ranks.jsonl");
        std::getline(in, ranks_first);
    }
    json ranks_header = json::parse(ranks_first);
    check.expect(ranks_header["schema"] == "analogylab.ranks.v1", "ranks.jsonl schema mismatch");

    json regression = json::parse(read_file(dir.path() / "report" / "regression.json"));
    check.expect(regression["models"].is_array() && regression["models"].size() == 2,
                 "modal-only regression should fit models A and B");
    for (const auto& model : regression["models"]) {
        check.expect(model.contains("coefficients"), "regression model missing coefficients");
    }
    json ttests = json::parse(read_file(dir.path() / "report" / "ttests.json"));
    check.expect(ttests["tests"].size() == 1 && ttests["tests"][0].contains("p"),
                 "modal-only t-test missing");

    if (check.ok) {
        check.detail = "shares " + fmt(human_share) + "/" + fmt(llm_share) +
                       ", all eight outputs schema-valid";
    }
    report(check);
}

// ---- criterion 8 ----------------------------------------------------------

void criterion_8() {
    Check check{"criterion 8: deterministic reruns and thread-count independence"};
    const std::string fixture = std::string(ALAB_TEST_DATA_DIR) + "/fixture";
    const char* files[] = {"ranks.jsonl",    "cpr.csv",    "centroids.csv",
                           "predictors.csv", "deltas.csv", "regression.json",
                           "ttests.json",    "summary.json"};

    TempDir out1("accept_det1"), out2("accept_det2"), out8("accept_det8");
    auto make = [&](const fs::path& dir, std::size_t threads) {
        RunConfig run;
        run.embeddings_path = fixture + "/embeddings.txt";
        run.stems_path = fixture + "/stems.csv";
        run.responses_path = fixture + "/responses.csv";
        run.ratings_path = fixture + "/ratings.csv";
        run.wordfreq_path = fixture + "/wordfreq.tsv";
        run.out_dir = dir.string();
        run.deterministic = true;
        run.no_cache = true;
        run.threads = threads;
        run_pipeline(run);
    };
    make(out1.path(), 1);
    make(out2.path(), 1);
    make(out8.path(), 8);

    for (const char* file : files) {
        auto first = read_file(out1.path() / file);
        check.expect(!first.empty(), std::string(file) + " is empty");
        check.expect(first == read_file(out2.path() / file),
                     std::string(file) + " differs between identical reruns");
        check.expect(first == read_file(out8.path() / file),
                     std::string(file) + " differs between 1 and 8 worker threads");
    }
    if (check.ok) check.detail = "two reruns and 1-vs-8 threads byte-identical across 8 files";
    report(check);
}

// ---- criterion 9 (optional) ------------------------------------------------

void criterion_9() {
    const char* dir_env = std::getenv("ANALOGYLAB_PAPER_DATA");
    if (!dir_env) {
        std::cout << "[SKIP] criterion 9 (optional): set ANALOGYLAB_PAPER_DATA to a directory with "
                     "embeddings.txt, stems.csv, responses.csv, ratings.csv, wordfreq.tsv\n";
        return;
    }
    Check check{"criterion 9 (optional): external-data reproduction"};
    fs::path dir(dir_env);
    TempDir out("accept_paper");
    RunConfig run;
    run.embeddings_path = (dir / "embeddings.txt").string();
    run.stems_path = (dir / "stems.csv").string();
    run.responses_path = (dir / "responses.csv").string();
    run.ratings_path = (dir / "ratings.csv").string();
    run.wordfreq_path = (dir / "wordfreq.tsv").string();
    run.out_dir = out.path().string();
    run.deterministic = true;
    run.taus = {0.1, 1.0, 10.0, 100.0};
    run_pipeline(run);

    // CPR(0.1%) for the parallelogram rule: human near 0.78, models near 0.86.
    std::ifstream in(out.path() / "cpr.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    double human_cpr = -1.0;
    std::vector<double> model_cprs;
    while (std::getline(in, line)) {
        auto f = split_csv_line(line);
        if (f[0] != "parallelogram" || std::stod(f[2]) != 0.1) continue;
        if (f[1] == run.human_system) human_cpr = std::stod(f[3]);
        else model_cprs.push_back(std::stod(f[3]));
    }
    check.expect(human_cpr >= 0.0, "no human parallelogram CPR(0.1) row");
    check.expect(std::abs(human_cpr - 0.78) <= 0.02,
                 "human CPR(0.1) = " + fmt(human_cpr) + ", expected 0.78 +- 0.02");
    double model_mean = 0.0;
    for (double v : model_cprs) model_mean += v;
    if (!model_cprs.empty()) model_mean /= static_cast<double>(model_cprs.size());
    check.expect(!model_cprs.empty() && std::abs(model_mean - 0.86) <= 0.02,
                 "model CPR(0.1) mean = " + fmt(model_mean) + ", expected 0.86 +- 0.02");

    json regression = json::parse(read_file(out.path() / "regression.json"));
    bool sign_ok = false;
    for (const auto& model : regression["models"]) {
        if (model["label"] != "A") continue;
        double beta_par = 0.0, p_par = 1.0, beta_freq = 0.0, p_freq = 1.0;
        for (const auto& coef : model["coefficients"]) {
            if (coef["name"] == "d_parallelogram") {
                beta_par = coef["beta"];
                p_par = coef["p"];
            }
            if (coef["name"] == "d_logfreq") {
                beta_freq = coef["beta"];
                p_freq = coef["p"];
            }
        }
        sign_ok = beta_par > 0.0 && p_par < 0.05 && beta_freq < 0.0 && p_freq < 0.05;
    }
    check.expect(sign_ok, "Model A sign pattern (beta_par > 0, beta_logfreq < 0, both significant) "
                          "not reproduced");
    report(check);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all required criteria passed\n";
    return 0;
}
