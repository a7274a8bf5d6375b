#include <doctest.h>

#include <cmath>
#include <random>

#include "alab/errors.hpp"
#include "alab/rules.hpp"
#include "support/test_util.hpp"

using namespace alab;
using namespace alab::test;

namespace {

AnalogyStem stem_of(const std::string& a, const std::string& b, const std::string& c) {
    AnalogyStem s;
    s.id = "t";
    s.a = a;
    s.b = b;
    s.c = c;
    return s;
}

}  // namespace

TEST_CASE("parallelogram_query: toy vector arithmetic") {
    auto store = store_from_text("A 1 0 0\nB 0 1 0\nC 0 0 1\n");
    auto q = parallelogram_query(store, stem_of("A", "B", "C"));
    // v(B)-v(A)+v(C) = (-1,1,1), normalized to (-1,1,1)/sqrt(3).
    const double inv_sqrt3 = 0.5773502691896258;
    CHECK(q.normalized);
    CHECK(q.values[0] == doctest::Approx(-inv_sqrt3).epsilon(1e-7));
    CHECK(q.values[1] == doctest::Approx(inv_sqrt3).epsilon(1e-7));
    CHECK(q.values[2] == doctest::Approx(inv_sqrt3).epsilon(1e-7));
}

TEST_CASE("parallelogram_query: A = B reduces to the C:D ranking") {
    std::mt19937_64 rng(99);
    auto store = store_from_text(random_store_text(rng, 20, 6, false));
    auto stem = stem_of(store.word(3), store.word(3), store.word(11));
    auto qp = parallelogram_query(store, stem);
    auto qc = cd_query(store, stem);
    auto full_p = store.top_k(qp, store.size());
    auto full_c = store.top_k(qc, store.size());
    REQUIRE(full_p.size() == full_c.size());
    for (std::size_t i = 0; i < full_p.size(); ++i) {
        CHECK(full_p[i].id == full_c[i].id);
    }
}

TEST_CASE("parallelogram_query: degenerate offset errors") {
    // Unit rows 60 degrees apart make C = A - B another unit vector, so the
    // stored f32 rows cancel exactly and the offset norm is zero.
    auto store = store_from_text(
        "A 1 0 0\n"
        "B 0.5 0.8660254037844386 0\n"
        "C 0.5 -0.8660254037844386 0\n");
    auto stem = stem_of("A", "B", "C");
    CHECK_THROWS_AS(parallelogram_query(store, stem), Error);
    try {
        parallelogram_query(store, stem);
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::DegenerateQuery);
    }
}

TEST_CASE("parallelogram_query: OOV names the word") {
    auto store = toy_store();
    CHECK_THROWS_WITH_AS(parallelogram_query(store, stem_of("a", "nope", "c")),
                         doctest::Contains("nope"), Error);
}

TEST_CASE("parallelogram_query: raw offsets use the pre-normalization magnitudes") {
    // B has raw norm 2; with raw offsets the offset doubles the B pull.
    auto store = store_from_text("A 1 0 0\nB 0 2 0\nC 0 0 1\n");
    auto normalized = parallelogram_query(store, stem_of("A", "B", "C"), false);
    auto raw = parallelogram_query(store, stem_of("A", "B", "C"), true);
    // normalized: unit(-1, 1, 1); raw: unit(-1, 2, 1).
    CHECK(normalized.values[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-7));
    CHECK(raw.values[1] == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-7));

    std::stringstream cache;
    store.write_cache(cache);
    auto from_cache = EmbeddingStore::load_cache(cache);
    CHECK_THROWS_AS(parallelogram_query(from_cache, stem_of("A", "B", "C"), true), Error);
}

TEST_CASE("cd_query: C ranks first when not excluded") {
    auto store = toy_store();
    auto stem = stem_of("a", "b", "c");
    auto q = cd_query(store, stem);
    CHECK(store.rank_of(q, store.require("c")) == 1);

    auto top = store.top_k(q, 3);
    CHECK(store.word(top[0].id) == "c");
    // a and b tie at cos 1/sqrt(2) against unit(1,1,0); WordId breaks the tie.
    CHECK(store.word(top[1].id) == "a");
    CHECK(store.word(top[2].id) == "b");

    CHECK_THROWS_WITH_AS(cd_query(store, stem_of("a", "b", "zzz")), doctest::Contains("zzz"), Error);
}

TEST_CASE("nn_query: strict inequality goes to C, ties go to B") {
    // cos(A,B) = 0.7071 > cos(A,C) = 0 -> target C.
    auto store = store_from_text("A 1 0 0\nB 1 1 0\nC 0 1 0\n");
    auto [q, target] = nn_query(store, stem_of("A", "B", "C"));
    CHECK(target == "C");
    CHECK(q.values[1] == doctest::Approx(1.0));

    // cos(A,B) == cos(A,C) exactly (identical rows) -> "otherwise" branch -> B.
    auto tie_store = store_from_text("A 1 0 0\nB 0 1 0\nC 0 1 0\n");
    auto [tq, tie_target] = nn_query(tie_store, stem_of("A", "B", "C"));
    CHECK(tie_target == "B");
    (void)tq;
}

TEST_CASE("nn_query: when the target is C the ranking equals cd_query's") {
    std::mt19937_64 rng(1234);
    for (int round = 0; round < 10; ++round) {
        auto store = store_from_text(random_store_text(rng, 15, 4, false));
        auto stem = stem_of(store.word(rng() % 15), store.word(rng() % 15), store.word(rng() % 15));
        auto [q, target] = nn_query(store, stem);
        if (target != stem.c) continue;
        auto full_nn = store.top_k(q, store.size());
        auto full_cd = store.top_k(cd_query(store, stem), store.size());
        for (std::size_t i = 0; i < full_nn.size(); ++i) {
            CHECK(full_nn[i].id == full_cd[i].id);
        }
    }
}

TEST_CASE("rank_completion: percentile arithmetic and planted rank 1") {
    // 100-word store, rank 5 -> percentile 5.0.
    std::mt19937_64 rng(555);
    auto store = store_from_text(random_store_text(rng, 100, 6, false));
    auto stem = stem_of(store.word(0), store.word(1), store.word(2));
    auto result = rank_completion(store, stem, store.word(50), RuleKind::CDSimilarity);
    CHECK(result.percentile == doctest::Approx(100.0 * result.rank / 100.0));

    // CD rule, d = C, no exclusions -> rank 1, percentile 100/|V|.
    auto self = rank_completion(store, stem, stem.c, RuleKind::CDSimilarity);
    CHECK(self.rank == 1);
    CHECK(self.percentile == doctest::Approx(1.0));

    // Planted completion: v(X) placed exactly at unit(v(B)-v(A)+v(C)).
    const std::string base = "A 1 0 0 0\nB 0 1 0 0\nC 0 0 1 0\n";
    auto planted_store = store_from_text(base);
    auto pq = parallelogram_query(planted_store, stem_of("A", "B", "C"));
    std::ostringstream with_plant;
    with_plant << base << "X";
    for (double v : pq.values) with_plant << ' ' << v;
    with_plant << "\nD1 0.5 0.5 0 0.7\nD2 -0.3 0.2 0.9 0\n";
    auto full = store_from_text(with_plant.str());
    auto planted = rank_completion(full, stem_of("A", "B", "C"), "X", RuleKind::Parallelogram);
    CHECK(planted.rank == 1);
    CHECK(planted.nn_target == std::nullopt);
}

TEST_CASE("rank_completion: exclude_stem shrinks the effective vocabulary") {
    auto store = store_from_text("a 1 0 0\nb 0 1 0\nc 1 1 0\nd 0.9 0.1 0\n");
    auto stem = stem_of("a", "b", "c");
    RuleOptions options;
    options.exclude_stem = true;
    auto result = rank_completion(store, stem, "d", RuleKind::CDSimilarity, options);
    // Only d remains beyond the stem -> 1 candidate, percentile 100.
    CHECK(result.rank == 1);
    CHECK(result.percentile == doctest::Approx(100.0));

    CHECK_THROWS_AS(rank_completion(store, stem, "a", RuleKind::CDSimilarity, options), Error);
}

TEST_CASE("rank_completion: invariant to the listing order of unrelated words") {
    // Generic store (no duplicate rows): permuting other words never moves
    // a completion's rank.
    std::mt19937_64 rng(909);
    std::string text = random_store_text(rng, 24, 5, false);
    std::vector<std::string> lines;
    std::istringstream split(text);
    for (std::string line; std::getline(split, line);) lines.push_back(line);

    auto store = store_from_text(text);
    AnalogyStem stem;
    stem.id = "o";
    stem.a = store.word(3);
    stem.b = store.word(9);
    stem.c = store.word(17);
    const std::string d_term = store.word(5);

    for (int round = 0; round < 5; ++round) {
        for (std::size_t i = lines.size(); i > 1; --i) {
            std::swap(lines[i - 1], lines[rng() % i]);
        }
        std::string shuffled;
        for (const auto& line : lines) shuffled += line + "\n";
        auto permuted = store_from_text(shuffled);
        for (RuleKind rule :
             {RuleKind::Parallelogram, RuleKind::CDSimilarity, RuleKind::NearestNeighbor}) {
            CHECK(rank_completion(permuted, stem, d_term, rule).rank ==
                  rank_completion(store, stem, d_term, rule).rank);
        }
    }
}

TEST_CASE("rank_completions: NN result carries the resolved target") {
    auto store = store_from_text("A 1 0 0\nB 1 1 0\nC 0 1 0\nD 0.2 0.9 0\n");
    std::vector<std::string> terms{"D", "C"};
    auto results = rank_completions(store, stem_of("A", "B", "C"), terms, RuleKind::NearestNeighbor);
    REQUIRE(results.size() == 2);
    CHECK(results[0].nn_target == std::string("C"));
    CHECK(results[1].nn_target == std::string("C"));
    CHECK(results[1].rank == 1);  // C against its own similarity ranking
}
