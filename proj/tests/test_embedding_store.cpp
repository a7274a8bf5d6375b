#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "alab/embedding_store.hpp"
#include "alab/errors.hpp"
#include "support/test_util.hpp"

using namespace alab;
using namespace alab::test;

TEST_CASE("load_text: three distinct rows, all unit norm") {
    auto store = store_from_text("a 1 0 0\nb 0 2 0\nc 3 3 0\n");
    CHECK(store.size() == 3);
    CHECK(store.dim() == 3);
    CHECK(store.norms_dropped() == 0);
    for (WordId i = 0; i < 3; ++i) {
        double norm_sq = 0.0;
        for (float v : store.row(i)) norm_sq += static_cast<double>(v) * v;
        CHECK(std::abs(std::sqrt(norm_sq) - 1.0) < 1e-6);
    }
    CHECK(store.find("b").value() == 1);
    CHECK(store.word(2) == "c");
}

TEST_CASE("load_text: zero row dropped and counted") {
    auto store = store_from_text("a 1 0 0\nzero 0 0 0\nb 0 1 0\n");
    CHECK(store.size() == 2);
    CHECK(store.norms_dropped() == 1);
    CHECK_FALSE(store.contains("zero"));
}

TEST_CASE("load_text: duplicate word keeps first occurrence") {
    auto store = store_from_text("cat 1 0 0\ndog 0 1 0\ncat 0 0 1\n");
    CHECK(store.size() == 2);
    CHECK(store.norms_dropped() == 1);
    // First occurrence survives: cat stays on the x axis.
    CHECK(store.cosine("cat", "cat") == doctest::Approx(1.0));
    CHECK(store.row(store.require("cat"))[0] == doctest::Approx(1.0f));
}

TEST_CASE("load_text: non-finite row dropped, inconsistent dims are an error") {
    auto store = store_from_text("a 1 0 0\nbad nan 0 1\nb 0 1 0\n");
    CHECK(store.size() == 2);
    CHECK(store.norms_dropped() == 1);

    std::istringstream bad("a 1 0 0\nb 1 0\n");
    CHECK_THROWS_WITH_AS(EmbeddingStore::load_text(bad),
                         doctest::Contains("line 2"), Error);
}

TEST_CASE("load_text: empty input errors") {
    std::istringstream empty("");
    CHECK_THROWS_AS(EmbeddingStore::load_text(empty), Error);
    std::istringstream blank("\n\n");
    CHECK_THROWS_AS(EmbeddingStore::load_text(blank), Error);
}

TEST_CASE("load_text: multi-token words are kept byte-exact") {
    std::istringstream in("a 1 0 0\n. . . 0 1 0\n");
    auto store = EmbeddingStore::load_text(in);
    CHECK(store.size() == 2);
    CHECK(store.contains(". . ."));
}

TEST_CASE("load_text: expected_dim overrides and validates") {
    LoadOptions options;
    options.expected_dim = 3;
    std::istringstream in("a 1 0 0 0\n");
    CHECK_THROWS_AS(EmbeddingStore::load_text(in, options), Error);
}

TEST_CASE("load_text: lowercase folding is opt-in") {
    auto plain = store_from_text("Cat 1 0\ncat 0 1\n");
    CHECK(plain.size() == 2);

    LoadOptions fold;
    fold.lowercase = true;
    auto folded = store_from_text("Cat 1 0\ncat 0 1\n", fold);
    CHECK(folded.size() == 1);
    CHECK(folded.contains("cat"));
    CHECK_FALSE(folded.contains("Cat"));
    CHECK(folded.norms_dropped() == 1);
}

TEST_CASE("cosine: self, orthogonal, and hand-computed values") {
    auto store = toy_store();
    CHECK(store.cosine("a", "a") == 1.0);
    CHECK(store.cosine("a", "b") == doctest::Approx(0.0));
    // Hand oracle: cos((1,0,0), unit(1,1,0)) = 1/sqrt(2).
    CHECK(store.cosine("a", "c") == doctest::Approx(0.7071067811865475).epsilon(1e-7));
    CHECK(store.cosine("a", "c") == store.cosine("c", "a"));
    CHECK_THROWS_WITH_AS((void)store.cosine("a", "zebra"), doctest::Contains("zebra"), Error);
}

TEST_CASE("rank_of: toy store ranks from the brute-force oracle") {
    auto store = toy_store();
    QueryVector q{{1.0, 0.0, 0.0}, true};
    CHECK(store.rank_of(q, store.require("a")) == 1);
    CHECK(store.rank_of(q, store.require("c")) == 2);  // cos 0.7071 behind a's 1.0
    CHECK(store.rank_of(q, store.require("b")) == 3);
}

TEST_CASE("rank_of: bit-identical cosines break ties by WordId") {
    auto store = store_from_text("a 1 0\ntwin1 0 1\ntwin2 0 1\n");
    QueryVector q{{0.0, 1.0}, true};
    CHECK(store.rank_of(q, store.require("twin1")) == 1);
    CHECK(store.rank_of(q, store.require("twin2")) == 2);
}

TEST_CASE("rank_of: excluded target errors") {
    auto store = toy_store();
    QueryVector q{{1.0, 0.0, 0.0}, true};
    WordId a = store.require("a");
    std::vector<WordId> excl{a};
    CHECK_THROWS_AS((void)store.rank_of(q, a, excl), Error);
}

TEST_CASE("top_k: toy store examples, with and without exclusions") {
    auto store = toy_store();
    QueryVector q{{1.0, 0.0, 0.0}, true};

    auto top2 = store.top_k(q, 2);
    REQUIRE(top2.size() == 2);
    CHECK(store.word(top2[0].id) == "a");
    CHECK(top2[0].cosine == doctest::Approx(1.0));
    CHECK(store.word(top2[1].id) == "c");
    CHECK(top2[1].cosine == doctest::Approx(0.7071067811865475).epsilon(1e-7));

    std::vector<WordId> excl{store.require("a")};
    auto rest = store.top_k(q, 5, excl);
    REQUIRE(rest.size() == 2);
    CHECK(store.word(rest[0].id) == "c");
    CHECK(store.word(rest[1].id) == "b");
    CHECK(rest[1].cosine == doctest::Approx(0.0));
}

TEST_CASE("property: rank multiset is a permutation and top_k prefixes the full order") {
    std::mt19937_64 rng(20240811);
    for (int round = 0; round < 25; ++round) {
        std::size_t vocab = 2 + rng() % 40;
        std::size_t dim = 1 + rng() % 8;
        auto store = store_from_text(random_store_text(rng, vocab, dim, true));
        BruteForce oracle(store);
        QueryVector q = random_query(rng, store.dim());

        std::set<std::uint32_t> seen;
        for (WordId w = 0; w < store.size(); ++w) {
            std::uint32_t r = store.rank_of(q, w);
            CHECK(r >= 1);
            CHECK(r <= store.size());
            CHECK(seen.insert(r).second);  // permutation: no repeats
            CHECK(r == oracle.rank(q, w, {}));
        }

        auto full = store.top_k(q, store.size());
        auto expected = oracle.full_order(q, {});
        REQUIRE(full.size() == expected.size());
        for (std::size_t i = 0; i < full.size(); ++i) {
            CHECK(full[i].id == expected[i].id);
        }
        std::size_t k = 1 + rng() % store.size();
        auto prefix = store.top_k(q, k);
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            CHECK(prefix[i].id == full[i].id);
        }
    }
}

TEST_CASE("ranks_of_many matches repeated rank_of in one pass") {
    std::mt19937_64 rng(7);
    auto store = store_from_text(random_store_text(rng, 30, 5, true));
    QueryVector q = random_query(rng, 5);
    std::vector<WordId> targets{0, 7, 13, 29, 13};
    auto many = store.ranks_of_many(q, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        CHECK(many[i] == store.rank_of(q, targets[i]));
    }
}

TEST_CASE("binary cache round-trips and is sniffed by magic") {
    auto store = store_from_text("alpha 1 0 0\nbeta 0 2 0\ngamma 1 1 1\n");
    std::stringstream cache;
    store.write_cache(cache);

    CHECK(EmbeddingStore::sniff_cache(cache));
    auto loaded = EmbeddingStore::load_cache(cache);
    CHECK(loaded.size() == store.size());
    CHECK(loaded.dim() == store.dim());
    for (WordId i = 0; i < store.size(); ++i) {
        CHECK(loaded.word(i) == store.word(i));
        auto a = store.row(i);
        auto b = loaded.row(i);
        for (std::size_t j = 0; j < store.dim(); ++j) CHECK(a[j] == b[j]);
    }
    CHECK_FALSE(loaded.has_original_norms());

    std::stringstream text("alpha 1 0 0\n");
    CHECK_FALSE(EmbeddingStore::sniff_cache(text));
    std::stringstream trash("ALAB9\0 more", std::ios::in | std::ios::out | std::ios::binary);
    CHECK_THROWS_AS(EmbeddingStore::load_cache(trash), Error);
}

TEST_CASE("effective_size dedups exclusions and ignores out-of-range ids") {
    auto store = toy_store();
    std::vector<WordId> excl{0, 0, 2, 99};
    CHECK(store.effective_size(excl) == 1);
    CHECK(store.effective_size({}) == 3);
}

TEST_CASE("query validation: dimension and normalized-flag checks") {
    auto store = toy_store();
    QueryVector wrong_dim{{1.0, 0.0}, false};
    CHECK_THROWS_AS((void)store.cosine_to(wrong_dim, 0), Error);
    QueryVector not_unit{{2.0, 0.0, 0.0}, true};
    CHECK_THROWS_AS((void)store.cosine_to(not_unit, 0), Error);
}
