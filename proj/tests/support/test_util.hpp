#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "alab/embedding_store.hpp"

namespace alab::test {

inline EmbeddingStore store_from_text(const std::string& text, const LoadOptions& options = {}) {
    std::istringstream in(text);
    return EmbeddingStore::load_text(in, options);
}

// The spec's toy store: a=(1,0,0), b=(0,1,0), c=unit(1,1,0).
inline EmbeddingStore toy_store() {
    return store_from_text("a 1 0 0\nb 0 1 0\nc 1 1 0\n");
}

// Brute-force oracle kept independent of EmbeddingStore's scan: its own dot
// product, a full O(V log V) sort with the competition tie-break, and an
// O(V) counting rank.
struct BruteForce {
    std::vector<std::vector<double>> rows;  // copies of the store's unit rows
    bool normalized_query = false;

    explicit BruteForce(const EmbeddingStore& store) {
        rows.reserve(store.size());
        for (WordId i = 0; i < store.size(); ++i) {
            auto row = store.row(i);
            rows.emplace_back(row.begin(), row.end());
        }
    }

    double score(const QueryVector& q, WordId id) const {
        double s = 0.0;
        for (std::size_t j = 0; j < q.values.size(); ++j) s += q.values[j] * rows[id][j];
        if (q.normalized) s = std::clamp(s, -1.0, 1.0);
        return s;
    }

    // Full ordering: descending score, ties by ascending id, exclusions removed.
    std::vector<ScoredWord> full_order(const QueryVector& q, const std::vector<WordId>& excl) const {
        std::vector<ScoredWord> order;
        for (WordId i = 0; i < rows.size(); ++i) {
            if (std::find(excl.begin(), excl.end(), i) != excl.end()) continue;
            order.push_back({i, score(q, i)});
        }
        std::sort(order.begin(), order.end(), [](const ScoredWord& a, const ScoredWord& b) {
            if (a.cosine != b.cosine) return a.cosine > b.cosine;
            return a.id < b.id;
        });
        return order;
    }

    std::uint32_t rank(const QueryVector& q, WordId target, const std::vector<WordId>& excl) const {
        double ts = score(q, target);
        std::uint32_t greater = 0, ties = 0;
        for (WordId i = 0; i < rows.size(); ++i) {
            if (i == target) continue;
            if (std::find(excl.begin(), excl.end(), i) != excl.end()) continue;
            double s = score(q, i);
            if (s > ts) ++greater;
            else if (s == ts && i < target) ++ties;
        }
        return 1 + greater + ties;
    }
};

// Random toy store with optional duplicated rows to force exact cosine
// ties. Deterministic for a given seed.
inline std::string random_store_text(std::mt19937_64& rng, std::size_t vocab, std::size_t dim,
                                     bool with_duplicates) {
    std::ostringstream out;
    std::vector<std::vector<double>> made;
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    for (std::size_t i = 0; i < vocab; ++i) {
        std::vector<double> v(dim);
        if (with_duplicates && !made.empty() && (rng() % 4 == 0)) {
            v = made[rng() % made.size()];  // exact duplicate -> exact tie
        } else {
            double norm_sq = 0.0;
            do {
                norm_sq = 0.0;
                for (double& x : v) {
                    x = uniform();
                    norm_sq += x * x;
                }
            } while (norm_sq < 1e-6);
        }
        made.push_back(v);
        out << "t" << i;
        for (double x : v) out << ' ' << x;
        out << '\n';
    }
    return out.str();
}

inline QueryVector random_query(std::mt19937_64& rng, std::size_t dim) {
    QueryVector q;
    q.values.resize(dim);
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (double& x : q.values) {
            x = (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
            norm_sq += x * x;
        }
    } while (norm_sq < 1e-6);
    double norm = std::sqrt(norm_sq);
    for (double& x : q.values) x /= norm;
    q.normalized = true;
    return q;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("alab_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace alab::test
