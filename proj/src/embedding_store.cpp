#include "alab/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>

#include "alab/errors.hpp"

namespace alab {

static_assert(std::endian::native == std::endian::little,
              "binary cache I/O assumes a little-endian host");

namespace {

constexpr char kCacheMagic[6] = {'A', 'L', 'A', 'B', '1', '\0'};

bool parse_value(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t pos = line.find(' ', start);
        if (pos == std::string_view::npos) {
            tokens.push_back(line.substr(start));
            break;
        }
        tokens.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return tokens;
}

std::string ascii_lower(std::string_view word) {
    std::string out(word);
    for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw Error(ErrorKind::Parse, "truncated embedding cache");
    }
    return value;
}

}  // namespace

EmbeddingStore EmbeddingStore::load_text(std::istream& in, const LoadOptions& options) {
    EmbeddingStore store;
    if (options.expected_dim) {
        if (*options.expected_dim < 1) {
            throw Error(ErrorKind::Usage, "expected_dim must be >= 1");
        }
        store.dim_ = *options.expected_dim;
    }

    std::string line;
    std::size_t line_no = 0;
    std::vector<double> values;
    bool dim_known = options.expected_dim.has_value();

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        auto tokens = split_spaces(line);
        if (tokens.size() < 2) {
            ++store.norms_dropped_;
            continue;
        }

        std::size_t d = dim_known ? store.dim_ : tokens.size() - 1;
        if (d < 1) {
            ++store.norms_dropped_;
            continue;
        }

        // Fast path: word is the first token and exactly d values follow.
        // A token count mismatch is an inconsistent-dimensionality error
        // when the tail is fully numeric; otherwise the extra leading
        // tokens are part of the word (kept byte-exact), as in published
        // GloVe files whose tokens contain spaces.
        values.clear();
        values.reserve(d);
        std::string_view word_view;
        bool structural_ok = false;

        if (tokens.size() == d + 1) {
            structural_ok = true;
            for (std::size_t i = 1; i < tokens.size() && structural_ok; ++i) {
                double v;
                if (!parse_value(tokens[i], v)) structural_ok = false;
                else values.push_back(v);
            }
            word_view = tokens[0];
            if (!structural_ok) {
                ++store.norms_dropped_;  // parse failure
                continue;
            }
        } else {
            bool tail_numeric = tokens.size() > 1;
            for (std::size_t i = 1; i < tokens.size() && tail_numeric; ++i) {
                double v;
                if (!parse_value(tokens[i], v)) tail_numeric = false;
            }
            if (tail_numeric) {
                throw Error(ErrorKind::Parse,
                            "line " + std::to_string(line_no) +
                                ": inconsistent dimensionality: expected " + std::to_string(d) +
                                " values, found " + std::to_string(tokens.size() - 1));
            }
            if (tokens.size() > d + 1) {
                // Multi-token word candidate: last d tokens must be numeric.
                structural_ok = true;
                for (std::size_t i = tokens.size() - d; i < tokens.size() && structural_ok; ++i) {
                    double v;
                    if (!parse_value(tokens[i], v)) structural_ok = false;
                    else values.push_back(v);
                }
                if (structural_ok) {
                    std::size_t word_end = tokens[tokens.size() - d - 1].data() +
                                           tokens[tokens.size() - d - 1].size() - line.data();
                    word_view = std::string_view(line).substr(0, word_end);
                }
            }
            if (!structural_ok) {
                ++store.norms_dropped_;
                continue;
            }
        }

        bool finite = true;
        double norm_sq = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) {
                finite = false;
                break;
            }
            norm_sq += v * v;
        }
        if (!finite || !std::isfinite(norm_sq)) {
            ++store.norms_dropped_;
            continue;
        }
        double norm = std::sqrt(norm_sq);
        if (norm < 1e-30) {
            ++store.norms_dropped_;  // zero vector
            continue;
        }

        std::string word = options.lowercase ? ascii_lower(word_view) : std::string(word_view);
        if (store.index_.contains(word)) {
            ++store.norms_dropped_;  // duplicate, first occurrence wins
            continue;
        }

        if (!dim_known) {
            store.dim_ = d;
            dim_known = true;
        }
        WordId id = static_cast<WordId>(store.words_.size());
        store.words_.push_back(std::move(word));
        store.index_.emplace(store.words_.back(), id);
        store.original_norms_.push_back(static_cast<float>(norm));
        for (double v : values) {
            store.matrix_.push_back(static_cast<float>(v / norm));
        }
    }

    if (store.words_.empty()) {
        throw Error(ErrorKind::EmptyInput, "no vectors");
    }
    return store;
}

EmbeddingStore EmbeddingStore::load_cache(std::istream& in) {
    char magic[6];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
        throw Error(ErrorKind::Parse, "bad embedding cache magic");
    }
    auto dim = read_le<std::uint32_t>(in);
    auto vocab = read_le<std::uint64_t>(in);
    if (dim == 0 || vocab == 0) {
        throw Error(ErrorKind::Parse, "embedding cache has zero dimensions or vocabulary");
    }

    EmbeddingStore store;
    store.dim_ = dim;
    store.words_.reserve(vocab);
    store.index_.reserve(vocab);
    for (std::uint64_t i = 0; i < vocab; ++i) {
        auto len = read_le<std::uint32_t>(in);
        std::string word(len, '\0');
        if (len > 0 && !in.read(word.data(), len)) {
            throw Error(ErrorKind::Parse, "truncated embedding cache");
        }
        WordId id = static_cast<WordId>(store.words_.size());
        store.words_.push_back(std::move(word));
        auto [it, inserted] = store.index_.emplace(store.words_.back(), id);
        if (!inserted) {
            throw Error(ErrorKind::Parse, "embedding cache contains duplicate word: '" + store.words_.back() + "'");
        }
    }
    store.matrix_.resize(static_cast<std::size_t>(vocab) * dim);
    if (!in.read(reinterpret_cast<char*>(store.matrix_.data()),
                 static_cast<std::streamsize>(store.matrix_.size() * sizeof(float)))) {
        throw Error(ErrorKind::Parse, "truncated embedding cache");
    }
    return store;
}

void EmbeddingStore::write_cache(std::ostream& out) const {
    out.write(kCacheMagic, sizeof(kCacheMagic));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(words_.size()));
    for (const auto& word : words_) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(word.size()));
        out.write(word.data(), static_cast<std::streamsize>(word.size()));
    }
    out.write(reinterpret_cast<const char*>(matrix_.data()),
              static_cast<std::streamsize>(matrix_.size() * sizeof(float)));
    if (!out) {
        throw Error(ErrorKind::Io, "failed to write embedding cache");
    }
}

bool EmbeddingStore::sniff_cache(std::istream& in) {
    char magic[6] = {};
    in.read(magic, sizeof(magic));
    bool is_cache = in.gcount() == sizeof(magic) && std::memcmp(magic, kCacheMagic, sizeof(magic)) == 0;
    in.clear();
    in.seekg(0);
    return is_cache;
}

EmbeddingStore EmbeddingStore::load_file(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open embeddings file: " + path);
    }
    if (sniff_cache(in)) {
        return load_cache(in);
    }
    return load_text(in, options);
}

std::optional<WordId> EmbeddingStore::find(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

WordId EmbeddingStore::require(std::string_view word) const {
    auto id = find(word);
    if (!id) throw_oov(std::string(word));
    return *id;
}

double EmbeddingStore::dot_row(std::span<const double> q, WordId id) const {
    const float* r = matrix_.data() + static_cast<std::size_t>(id) * dim_;
    // Four fixed-lane partials summed in a fixed order; bit-reproducible for
    // a given dimensionality no matter how callers thread their batches.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    const std::size_t d4 = dim_ & ~static_cast<std::size_t>(3);
    for (; j < d4; j += 4) {
        s0 += q[j] * static_cast<double>(r[j]);
        s1 += q[j + 1] * static_cast<double>(r[j + 1]);
        s2 += q[j + 2] * static_cast<double>(r[j + 2]);
        s3 += q[j + 3] * static_cast<double>(r[j + 3]);
    }
    for (; j < dim_; ++j) s0 += q[j] * static_cast<double>(r[j]);
    return (s0 + s1) + (s2 + s3);
}

void EmbeddingStore::check_query(const QueryVector& q) const {
    if (q.values.size() != dim_) {
        throw Error(ErrorKind::Parse, "query dimensionality " + std::to_string(q.values.size()) +
                                          " does not match store dimensionality " + std::to_string(dim_));
    }
    if (q.normalized) {
        double norm_sq = 0.0;
        for (double v : q.values) norm_sq += v * v;
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
            throw Error(ErrorKind::Parse, "query marked normalized but L2 norm deviates from 1");
        }
    }
}

double EmbeddingStore::cosine(WordId w1, WordId w2) const {
    std::span<const float> a = row(w1);
    const float* b = matrix_.data() + static_cast<std::size_t>(w2) * dim_;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    const std::size_t d4 = dim_ & ~static_cast<std::size_t>(3);
    for (; j < d4; j += 4) {
        s0 += static_cast<double>(a[j]) * static_cast<double>(b[j]);
        s1 += static_cast<double>(a[j + 1]) * static_cast<double>(b[j + 1]);
        s2 += static_cast<double>(a[j + 2]) * static_cast<double>(b[j + 2]);
        s3 += static_cast<double>(a[j + 3]) * static_cast<double>(b[j + 3]);
    }
    for (; j < dim_; ++j) s0 += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    return std::clamp((s0 + s1) + (s2 + s3), -1.0, 1.0);
}

double EmbeddingStore::cosine(std::string_view w1, std::string_view w2) const {
    return cosine(require(w1), require(w2));
}

double EmbeddingStore::cosine_to(const QueryVector& q, WordId target) const {
    check_query(q);
    double d = dot_row(q.values, target);
    // Only a unit query yields a true cosine; raw inner products must keep
    // their magnitude so rankings with unnormalized queries stay monotone.
    return q.normalized ? std::clamp(d, -1.0, 1.0) : d;
}

std::size_t EmbeddingStore::effective_size(std::span<const WordId> exclusions) const {
    std::vector<WordId> distinct(exclusions.begin(), exclusions.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::size_t in_vocab = 0;
    for (WordId id : distinct) {
        if (id < size()) ++in_vocab;
    }
    return size() - in_vocab;
}

std::uint32_t EmbeddingStore::rank_of(const QueryVector& q, WordId target,
                                      std::span<const WordId> exclusions) const {
    WordId targets[1] = {target};
    return ranks_of_many(q, targets, exclusions)[0];
}

std::vector<std::uint32_t> EmbeddingStore::ranks_of_many(const QueryVector& q,
                                                         std::span<const WordId> targets,
                                                         std::span<const WordId> exclusions) const {
    check_query(q);
    std::vector<WordId> excl(exclusions.begin(), exclusions.end());
    std::sort(excl.begin(), excl.end());
    excl.erase(std::unique(excl.begin(), excl.end()), excl.end());

    const std::size_t nt = targets.size();
    std::vector<double> target_score(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        WordId t = targets[i];
        if (t >= size()) {
            throw Error(ErrorKind::Oov, "rank target id out of range");
        }
        if (std::binary_search(excl.begin(), excl.end(), t)) {
            throw Error(ErrorKind::Usage, "rank target '" + words_[t] + "' is excluded");
        }
        target_score[i] = cosine_to(q, t);
    }

    std::vector<std::uint32_t> greater(nt, 0), ties_before(nt, 0);
    const bool clamp = q.normalized;
    const WordId n = static_cast<WordId>(size());
    for (WordId w = 0; w < n; ++w) {
        if (!excl.empty() && std::binary_search(excl.begin(), excl.end(), w)) continue;
        double score = dot_row(q.values, w);
        if (clamp) score = std::clamp(score, -1.0, 1.0);
        for (std::size_t i = 0; i < nt; ++i) {
            if (w == targets[i]) continue;
            if (score > target_score[i]) {
                ++greater[i];
            } else if (score == target_score[i] && w < targets[i]) {
                ++ties_before[i];
            }
        }
    }

    std::vector<std::uint32_t> ranks(nt);
    for (std::size_t i = 0; i < nt; ++i) ranks[i] = 1 + greater[i] + ties_before[i];
    return ranks;
}

std::vector<ScoredWord> EmbeddingStore::top_k(const QueryVector& q, std::size_t k,
                                              std::span<const WordId> exclusions) const {
    if (k < 1) {
        throw Error(ErrorKind::Usage, "top_k requires k >= 1");
    }
    check_query(q);
    std::vector<WordId> excl(exclusions.begin(), exclusions.end());
    std::sort(excl.begin(), excl.end());
    excl.erase(std::unique(excl.begin(), excl.end()), excl.end());

    // better(a, b): higher score first, ties by ascending WordId.
    auto better = [](const ScoredWord& a, const ScoredWord& b) {
        if (a.cosine != b.cosine) return a.cosine > b.cosine;
        return a.id < b.id;
    };

    // Bounded selection: priority queue whose top is the current worst.
    std::priority_queue<ScoredWord, std::vector<ScoredWord>, decltype(better)> worst_on_top(better);
    const bool clamp = q.normalized;
    const WordId n = static_cast<WordId>(size());
    for (WordId w = 0; w < n; ++w) {
        if (!excl.empty() && std::binary_search(excl.begin(), excl.end(), w)) continue;
        double score = dot_row(q.values, w);
        if (clamp) score = std::clamp(score, -1.0, 1.0);
        ScoredWord entry{w, score};
        if (worst_on_top.size() < k) {
            worst_on_top.push(entry);
        } else if (better(entry, worst_on_top.top())) {
            worst_on_top.pop();
            worst_on_top.push(entry);
        }
    }

    std::vector<ScoredWord> out;
    out.reserve(worst_on_top.size());
    while (!worst_on_top.empty()) {
        out.push_back(worst_on_top.top());
        worst_on_top.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace alab
