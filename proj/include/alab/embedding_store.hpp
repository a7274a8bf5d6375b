#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace alab {

using WordId = std::uint32_t;

// A query direction in embedding space. Values are kept in double precision;
// store rows are f32 and get promoted during the dot product.
struct QueryVector {
    std::vector<double> values;
    bool normalized = false;
};

struct LoadOptions {
    std::optional<std::size_t> expected_dim;
    bool lowercase = false;  // fold words with ASCII tolower before insertion
};

struct ScoredWord {
    WordId id;
    double cosine;
};

// Immutable vocabulary plus a row-major matrix of unit-L2 f32 rows. All
// queries are exact full-vocabulary scans; per-row accumulation order is
// fixed, so results are bit-identical regardless of how callers parallelize
// across queries. Safe for concurrent reads.
class EmbeddingStore {
public:
    // Text format: one `word f1 ... fd` per line, single spaces, UTF-8, no
    // header. Dimensionality is taken from the first row unless
    // options.expected_dim is set. A row whose word itself contains spaces
    // (as in some published GloVe files) is accepted when the trailing d
    // fields parse as numbers; the word is kept byte-exact.
    //
    // Dropped-and-counted rows: zero-norm vectors, non-finite values,
    // duplicate words (first occurrence wins), float parse failures.
    // Hard errors: empty input, rows whose numeric field count disagrees
    // with d.
    static EmbeddingStore load_text(std::istream& in, const LoadOptions& options = {});

    // Binary cache: magic "ALAB1\0", u32 dim (LE), u64 vocab size (LE),
    // length-prefixed UTF-8 words (u32 LE lengths), then |V|*d f32 (LE)
    // normalized values.
    static EmbeddingStore load_cache(std::istream& in);
    void write_cache(std::ostream& out) const;
    static bool sniff_cache(std::istream& in);  // checks magic, rewinds

    // Loads either format from disk, sniffing the magic bytes.
    static EmbeddingStore load_file(const std::string& path, const LoadOptions& options = {});

    std::size_t size() const { return words_.size(); }
    std::size_t dim() const { return dim_; }
    std::size_t norms_dropped() const { return norms_dropped_; }

    std::optional<WordId> find(std::string_view word) const;
    WordId require(std::string_view word) const;  // throws ErrorKind::Oov
    bool contains(std::string_view word) const { return find(word).has_value(); }
    const std::string& word(WordId id) const { return words_[id]; }
    std::span<const float> row(WordId id) const {
        return {matrix_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }

    // L2 norm each row had before normalization; empty when the store came
    // from a binary cache (the cache format stores normalized values only).
    bool has_original_norms() const { return !original_norms_.empty(); }
    float original_norm(WordId id) const { return original_norms_[id]; }

    double cosine(WordId w1, WordId w2) const;
    double cosine(std::string_view w1, std::string_view w2) const;
    double cosine_to(const QueryVector& q, WordId target) const;

    // Competition rank of `target` among non-excluded words: 1 + the number
    // of words with strictly greater cosine to q, plus equal-cosine words
    // with a smaller WordId. Rank 1 is best.
    std::uint32_t rank_of(const QueryVector& q, WordId target, std::span<const WordId> exclusions = {}) const;

    // Ranks several targets against the same query in one matrix pass.
    std::vector<std::uint32_t> ranks_of_many(const QueryVector& q, std::span<const WordId> targets,
                                             std::span<const WordId> exclusions = {}) const;

    // First min(k, |V| - |exclusions|) words by descending cosine, ties by
    // ascending WordId.
    std::vector<ScoredWord> top_k(const QueryVector& q, std::size_t k,
                                  std::span<const WordId> exclusions = {}) const;

    // Vocabulary size minus the distinct in-vocabulary exclusions; the
    // denominator for rank percentiles.
    std::size_t effective_size(std::span<const WordId> exclusions) const;

private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    EmbeddingStore() = default;
    void check_query(const QueryVector& q) const;
    double dot_row(std::span<const double> q, WordId id) const;

    std::size_t dim_ = 0;
    std::size_t norms_dropped_ = 0;
    std::vector<std::string> words_;
    std::vector<float> matrix_;          // size() * dim_, row-major, unit rows
    std::vector<float> original_norms_;  // pre-normalization norms (text loads)
    std::unordered_map<std::string, WordId, StringHash, std::equal_to<>> index_;
};

}  // namespace alab
