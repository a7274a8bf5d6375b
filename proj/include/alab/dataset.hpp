#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alab/rules.hpp"

namespace alab {

struct ResponseEntry {
    std::string d_term;
    std::uint64_t count = 0;  // production count, >= 1
};

// Per-stem multiset of completions produced by one system ("human" or a
// model name). d_terms are unique; entry order is input order.
struct ResponseDistribution {
    std::string stem_id;
    std::string system;
    std::vector<ResponseEntry> entries;

    std::uint64_t total_count() const;
};

// `stem_id,system,d_term,count` rows (CSV with header), or raw per-response
// `stem_id,system,d_term` rows that aggregate to count 1 each. Duplicate
// (stem, system, d_term) rows sum their counts. Word forms are preserved
// byte-exact.
std::vector<ResponseDistribution> load_responses(std::istream& in);

// Drops entries produced fewer than min_count times. The result may be
// empty; downstream stages flag that rather than erroring here.
ResponseDistribution filter_min_producers(const ResponseDistribution& dist, std::uint64_t min_count = 2);

// Keeps exactly the entries tied for the highest count, weights retained.
ResponseDistribution modal_responses(const ResponseDistribution& dist);

// Share of total production mass carried by the modal entries.
double modal_mass_share(const ResponseDistribution& dist);

struct RatingRow {
    std::string stem_id;
    std::string d_term;
    double rating = 0.0;  // 7-point scale
    std::string rater_id;  // empty for pre-averaged rows
};

// Human relational-similarity ratings, averaged per (stem, d_term) when
// per-rater rows are present.
class RatingTable {
public:
    static RatingTable load(std::istream& in);
    static RatingTable from_rows(const std::vector<RatingRow>& rows);

    std::optional<double> mean_rating(std::string_view stem_id, std::string_view d_term) const;
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_pairs() const { return sums_.size(); }

private:
    std::map<std::pair<std::string, std::string>, std::pair<double, std::uint64_t>, std::less<>> sums_;
    std::size_t n_rows_ = 0;
};

// word -> relative frequency in (0, 1]. Lookups for unlisted words fall back
// to a configurable floor so log frequency stays finite.
class FrequencyTable {
public:
    FrequencyTable() = default;
    explicit FrequencyTable(double oov_floor);

    // TSV `word<TAB>relative_frequency`, optional header.
    static FrequencyTable load(std::istream& in, double oov_floor = 1e-9);

    void set(std::string word, double frequency);
    std::optional<double> lookup(std::string_view word) const;
    bool contains(std::string_view word) const { return lookup(word).has_value(); }

    // ln(freq) for listed words, ln(oov_floor) otherwise.
    double log_frequency(std::string_view word) const;

    double oov_floor() const { return oov_floor_; }
    std::size_t size() const { return freqs_.size(); }

private:
    std::map<std::string, double, std::less<>> freqs_;
    double oov_floor_ = 1e-9;
};

// `stem_id,a,b,c,relation_category,relation_subtype` (CSV with header; the
// two relation columns may be empty or absent).
std::vector<AnalogyStem> load_stems(std::istream& in);

}  // namespace alab
