#include "alab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>

#include "alab/csv.hpp"
#include "alab/errors.hpp"

namespace alab {

namespace {

std::uint64_t parse_count(const std::string& field, std::size_t line_no) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad count '" + field + "'");
    }
    if (value <= 0) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": count must be >= 1, got " + field);
    }
    return static_cast<std::uint64_t>(value);
}

double parse_real(const std::string& field, std::size_t line_no, const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": bad " + std::string(what) + " '" + field + "'");
    }
    return value;
}

bool parses_as_real(const std::string& field) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

std::uint64_t ResponseDistribution::total_count() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.count;
    return total;
}

std::vector<ResponseDistribution> load_responses(std::istream& in) {
    CsvReader reader(in);
    auto header = reader.next_row();
    if (!header) return {};  // empty file -> empty list

    bool counted;
    if (header->size() == 4) {
        counted = true;
    } else if (header->size() == 3) {
        counted = false;  // raw per-response rows
    } else {
        throw Error(ErrorKind::Parse, "responses header must have 3 or 4 columns, found " +
                                          std::to_string(header->size()));
    }

    // Distributions keyed by (stem, system) in first-appearance order;
    // entries aggregate duplicate d_terms by summing counts.
    std::vector<ResponseDistribution> dists;
    std::map<std::pair<std::string, std::string>, std::size_t> dist_index;

    while (auto row = reader.next_row()) {
        if (row->size() != header->size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(reader.line_number()) + ": expected " +
                                              std::to_string(header->size()) + " fields, found " +
                                              std::to_string(row->size()));
        }
        const std::string& stem_id = (*row)[0];
        const std::string& system = (*row)[1];
        const std::string& d_term = (*row)[2];
        if (stem_id.empty() || system.empty() || d_term.empty()) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(reader.line_number()) + ": empty stem_id, system, or d_term");
        }
        std::uint64_t count = counted ? parse_count((*row)[3], reader.line_number()) : 1;

        auto key = std::make_pair(stem_id, system);
        auto it = dist_index.find(key);
        if (it == dist_index.end()) {
            it = dist_index.emplace(std::move(key), dists.size()).first;
            dists.push_back(ResponseDistribution{stem_id, system, {}});
        }
        auto& entries = dists[it->second].entries;
        auto entry = std::find_if(entries.begin(), entries.end(),
                                  [&](const ResponseEntry& e) { return e.d_term == d_term; });
        if (entry == entries.end()) {
            entries.push_back(ResponseEntry{d_term, count});
        } else {
            entry->count += count;
        }
    }
    return dists;
}

ResponseDistribution filter_min_producers(const ResponseDistribution& dist, std::uint64_t min_count) {
    if (min_count < 1) {
        throw Error(ErrorKind::Usage, "min_count must be >= 1");
    }
    ResponseDistribution out{dist.stem_id, dist.system, {}};
    for (const auto& e : dist.entries) {
        if (e.count >= min_count) out.entries.push_back(e);
    }
    return out;
}

ResponseDistribution modal_responses(const ResponseDistribution& dist) {
    if (dist.entries.empty()) {
        throw Error(ErrorKind::EmptyInput, "modal_responses: empty distribution for stem '" + dist.stem_id + "'");
    }
    std::uint64_t max_count = 0;
    for (const auto& e : dist.entries) max_count = std::max(max_count, e.count);
    ResponseDistribution out{dist.stem_id, dist.system, {}};
    for (const auto& e : dist.entries) {
        if (e.count == max_count) out.entries.push_back(e);
    }
    return out;
}

double modal_mass_share(const ResponseDistribution& dist) {
    std::uint64_t total = dist.total_count();
    if (total == 0) {
        throw Error(ErrorKind::EmptyInput, "modal_mass_share: empty distribution");
    }
    return static_cast<double>(modal_responses(dist).total_count()) / static_cast<double>(total);
}

RatingTable RatingTable::load(std::istream& in) {
    CsvReader reader(in);
    auto header = reader.next_row();
    RatingTable table;
    if (!header) return table;
    if (header->size() != 3 && header->size() != 4) {
        throw Error(ErrorKind::Parse,
                    "ratings header must have 3 or 4 columns, found " + std::to_string(header->size()));
    }
    while (auto row = reader.next_row()) {
        if (row->size() != header->size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(reader.line_number()) + ": expected " +
                                              std::to_string(header->size()) + " fields, found " +
                                              std::to_string(row->size()));
        }
        double rating = parse_real((*row)[2], reader.line_number(), "rating");
        if (rating < 1.0 || rating > 7.0) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(reader.line_number()) +
                                              ": rating outside the 7-point scale: " + (*row)[2]);
        }
        auto& slot = table.sums_[{(*row)[0], (*row)[1]}];
        slot.first += rating;
        slot.second += 1;
        ++table.n_rows_;
    }
    return table;
}

RatingTable RatingTable::from_rows(const std::vector<RatingRow>& rows) {
    RatingTable table;
    for (const auto& r : rows) {
        if (r.rating < 1.0 || r.rating > 7.0) {
            throw Error(ErrorKind::Parse, "rating outside the 7-point scale for (" + r.stem_id + ", " +
                                              r.d_term + ")");
        }
        auto& slot = table.sums_[{r.stem_id, r.d_term}];
        slot.first += r.rating;
        slot.second += 1;
        ++table.n_rows_;
    }
    return table;
}

std::optional<double> RatingTable::mean_rating(std::string_view stem_id, std::string_view d_term) const {
    auto it = sums_.find(std::make_pair(std::string(stem_id), std::string(d_term)));
    if (it == sums_.end()) return std::nullopt;
    return it->second.first / static_cast<double>(it->second.second);
}

FrequencyTable::FrequencyTable(double oov_floor) : oov_floor_(oov_floor) {
    if (oov_floor <= 0.0) {
        throw Error(ErrorKind::Usage, "oov_floor must be positive");
    }
}

FrequencyTable FrequencyTable::load(std::istream& in, double oov_floor) {
    FrequencyTable table(oov_floor);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected word<TAB>frequency");
        }
        std::string word = line.substr(0, tab);
        std::string field = line.substr(tab + 1);
        if (line_no == 1 && !parses_as_real(field)) continue;  // optional header
        double freq = parse_real(field, line_no, "frequency");
        if (freq <= 0.0 || freq > 1.0) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(line_no) + ": relative frequency must be in (0, 1], got " + field);
        }
        table.freqs_[std::move(word)] = freq;
    }
    return table;
}

void FrequencyTable::set(std::string word, double frequency) {
    if (frequency <= 0.0 || frequency > 1.0) {
        throw Error(ErrorKind::Usage, "relative frequency must be in (0, 1]");
    }
    freqs_[std::move(word)] = frequency;
}

std::optional<double> FrequencyTable::lookup(std::string_view word) const {
    auto it = freqs_.find(word);
    if (it == freqs_.end()) return std::nullopt;
    return it->second;
}

double FrequencyTable::log_frequency(std::string_view word) const {
    auto freq = lookup(word);
    return std::log(freq.value_or(oov_floor_));
}

std::vector<AnalogyStem> load_stems(std::istream& in) {
    CsvReader reader(in);
    auto header = reader.next_row();
    if (!header) return {};
    if (header->size() < 4 || header->size() > 6) {
        throw Error(ErrorKind::Parse,
                    "stems header must have 4 to 6 columns, found " + std::to_string(header->size()));
    }
    std::vector<AnalogyStem> stems;
    while (auto row = reader.next_row()) {
        if (row->size() != header->size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(reader.line_number()) + ": expected " +
                                              std::to_string(header->size()) + " fields, found " +
                                              std::to_string(row->size()));
        }
        AnalogyStem stem;
        stem.id = (*row)[0];
        stem.a = (*row)[1];
        stem.b = (*row)[2];
        stem.c = (*row)[3];
        if (row->size() > 4) stem.relation_category = (*row)[4];
        if (row->size() > 5) stem.relation_subtype = (*row)[5];
        if (stem.id.empty() || stem.a.empty() || stem.b.empty() || stem.c.empty()) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(reader.line_number()) + ": stem_id, a, b, c must be non-empty");
        }
        stems.push_back(std::move(stem));
    }
    return stems;
}

}  // namespace alab
