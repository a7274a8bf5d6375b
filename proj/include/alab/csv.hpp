#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alab {

// Splits one CSV record. Handles double-quoted fields with embedded commas
// and "" escapes; multi-line fields are not supported (none of the file
// schemas need them).
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a value when it contains a comma, quote, or newline.
std::string csv_escape(std::string_view value);

// Line-oriented CSV reader that tracks 1-based line numbers for error
// reporting. Blank lines are skipped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    std::optional<std::vector<std::string>> next_row();
    std::size_t line_number() const { return line_number_; }

private:
    std::istream& in_;
    std::size_t line_number_ = 0;
};

// Shortest round-trip decimal form of a double (std::to_chars), used for all
// numeric CSV output so reruns are byte-identical.
std::string format_double(double value);

}  // namespace alab
