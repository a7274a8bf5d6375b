#pragma once

#include <stdexcept>
#include <string>

namespace alab {

// Error taxonomy mirrored by the CLI exit codes: usage errors exit 1, data
// errors (bad or missing input) exit 2, numeric errors (degenerate geometry
// or statistics) exit 3.
enum class ErrorKind {
    Usage,
    Io,
    Parse,
    EmptyInput,
    Oov,
    DegenerateQuery,
    DegenerateRelation,
    ZeroVariance,
    RankDeficient,
    Infeasible,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    bool is_usage() const noexcept { return kind_ == ErrorKind::Usage; }

    bool is_numeric() const noexcept {
        return kind_ == ErrorKind::DegenerateQuery || kind_ == ErrorKind::DegenerateRelation ||
               kind_ == ErrorKind::ZeroVariance || kind_ == ErrorKind::RankDeficient;
    }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

[[noreturn]] inline void throw_oov(const std::string& word) {
    throw Error(ErrorKind::Oov, "out-of-vocabulary word: '" + word + "'");
}

}  // namespace alab
