#include "alab/errors.hpp"

namespace alab {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Io: return "io";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::EmptyInput: return "empty_input";
        case ErrorKind::Oov: return "oov";
        case ErrorKind::DegenerateQuery: return "degenerate_query";
        case ErrorKind::DegenerateRelation: return "degenerate_relation";
        case ErrorKind::ZeroVariance: return "zero_variance";
        case ErrorKind::RankDeficient: return "rank_deficient";
        case ErrorKind::Infeasible: return "infeasible";
    }
    return "unknown";
}

}  // namespace alab
