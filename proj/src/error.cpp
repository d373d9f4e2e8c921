#include "gmethods/error.hpp"

namespace gmethods {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_column: return "MissingColumn";
    case ErrorKind::non_binary_treatment: return "NonBinaryTreatment";
    case ErrorKind::non_contiguous_time: return "NonContiguousTime";
    case ErrorKind::duplicate_row: return "DuplicateRow";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::index_out_of_range: return "IndexOutOfRange";
    case ErrorKind::empty_input: return "EmptyInput";
    case ErrorKind::rank_deficient: return "RankDeficient";
    case ErrorKind::separation: return "Separation";
    case ErrorKind::no_convergence: return "NoConvergence";
    case ErrorKind::column_mismatch: return "ColumnMismatch";
    case ErrorKind::unknown_scenario: return "UnknownScenario";
    case ErrorKind::zero_denominator: return "ZeroDenominator";
    case ErrorKind::all_censored: return "AllCensored";
    case ErrorKind::empty_arm: return "EmptyArm";
    case ErrorKind::empty_trial: return "EmptyTrial";
    case ErrorKind::missing_strategy: return "MissingStrategy";
    case ErrorKind::insufficient_replications: return "InsufficientReplications";
    case ErrorKind::unknown_key: return "UnknownKey";
    case ErrorKind::type_mismatch: return "TypeMismatch";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace gmethods
