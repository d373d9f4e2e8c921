#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmethods {

enum class ErrorKind {
  missing_column,
  non_binary_treatment,
  non_contiguous_time,
  duplicate_row,
  parse_error,
  index_out_of_range,
  empty_input,
  rank_deficient,
  separation,
  no_convergence,
  column_mismatch,
  unknown_scenario,
  zero_denominator,
  all_censored,
  empty_arm,
  empty_trial,
  missing_strategy,
  insufficient_replications,
  unknown_key,
  type_mismatch,
  io_error,
  invalid_argument,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the study
// runner in particular) can record it as a cell status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gmethods
