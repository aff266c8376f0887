#pragma once

#include <stdexcept>
#include <string>

namespace mkinf {

enum class ErrorCode {
  invalid_measure,
  invalid_argument,
  dimension_mismatch,
  solver_failure,
  non_convergence,
  cap_exceeded,
  not_invertible,
  unmatched_support,
  missing_map,
  parse_error,
  validation_failure,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_measure: return "invalid_measure";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::solver_failure: return "solver_failure";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::cap_exceeded: return "cap_exceeded";
    case ErrorCode::not_invertible: return "not_invertible";
    case ErrorCode::unmatched_support: return "unmatched_support";
    case ErrorCode::missing_map: return "missing_map";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::validation_failure: return "validation_failure";
  }
  return "unknown";
}

/// Every failure raised by the library carries a code so the CLI can
/// report it as machine-readable JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by iterative solvers that stop at their iteration cap. The last
/// residual is kept so callers can decide how bad the stall was.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& message, double last_residual, int iterations)
      : Error(ErrorCode::non_convergence, message),
        last_residual_(last_residual),
        iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

}  // namespace mkinf
