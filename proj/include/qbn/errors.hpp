#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qbn {

enum class errc {
  dimension_mismatch,
  negative_rate,
  non_unit_p_coefficient,
  invalid_argument,
  precondition,
  singular_drift,
  unstable_system,
  not_converged,
  degenerate_rates,
  zero_rate,
  singular_matrix,
  zero_reference,
  dimension_overflow,
  truncation_unsound,
};

constexpr std::string_view to_string(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::negative_rate: return "NegativeRate";
    case errc::non_unit_p_coefficient: return "NonUnitPCoefficient";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::precondition: return "PreconditionViolated";
    case errc::singular_drift: return "SingularDrift";
    case errc::unstable_system: return "UnstableSystem";
    case errc::not_converged: return "NotConverged";
    case errc::degenerate_rates: return "DegenerateRates";
    case errc::zero_rate: return "ZeroRate";
    case errc::singular_matrix: return "SingularMatrix";
    case errc::zero_reference: return "ZeroReference";
    case errc::dimension_overflow: return "DimensionOverflow";
    case errc::truncation_unsound: return "TruncationUnsound";
  }
  return "Unknown";
}

// Validation errors reject inputs; everything else is raised by an engine.
constexpr bool is_validation(errc c) {
  return c == errc::dimension_mismatch || c == errc::negative_rate ||
         c == errc::non_unit_p_coefficient || c == errc::invalid_argument;
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace qbn
