// SPDX-License-Identifier: MIT
/**
    \file
    \brief error codes shared by every module

    A single exception type carries a machine-readable code so that the CLI can
    map failures onto its exit-code contract without string matching.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace electrovac {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  singular_point,
  non_finite_result,
  empty_level_set,
  degenerate_gradient,
  non_positive_conformal_factor,
  domain_violation,
  coincident_centers,
  zero_slope,
  degenerate_discriminant,
  non_positive_lower_bound,
  not_separable,
  quadrature_failure,
  singular_coefficient,
  constraint_drift,
  step_failure,
  out_of_profile_range,
  stationary_lapse,
  inconsistent_initial_data,
  empty_region,
  failure_budget_exceeded,
  config_error,
};

constexpr auto to_string(ErrorCode code) noexcept -> std::string_view {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::singular_point: return "SingularPoint";
    case ErrorCode::non_finite_result: return "NonFiniteResult";
    case ErrorCode::empty_level_set: return "EmptyLevelSet";
    case ErrorCode::degenerate_gradient: return "DegenerateGradient";
    case ErrorCode::non_positive_conformal_factor: return "NonPositiveConformalFactor";
    case ErrorCode::domain_violation: return "DomainViolation";
    case ErrorCode::coincident_centers: return "CoincidentCenters";
    case ErrorCode::zero_slope: return "ZeroSlope";
    case ErrorCode::degenerate_discriminant: return "DegenerateDiscriminant";
    case ErrorCode::non_positive_lower_bound: return "NonPositiveLowerBound";
    case ErrorCode::not_separable: return "NotSeparable";
    case ErrorCode::quadrature_failure: return "QuadratureFailure";
    case ErrorCode::singular_coefficient: return "SingularCoefficient";
    case ErrorCode::constraint_drift: return "ConstraintDrift";
    case ErrorCode::step_failure: return "StepFailure";
    case ErrorCode::out_of_profile_range: return "OutOfProfileRange";
    case ErrorCode::stationary_lapse: return "StationaryLapse";
    case ErrorCode::inconsistent_initial_data: return "InconsistentInitialData";
    case ErrorCode::empty_region: return "EmptyRegion";
    case ErrorCode::failure_budget_exceeded: return "FailureBudgetExceeded";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  auto code() const noexcept -> ErrorCode { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace electrovac
