#pragma once

#include <stdexcept>
#include <string>

namespace coxscale {

/// Argument outside the mathematical domain of an operation (negative time,
/// nonpositive hazard height, non-dyadic length, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A documented precondition of an operation does not hold.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Iterative solver failed to converge (e.g. monotone partial likelihood).
struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset carries no information for the requested fit (e.g. zero events).
struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinearAlgebraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical quadrature did not reach its accuracy target.
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sample covariance of a credible region is rank deficient.
struct DegenerateRegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coxscale
