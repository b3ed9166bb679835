#pragma once

#include <stdexcept>
#include <string>

namespace wlfrail {

/// An iterative routine exhausted its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature could not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Newton step or an information matrix turned out non-invertible.
/// Carries the offending eigenvalue so callers can report how degenerate
/// the problem is (0 for a flat direction, negative for indefiniteness).
class SingularHessianError : public std::runtime_error {
 public:
  SingularHessianError(const std::string& msg, double eigenvalue)
      : std::runtime_error(msg + " (offending eigenvalue " +
                           std::to_string(eigenvalue) + ")"),
        offending_eigenvalue(eigenvalue) {}

  double offending_eigenvalue;
};

/// Malformed input data: CSV parse failures, schema violations, bad
/// scenario files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wlfrail
