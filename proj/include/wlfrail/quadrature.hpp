#pragma once

#include <functional>
#include <limits>

namespace wlfrail {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 200;
};

struct QuadratureResult {
  double value;
  double err_est;
};

/// Adaptive Gauss-Kronrod (G7, K15) integration of f over (lower, upper).
/// upper may be +infinity, handled by the substitution t = lower + u/(1-u).
/// Throws QuadratureError when the subdivision budget is exhausted before
/// the tolerance max(abs_tol, rel_tol * |value|) is met, and std::domain_error
/// on invalid specs or bounds.
QuadratureResult integrate_adaptive(
    const std::function<double(double)>& f, double lower, double upper,
    const QuadratureSpec& spec = QuadratureSpec{});

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace wlfrail
