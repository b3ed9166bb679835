#pragma once

namespace wlfrail {

/// ln Gamma(x) for x > 0 (Lanczos approximation).
double log_gamma(double x);

/// Digamma psi(x) for x > 0 (recurrence into the asymptotic region).
double digamma(double x);

/// Regularized lower incomplete gamma P(shape, x) = gamma(shape, x) / Gamma(shape),
/// shape > 0, x >= 0. Series for x < shape + 1, continued fraction otherwise.
double reg_inc_gamma_lower(double shape, double x);

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt for x > 0.
double exp_integral_e1(double x);

}  // namespace wlfrail
