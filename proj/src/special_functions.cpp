#include "wlfrail/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wlfrail/errors.hpp"

namespace wlfrail {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Lanczos g = 7, 9-term coefficient set.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,      -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,    12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};

double log_gamma_lanczos(double x) {
  // Valid for x >= 0.5.
  double a = kLanczos[0];
  for (int k = 1; k < 9; ++k) {
    a += kLanczos[k] / (x - 1.0 + k);
  }
  const double t = x + kLanczosG - 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x - 0.5) * std::log(t) - t +
         std::log(a);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("log_gamma: x must be a positive finite real");
  }
  if (x == 1.0 || x == 2.0) {
    return 0.0;
  }
  if (x < 0.5) {
    return log_gamma_lanczos(x + 1.0) - std::log(x);
  }
  return log_gamma_lanczos(x);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("digamma: x must be a positive finite real");
  }
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic series with Bernoulli-number coefficients.
  const double w = 1.0 / (x * x);
  double series =
      w * (1.0 / 12.0 -
           w * (1.0 / 120.0 -
                w * (1.0 / 252.0 -
                     w * (1.0 / 240.0 -
                          w * (1.0 / 132.0 -
                               w * (691.0 / 32760.0 - w / 12.0))))));
  return result + std::log(x) - 0.5 / x - series;
}

double reg_inc_gamma_lower(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape) || !(x >= 0.0) ||
      !std::isfinite(x)) {
    throw std::domain_error(
        "reg_inc_gamma_lower: require shape > 0 and x >= 0, both finite");
  }
  if (x == 0.0) {
    return 0.0;
  }
  const double log_prefix = shape * std::log(x) - x - log_gamma(shape);
  const double eps = std::numeric_limits<double>::epsilon();

  if (x < shape + 1.0) {
    // P(s,x) = e^{s ln x - x - lnG(s)} * sum_{n>=0} x^n / (s (s+1) ... (s+n))
    double term = 1.0 / shape;
    double sum = term;
    double denom = shape;
    for (long n = 1; n < 100000000L; ++n) {
      denom += 1.0;
      term *= x / denom;
      sum += term;
      if (term < sum * eps) {
        return std::min(1.0, std::exp(log_prefix) * sum);
      }
    }
    throw ConvergenceError("reg_inc_gamma_lower: series failed to converge");
  }

  // Q(s,x) via Lentz continued fraction; P = 1 - Q.
  const double tiny = 1e-300;
  double b = x + 1.0 - shape;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (long i = 1; i < 100000000L; ++i) {
    const double an = -static_cast<double>(i) * (i - shape);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) {
      return 1.0 - std::exp(log_prefix) * h;
    }
  }
  throw ConvergenceError(
      "reg_inc_gamma_lower: continued fraction failed to converge");
}

double exp_integral_e1(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("exp_integral_e1: x must be a positive finite real");
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (x <= 1.0) {
    // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 100; ++k) {
      term *= x / k;
      const double contrib = (k % 2 == 1 ? term : -term) / k;
      sum += contrib;
      if (std::fabs(contrib) < eps * std::fabs(sum)) break;
    }
    return -kEulerGamma - std::log(x) + sum;
  }
  // Lentz continued fraction: E1 = e^{-x} / (x + 1 - 1/(x + 3 - 4/(...)))
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (long i = 1; i < 10000000L; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) {
      return std::exp(-x) * h;
    }
  }
  throw ConvergenceError(
      "exp_integral_e1: continued fraction failed to converge");
}

}  // namespace wlfrail
