#pragma once

#include <cstdint>
#include <vector>

#include "wlfrail/rng.hpp"

namespace wlfrail {

/// Two-parameter weighted Lindley law WL(alpha, phi):
///   f(z) = alpha^{phi+1} z^{phi-1} (1+z) e^{-alpha z} / ((alpha+phi) Gamma(phi)),
/// a known-weight mixture of Gamma(phi, rate alpha) and Gamma(phi+1, rate alpha)
/// with weight omega = alpha / (alpha + phi) on the first component.
struct WLGeneral {
  double alpha;  // scale-rate parameter, > 0
  double phi;    // shape parameter, > 0

  WLGeneral(double alpha_, double phi_);
  double mixture_weight() const { return alpha / (alpha + phi); }
};

/// Unit-mean reparameterization WL(theta): the member with mean 1 and
/// variance theta, via
///   b_theta = 4 / (theta (theta+4)),   a_theta = theta (theta+4) / (2 (theta+2)),
/// shape phi = b_theta and rate alpha = 1/a_theta = sqrt(b_theta (b_theta+1)).
struct WLFrailty {
  double theta;
  double a_theta;
  double b_theta;

  /// theta must lie in the admissible fitting range [1e-6, 1e3].
  explicit WLFrailty(double theta_);
  WLGeneral general() const { return WLGeneral(1.0 / a_theta, b_theta); }
  /// Weight of the Gamma(b_theta, scale a_theta) mixture component,
  /// (theta+2)/(theta+4).
  double mixture_weight() const { return (theta + 2.0) / (theta + 4.0); }
};

double log_pdf_general(double z, const WLGeneral& d);
double pdf_general(double z, const WLGeneral& d);

struct WLMoments {
  double mean;
  double variance;
  double elog;  // E[log Z]
};
WLMoments moments_general(const WLGeneral& d);

/// The unit-mean member as a WLGeneral; alpha is exactly 1/a_theta.
WLGeneral reparam(double theta);

/// F(z) = omega P(phi, alpha z) + (1-omega) P(phi+1, alpha z).
double cdf(double z, const WLGeneral& d);

/// Laplace transform L(s) = (1 + a_theta s)^{-b_theta - 1} (1 + theta s / 2),
/// s >= 0.
double laplace(double s, const WLFrailty& f);

/// d-th derivative of the Laplace transform at s:
///   L^{(d)}(s) = (-1)^d pi_d(b) a^{d-1} (1 + a s)^{-b-d-1}
///                (1 + theta (s + d - 1) / (theta + 2)),
/// pi_1 = 1, pi_d(b) = prod_{i=1}^{d-1} (b + i). Stable for large d: the
/// product is accumulated as log Gamma differences.
double laplace_deriv(int d, double s, const WLFrailty& f);

/// log |L^{(d)}(s)|; the sign of L^{(d)}(s) is (-1)^d.
double log_abs_laplace_deriv(int d, double s, const WLFrailty& f);

/// One draw from the gamma-mixture representation.
double sample_one(const WLFrailty& f, Rng& rng);

/// n i.i.d. draws, deterministic given the seed.
std::vector<double> sample(std::size_t n, const WLFrailty& f,
                           std::uint64_t seed);

}  // namespace wlfrail
