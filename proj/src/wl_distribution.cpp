#include "wlfrail/wl_distribution.hpp"

#include <cmath>
#include <stdexcept>

#include "wlfrail/special_functions.hpp"

namespace wlfrail {

WLGeneral::WLGeneral(double alpha_, double phi_) : alpha(alpha_), phi(phi_) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !(phi > 0.0) ||
      !std::isfinite(phi)) {
    throw std::domain_error("WLGeneral: alpha and phi must be positive reals");
  }
}

WLFrailty::WLFrailty(double theta_) : theta(theta_) {
  if (!(theta >= 1e-6) || !(theta <= 1e3)) {
    throw std::domain_error(
        "WLFrailty: theta outside the admissible range [1e-6, 1e3]");
  }
  a_theta = theta * (theta + 4.0) / (2.0 * (theta + 2.0));
  b_theta = 4.0 / (theta * (theta + 4.0));
}

double log_pdf_general(double z, const WLGeneral& d) {
  if (!(z > 0.0)) {
    throw std::domain_error("log_pdf_general: z must be positive");
  }
  return (d.phi + 1.0) * std::log(d.alpha) + (d.phi - 1.0) * std::log(z) +
         std::log1p(z) - d.alpha * z - std::log(d.alpha + d.phi) -
         log_gamma(d.phi);
}

double pdf_general(double z, const WLGeneral& d) {
  return std::exp(log_pdf_general(z, d));
}

WLMoments moments_general(const WLGeneral& d) {
  const double a = d.alpha;
  const double p = d.phi;
  WLMoments m;
  m.mean = p * (a + p + 1.0) / (a * (a + p));
  m.variance = ((p + 1.0) * (a + p) * (a + p) - a * a) / (a * a * (a + p) * (a + p));
  m.elog = -a / (p * (a + p)) + digamma(p + 1.0) - std::log(a);
  return m;
}

WLGeneral reparam(double theta) {
  return WLFrailty(theta).general();
}

double cdf(double z, const WLGeneral& d) {
  if (!(z >= 0.0)) {
    throw std::domain_error("cdf: z must be nonnegative");
  }
  if (z == 0.0) return 0.0;
  const double omega = d.mixture_weight();
  return omega * reg_inc_gamma_lower(d.phi, d.alpha * z) +
         (1.0 - omega) * reg_inc_gamma_lower(d.phi + 1.0, d.alpha * z);
}

double laplace(double s, const WLFrailty& f) {
  if (!(s >= 0.0)) {
    throw std::domain_error("laplace: s must be nonnegative");
  }
  return std::exp(-(f.b_theta + 1.0) * std::log1p(f.a_theta * s)) *
         (1.0 + 0.5 * f.theta * s);
}

double log_abs_laplace_deriv(int d, double s, const WLFrailty& f) {
  if (d < 1) {
    throw std::domain_error("laplace_deriv: order d must be >= 1");
  }
  if (!(s >= 0.0)) {
    throw std::domain_error("laplace_deriv: s must be nonnegative");
  }
  // log pi_d(b) = lnGamma(b + d) - lnGamma(b + 1)
  const double log_pi =
      d == 1 ? 0.0 : log_gamma(f.b_theta + d) - log_gamma(f.b_theta + 1.0);
  return log_pi + (d - 1) * std::log(f.a_theta) -
         (f.b_theta + d + 1.0) * std::log1p(f.a_theta * s) +
         std::log1p(f.theta * (s + d - 1.0) / (f.theta + 2.0));
}

double laplace_deriv(int d, double s, const WLFrailty& f) {
  const double magnitude = std::exp(log_abs_laplace_deriv(d, s, f));
  return d % 2 == 0 ? magnitude : -magnitude;
}

double sample_one(const WLFrailty& f, Rng& rng) {
  const double shape =
      rng.bernoulli(f.mixture_weight()) ? f.b_theta : f.b_theta + 1.0;
  return rng.gamma(shape, f.a_theta);
}

std::vector<double> sample(std::size_t n, const WLFrailty& f,
                           std::uint64_t seed) {
  if (n < 1) {
    throw std::domain_error("sample: n must be >= 1");
  }
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& z : out) {
    z = sample_one(f, rng);
  }
  return out;
}

}  // namespace wlfrail
