#include "wlfrail/association.hpp"

#include <cmath>
#include <stdexcept>

#include "wlfrail/quadrature.hpp"
#include "wlfrail/special_functions.hpp"

namespace wlfrail {

double kendall_tau_wl(double theta, double* err_est) {
  if (!(theta > 0.0)) {
    throw std::domain_error("kendall_tau_wl: theta must be positive");
  }
  const double a = theta * (theta + 4.0) / (2.0 * (theta + 2.0));
  const double b = 4.0 / (theta * (theta + 4.0));
  const auto integrand = [&](double s) {
    return s * std::exp(-(2.0 * b + 4.0) * std::log1p(a * s)) *
           (1.0 + 0.5 * theta * s) *
           (1.0 + theta * (s + 1.0) / (theta + 2.0));
  };
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  spec.rel_tol = 1e-10;
  spec.max_subdivisions = 400;
  const QuadratureResult r = integrate_adaptive(integrand, 0.0, kInfinity, spec);
  if (err_est) *err_est = 4.0 * a * (1.0 + b) * r.err_est;
  return 4.0 * a * (1.0 + b) * r.value - 1.0;
}

double kendall_tau_wl(double theta) { return kendall_tau_wl(theta, nullptr); }

double kendall_tau_gamma(double theta) {
  if (!(theta > 0.0)) {
    throw std::domain_error("kendall_tau_gamma: theta must be positive");
  }
  return theta / (theta + 2.0);
}

double kendall_tau_ig(double theta) {
  if (!(theta > 0.0)) {
    throw std::domain_error("kendall_tau_ig: theta must be positive");
  }
  const double x = 2.0 / theta;
  if (x >= 50.0) {
    // cancelled asymptotic form of 0.5 - 1/theta + (2/theta^2) e^x E1(x)
    return ((((360.0 / x - 60.0) / x + 12.0) / x - 3.0) / x + 1.0) / x;
  }
  return 0.5 - 1.0 / theta +
         (2.0 / (theta * theta)) * std::exp(x) * exp_integral_e1(x);
}

TauReport tau_report(double theta) {
  TauReport r;
  r.theta = theta;
  r.tau_wl = kendall_tau_wl(theta, &r.wl_err_est);
  r.tau_gamma = kendall_tau_gamma(theta);
  r.tau_ig = kendall_tau_ig(theta);
  return r;
}

}  // namespace wlfrail
