#pragma once

namespace wlfrail {

/// Kendall's tau of the three frailty families, all parameterized by the
/// frailty variance theta so the values are directly comparable.
struct TauReport {
  double theta;
  double tau_wl;
  double tau_gamma;
  double tau_ig;
  double wl_err_est;  // quadrature error estimate for tau_wl
};

/// WL frailty:
///   tau = 4 a_theta (1 + b_theta) int_0^inf s (1 + a_theta s)^{-2 b_theta - 4}
///         (1 + theta s / 2) (1 + theta (s + 1) / (theta + 2)) ds - 1,
/// evaluated with adaptive quadrature through the (0, inf) transform.
double kendall_tau_wl(double theta);
double kendall_tau_wl(double theta, double* err_est);

/// Gamma frailty: theta / (theta + 2).
double kendall_tau_gamma(double theta);

/// Inverse-Gaussian frailty: 0.5 - 1/theta + (2/theta^2) e^{2/theta} E1(2/theta),
/// with the asymptotic expansion of e^x E1(x) guarding tiny theta.
double kendall_tau_ig(double theta);

TauReport tau_report(double theta);

}  // namespace wlfrail
