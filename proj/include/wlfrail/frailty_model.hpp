#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "wlfrail/survival_data.hpp"
#include "wlfrail/wl_distribution.hpp"

namespace wlfrail {

/// Per-cluster posterior sufficients of the WL frailty model:
///   a_psi = (sum_j Lambda0(t_ij) e^{x_ij'beta} + 1/a_theta)^{-1},
///   b_psi = r_i + b_theta.
struct ClusterSufficients {
  double a_psi;
  double b_psi;
  double s_star;  // sum_j Lambda0(t_ij) e^{x_ij'beta}
  int r;          // event count of the cluster
};

/// Conditional hazard lambda0(t) z e^{x'beta}.
double conditional_hazard(double t, double z, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& beta, const Baseline& b);

/// Marginal (unconditional) survival of a cluster evaluated at the given
/// times: with S* = sum_j Lambda0(t_ij) e^{x_ij'beta},
///   S = (1 + a_theta S*)^{-b_theta-1} (1 + theta S* / 2).
/// xs has one row per subject. The univariate case is n_i = 1.
double cluster_survival(const std::vector<double>& times,
                        const Eigen::MatrixXd& xs, const Eigen::VectorXd& beta,
                        double theta, const Baseline& b);

/// log of the marginal cluster density with every subject treated as an
/// event: (-1)^{n_i} [prod_j lambda0(t_ij) e^{x_ij'beta}] L^{(n_i)}(S*).
double log_cluster_density(const std::vector<double>& times,
                           const Eigen::MatrixXd& xs,
                           const Eigen::VectorXd& beta, double theta,
                           const Baseline& b);
double cluster_density(const std::vector<double>& times,
                       const Eigen::MatrixXd& xs, const Eigen::VectorXd& beta,
                       double theta, const Baseline& b);

/// Law of the frailty among survivors at t (condition T > t):
/// WL(alpha = 1/A_theta, phi = b_theta), A_theta = a_theta/(1 + a_theta Lambda0(t)).
WLGeneral survivor_frailty_law(double t, double theta, const Baseline& b);

/// Law of the frailty given a failure at t (condition T = t):
/// WL(alpha = 1/A_theta, phi = b_theta + 1).
WLGeneral failure_frailty_law(double t, double theta, const Baseline& b);

/// Posterior law of Z_i given a cluster's data:
/// WL(alpha = 1/a_psi, phi = b_psi).
std::pair<WLGeneral, ClusterSufficients> posterior_frailty(
    const Cluster& c, const Eigen::VectorXd& beta, double theta,
    const Baseline& b);

struct LoglikOptions {
  /// Include the prod_j lambda0(t_ij)^{delta_ij} factor (jump heights for a
  /// step baseline). Dropping it shifts the value by a constant in (beta,
  /// theta).
  bool include_hazard_factors = true;
};

/// Observed log-likelihood of the shared WL frailty model. Returns -inf when
/// a hazard factor vanishes at an event time. For a step baseline each event
/// time must be a jump point.
double observed_loglik(const Eigen::VectorXd& beta, double theta,
                       const Baseline& b, const Dataset& data,
                       const LoglikOptions& opts = LoglikOptions{});

}  // namespace wlfrail
