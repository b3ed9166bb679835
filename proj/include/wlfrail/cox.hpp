#pragma once

#include <Eigen/Core>
#include <vector>

#include "wlfrail/survival_data.hpp"

namespace wlfrail {

/// Flattened view of a Dataset: distinct event times t_(1) < ... < t_(q) with
/// multiplicities d_(k), and a time-descending subject order so each risk set
/// R(t_(k)) = {(i,j): t_ij >= t_(k)} is a growing prefix. Built once per
/// dataset and shared by all likelihood evaluations.
class RiskIndex {
 public:
  explicit RiskIndex(const Dataset& data);

  int n() const { return static_cast<int>(time_.size()); }
  int p() const { return static_cast<int>(x_.cols()); }
  int q() const { return static_cast<int>(event_times_.size()); }
  std::size_t n_clusters() const { return n_clusters_; }

  const std::vector<double>& event_times() const { return event_times_; }
  const std::vector<int>& event_counts() const { return event_counts_; }

  // flattened subject arrays
  const std::vector<double>& times() const { return time_; }
  const std::vector<char>& events() const { return event_; }
  const std::vector<int>& cluster_of() const { return cluster_of_; }
  const Eigen::MatrixXd& covariates() const { return x_; }

  // subjects sorted by time descending; risk_prefix()[k] subjects have
  // time >= event_times()[k]
  const std::vector<int>& sorted_by_time_desc() const { return order_desc_; }
  const std::vector<int>& risk_prefix() const { return risk_prefix_; }

 private:
  std::vector<double> time_;
  std::vector<char> event_;
  std::vector<int> cluster_of_;
  Eigen::MatrixXd x_;
  std::vector<double> event_times_;
  std::vector<int> event_counts_;
  std::vector<int> order_desc_;
  std::vector<int> risk_prefix_;
  std::size_t n_clusters_ = 0;
};

struct PartialLoglik {
  double value;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Cox partial log-likelihood with per-cluster offsets o_i (Breslow handling
/// of ties):
///   l(beta) = sum_ij delta_ij (x_ij'beta + o_i)
///           - sum_k d_(k) ln sum_{R(t_(k))} e^{x'beta + o},
/// with analytic gradient and Hessian.
PartialLoglik partial_loglik(const Eigen::VectorXd& beta, const RiskIndex& idx,
                             const std::vector<double>& offsets);
PartialLoglik partial_loglik(const Eigen::VectorXd& beta, const Dataset& data,
                             const std::vector<double>& offsets);

struct CoxOptions {
  double tol = 1e-8;    // sup-norm of the score at convergence
  int max_iter = 100;
  int max_halvings = 20;
};

/// Newton-Raphson with step halving. Throws ConvergenceError after max_iter
/// and SingularHessianError when the negated Hessian loses positive
/// definiteness (e.g. a constant covariate).
Eigen::VectorXd fit_cox(const RiskIndex& idx, const std::vector<double>& offsets,
                        const Eigen::VectorXd& init_beta,
                        const CoxOptions& opts = CoxOptions{});
Eigen::VectorXd fit_cox(const Dataset& data, const std::vector<double>& offsets,
                        const Eigen::VectorXd& init_beta,
                        const CoxOptions& opts = CoxOptions{});

/// Breslow baseline-hazard estimator:
/// lambda0_hat(t_(k)) = d_(k) / sum_{R(t_(k))} e^{x'beta + o}.
StepBaseline breslow(const Eigen::VectorXd& beta,
                     const std::vector<double>& offsets, const RiskIndex& idx);
StepBaseline breslow(const Eigen::VectorXd& beta,
                     const std::vector<double>& offsets, const Dataset& data);

}  // namespace wlfrail
