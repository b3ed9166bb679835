#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "wlfrail/errors.hpp"
#include "wlfrail/frailty_model.hpp"
#include "wlfrail/survival_data.hpp"

namespace wlfrail {

enum class BaselineKind { nonparametric, weibull };

struct FitConfig {
  BaselineKind baseline_kind = BaselineKind::nonparametric;
  double eps = 1e-6;          // EM stopping tolerance on (beta, theta)
  int max_em_iter = 500;
  double theta_init = 0.5;
  double inner_tol = 1e-8;    // Newton solvers inside the M-steps
  int inner_max_iter = 100;
  bool include_hazard_factors = true;
  bool compute_se = true;
  bool compute_tau = true;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  double theta_hat = 0.0;
  Baseline baseline_hat = WeibullBaseline{1.0, 1.0};
  Eigen::VectorXd se_beta;
  double se_theta = 0.0;
  std::vector<double> z_hat;      // posterior frailty means per cluster
  std::vector<double> kappa_hat;  // posterior E[log Z] per cluster
  std::vector<double> loglik_trace;
  int n_iter = 0;
  double kendall_tau = 0.0;
  std::vector<std::string> covariate_names;
  std::vector<std::string> cluster_ids;
  std::vector<std::string> warnings;
};

/// EM hit its iteration cap; the state reached so far rides along.
class EmMaxIterError : public ConvergenceError {
 public:
  EmMaxIterError(const std::string& msg, FitResult state)
      : ConvergenceError(msg), partial(std::move(state)) {}
  FitResult partial;
};

struct EStepResult {
  std::vector<double> z_hat;
  std::vector<double> kappa_hat;
};

/// E-step: posterior mean and E[log Z] per cluster (closed-form WL moments).
EStepResult e_step(const Dataset& data, const Eigen::VectorXd& beta,
                   double theta, const Baseline& b);

/// Q2(theta) = m [ln theta - lnGamma(b_theta) - (b_theta + 1) ln a_theta]
///           + (b_theta - 1) sum kappa_hat - (1/a_theta) sum z_hat.
/// The sign of the kappa term follows the WL log-density so that Q2 equals
/// E[l_2c] up to theta-free constants.
double q2(double theta, const std::vector<double>& z_hat,
          const std::vector<double>& kappa_hat);
double q2_deriv(double theta, const std::vector<double>& z_hat,
                const std::vector<double>& kappa_hat);

/// M2-step: argmax of Q2 over theta in [1e-6, 1e3] (grid bracket +
/// golden-section + Newton polish). Guarantees q2(result) >=
/// q2(theta_prev) - 1e-12. Sets *at_boundary when the maximizer sits on an
/// edge of the admissible interval.
double m2_maximize_theta(const std::vector<double>& z_hat,
                         const std::vector<double>& kappa_hat,
                         double theta_prev, bool* at_boundary = nullptr);

/// Weibull regression with per-cluster offsets, rate form
/// Lambda0(t) = lambda t^rho. Newton in (ln lambda, ln rho, beta).
struct WeibullRegression {
  double lambda = 1.0;
  double rho = 1.0;
  Eigen::VectorXd beta;
};

/// Log-likelihood of the offset Weibull regression at a point; optionally
/// fills the analytic gradient/Hessian in (ln lambda, ln rho, beta).
double weibull_offset_loglik(const Dataset& data,
                             const std::vector<double>& offsets,
                             const WeibullRegression& point,
                             Eigen::VectorXd* gradient = nullptr,
                             Eigen::MatrixXd* hessian = nullptr);

WeibullRegression weibull_regression_offset(const Dataset& data,
                                            const std::vector<double>& offsets,
                                            const WeibullRegression& init,
                                            double tol = 1e-9,
                                            int max_iter = 100);

FitResult fit_semiparametric(const Dataset& data,
                             const FitConfig& config = FitConfig{});
FitResult fit_weibull(const Dataset& data, const FitConfig& config = FitConfig{});
/// Dispatch on config.baseline_kind.
FitResult fit_frailty(const Dataset& data, const FitConfig& config = FitConfig{});

struct StdErrors {
  Eigen::VectorXd se_beta;
  double se_theta;
};

/// Profile-likelihood standard errors: central-difference Hessian of
/// l(beta, theta) = observed_loglik(beta, theta, baseline fixed at the
/// estimate); SEs are sqrt(diag((-H)^{-1})). Throws SingularHessianError
/// (carrying the offending eigenvalue) when -H is not positive definite.
StdErrors std_errors(const FitResult& fit, const Dataset& data,
                     bool include_hazard_factors = true);

enum class SurvivalKind { conditional, marginal };

struct SurvivalCurve {
  std::vector<double> grid;    // increasing times
  std::vector<double> values;  // nonincreasing, in (0, 1]
  SurvivalKind kind = SurvivalKind::marginal;
  double z = 1.0;  // conditioning frailty for conditional curves
};

/// conditional: exp(-z e^{x'beta} Lambda0(t)); marginal: L(e^{x'beta}
/// Lambda0(t)) at theta_hat. For a step baseline, grid points beyond the
/// last event time raise std::domain_error.
SurvivalCurve predict_survival(const FitResult& fit,
                               const Eigen::VectorXd& profile,
                               SurvivalKind kind, double z,
                               const std::vector<double>& grid);

}  // namespace wlfrail
