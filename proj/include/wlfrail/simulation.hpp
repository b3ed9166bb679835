#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wlfrail/rng.hpp"
#include "wlfrail/survival_data.hpp"

namespace wlfrail {

enum class FrailtyLaw {
  wl,              // WL(theta)
  uniform_0_2,     // U(0, 2): mean 1, variance 1/3
  gamma_1_1,       // Gamma(1, 1): mean 1, variance 1
  lognormal_half,  // LN(-ln2/2, ln2): mean 1, variance 1
};

struct ScenarioConfig {
  std::vector<std::pair<int, int>> cluster_layout;  // (count, size) pairs
  double mu_w = 8.6;
  double sigma2_w = 230.0;
  double theta = 0.25;
  FrailtyLaw frailty_law = FrailtyLaw::wl;
  Eigen::VectorXd beta;  // defaults to (0.3, 1.1, 0.4, -0.5, -0.3)
  double censor_q = 0.0;
  int n_replicates = 100;
  std::uint64_t base_seed = 20240601;

  ScenarioConfig();
  int total_subjects() const;
  void validate() const;
};

std::vector<std::pair<int, int>> case1_layout();  // 396 clusters, 790 subjects
std::vector<std::pair<int, int>> case2_layout();  // 396 clusters, 1580 subjects
std::vector<std::pair<int, int>> case3_layout();  // 792 clusters, 1580 subjects

/// Weibull parameters from mean/variance: solves mu = scale Gamma(1 + 1/rho),
/// sigma^2 = scale^2 [Gamma(1 + 2/rho) - Gamma(1 + 1/rho)^2] by root-finding
/// in rho on the squared coefficient of variation; rate_lambda = scale^{-rho}
/// is the Lambda0(t) = lambda t^rho fitting form.
struct WeibullMoments {
  double scale;
  double rho;
  double rate_lambda;
};
WeibullMoments weibull_from_moments(double mu_w, double sigma2_w);

/// Theoretical baseline mean and median of the scale-form Weibull.
double weibull_mean(const WeibullMoments& w);
double weibull_median(const WeibullMoments& w);

double draw_frailty(FrailtyLaw law, double theta, Rng& rng);

/// Censoring threshold with P(T > C | z, x) = q under the conditional
/// cumulative hazard cond_rate * t^rho; q = 0 yields +infinity.
double censor_threshold(double q, double cond_rate, double rho);

struct GeneratedData {
  Dataset data;
  std::vector<double> z;      // generating frailty per cluster
  WeibullMoments baseline;    // generating baseline
};

/// One replicate of the scenario, deterministic in (base_seed, replicate).
GeneratedData gen_dataset(const ScenarioConfig& cfg, int replicate_index);

/// Area under S0_hat = exp(-Lambda0_hat):
/// mu_hat = t_(1) + sum_j (t_(j+1) - t_(j)) S0_hat(t_(j)).
double baseline_mean_estimate(const StepBaseline& b);

/// Linear interpolation of S0_hat through level 0.5; throws ConvergenceError
/// when the curve never reaches 0.5.
double baseline_median_estimate(const StepBaseline& b);

struct BiasMetrics {
  double B;      // mean error
  double B_SD;   // sample SD of the errors
  double RB;     // mean relative error
  double RB_SD;  // sample SD of the relative errors
};
BiasMetrics baseline_bias_metrics(const std::vector<double>& estimates,
                                  double truth);

struct ParamMetric {
  std::string name;
  double truth;
  double bias;
  double mean_se;
  double rmse;
  double empirical_sd;
};

struct BaselineMetric {
  double truth;
  BiasMetrics metrics;
  int n_valid;  // replicates where the estimate existed (median may not)
};

struct MetricsSummary {
  std::vector<ParamMetric> parameters;  // beta components then theta
  BaselineMetric mu_w;
  BaselineMetric xi_w;
  int n_replicates = 0;
  int n_failed = 0;
};

enum class FitterKind { semiparametric, weibull };

/// Per-parameter bias / mean-SE / RMSE aggregation; one row per column of
/// estimates (the same aggregation recovery_study applies to its fits).
std::vector<ParamMetric> summarize_parameters(
    const std::vector<std::string>& names,
    const std::vector<Eigen::VectorXd>& estimates,
    const std::vector<Eigen::VectorXd>& std_errors,
    const Eigen::VectorXd& truth);

/// Runs cfg.n_replicates generate+fit cycles (concurrently when n_threads
/// != 1), excludes non-convergent replicates with a count, and aborts with
/// ConvergenceError when more than 20% fail.
MetricsSummary recovery_study(const ScenarioConfig& cfg, FitterKind fitter,
                              int n_threads = 0);

}  // namespace wlfrail
