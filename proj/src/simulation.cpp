#include "wlfrail/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "wlfrail/em.hpp"
#include "wlfrail/errors.hpp"
#include "wlfrail/special_functions.hpp"
#include "wlfrail/wl_distribution.hpp"

namespace wlfrail {

ScenarioConfig::ScenarioConfig() {
  beta.resize(5);
  beta << 0.3, 1.1, 0.4, -0.5, -0.3;
  cluster_layout = case1_layout();
}

int ScenarioConfig::total_subjects() const {
  int total = 0;
  for (const auto& [count, size] : cluster_layout) total += count * size;
  return total;
}

void ScenarioConfig::validate() const {
  if (cluster_layout.empty()) {
    throw DataError("ScenarioConfig: empty cluster layout");
  }
  for (const auto& [count, size] : cluster_layout) {
    if (count < 1 || size < 1) {
      throw DataError("ScenarioConfig: layout entries must be positive");
    }
  }
  if (!(mu_w > 0.0) || !(sigma2_w > 0.0)) {
    throw DataError("ScenarioConfig: Weibull moments must be positive");
  }
  if (!(theta > 0.0)) {
    throw DataError("ScenarioConfig: theta must be positive");
  }
  if (!(censor_q >= 0.0 && censor_q < 1.0)) {
    throw DataError("ScenarioConfig: censor_q must lie in [0, 1)");
  }
  if (n_replicates < 1) {
    throw DataError("ScenarioConfig: n_replicates must be >= 1");
  }
}

std::vector<std::pair<int, int>> case1_layout() {
  return {{200, 1}, {100, 2}, {50, 3}, {20, 4}, {20, 5}, {6, 10}};
}
std::vector<std::pair<int, int>> case2_layout() {
  return {{200, 2}, {100, 4}, {50, 6}, {20, 8}, {20, 10}, {6, 20}};
}
std::vector<std::pair<int, int>> case3_layout() {
  return {{400, 1}, {200, 2}, {100, 3}, {40, 4}, {40, 5}, {12, 10}};
}

WeibullMoments weibull_from_moments(double mu_w, double sigma2_w) {
  if (!(mu_w > 0.0) || !(sigma2_w > 0.0)) {
    throw std::domain_error("weibull_from_moments: moments must be positive");
  }
  const double cv2 = sigma2_w / (mu_w * mu_w);
  const auto gap = [cv2](double rho) {
    return std::exp(log_gamma(1.0 + 2.0 / rho) -
                    2.0 * log_gamma(1.0 + 1.0 / rho)) -
           1.0 - cv2;
  };
  // gap is decreasing in rho: CV^2 -> inf as rho -> 0, -> 0 as rho -> inf
  double lo = 0.02;
  double hi = 60.0;
  if (!(gap(lo) > 0.0) || !(gap(hi) < 0.0)) {
    throw ConvergenceError(
        "weibull_from_moments: sigma^2/mu^2 outside the explored Weibull "
        "range");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14 * hi) break;
  }
  WeibullMoments w;
  w.rho = 0.5 * (lo + hi);
  w.scale = mu_w / std::exp(log_gamma(1.0 + 1.0 / w.rho));
  w.rate_lambda = std::pow(w.scale, -w.rho);
  return w;
}

double weibull_mean(const WeibullMoments& w) {
  return w.scale * std::exp(log_gamma(1.0 + 1.0 / w.rho));
}

double weibull_median(const WeibullMoments& w) {
  return w.scale * std::pow(std::log(2.0), 1.0 / w.rho);
}

double draw_frailty(FrailtyLaw law, double theta, Rng& rng) {
  switch (law) {
    case FrailtyLaw::wl:
      return sample_one(WLFrailty(theta), rng);
    case FrailtyLaw::uniform_0_2:
      return 2.0 * rng.uniform_pos();
    case FrailtyLaw::gamma_1_1:
      return rng.gamma(1.0, 1.0);
    case FrailtyLaw::lognormal_half: {
      const double sigma = std::sqrt(std::log(2.0));
      return std::exp(-0.5 * std::log(2.0) + sigma * rng.normal());
    }
  }
  throw std::logic_error("draw_frailty: unknown law");
}

double censor_threshold(double q, double cond_rate, double rho) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw std::domain_error("censor_threshold: q must lie in [0, 1)");
  }
  if (q == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::pow(-std::log(q) / cond_rate, 1.0 / rho);
}

GeneratedData gen_dataset(const ScenarioConfig& cfg, int replicate_index) {
  cfg.validate();
  Rng rng(mix_seed(cfg.base_seed, static_cast<std::uint64_t>(replicate_index)));
  const WeibullMoments wb = weibull_from_moments(cfg.mu_w, cfg.sigma2_w);
  const int p = static_cast<int>(cfg.beta.size());
  if (p != 5) {
    throw DataError("gen_dataset: the scenario covariate recipe uses 5 betas");
  }

  std::vector<Cluster> clusters;
  std::vector<double> z_values;
  int cluster_counter = 0;
  for (const auto& [count, size] : cfg.cluster_layout) {
    for (int c = 0; c < count; ++c) {
      Cluster cl;
      cl.id = std::to_string(++cluster_counter);
      const double z = draw_frailty(cfg.frailty_law, cfg.theta, rng);
      z_values.push_back(z);
      for (int j = 0; j < size; ++j) {
        Subject s;
        s.covariates.resize(5);
        // 3-level categorical, probabilities (0.4, 0.4, 0.2), reference-coded
        const double u = rng.uniform();
        s.covariates(0) = (u >= 0.4 && u < 0.8) ? 1.0 : 0.0;
        s.covariates(1) = u >= 0.8 ? 1.0 : 0.0;
        s.covariates(2) = rng.bernoulli(0.7) ? 1.0 : 0.0;
        s.covariates(3) = rng.bernoulli(0.6) ? 1.0 : 0.0;
        s.covariates(4) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double xi = s.covariates.dot(cfg.beta);
        const double cond_rate = z * std::exp(xi) * wb.rate_lambda;
        const double t_event =
            std::pow(-std::log(rng.uniform_pos()) / cond_rate, 1.0 / wb.rho);
        const double c_time = censor_threshold(cfg.censor_q, cond_rate, wb.rho);
        s.event = t_event <= c_time;
        s.time = std::min(t_event, c_time);
        cl.subjects.push_back(std::move(s));
      }
      clusters.push_back(std::move(cl));
    }
  }
  return GeneratedData{
      Dataset(std::move(clusters), {"x11", "x12", "x2", "x3", "x4"}),
      std::move(z_values), wb};
}

double baseline_mean_estimate(const StepBaseline& b) {
  double mean = b.times.front();
  for (std::size_t j = 0; j + 1 < b.times.size(); ++j) {
    mean += (b.times[j + 1] - b.times[j]) * std::exp(-b.cumulative[j]);
  }
  return mean;
}

double baseline_median_estimate(const StepBaseline& b) {
  // survival points (t_j, S_j) with the implicit origin (0, 1)
  double t_prev = 0.0;
  double s_prev = 1.0;
  for (std::size_t j = 0; j < b.times.size(); ++j) {
    const double s = std::exp(-b.cumulative[j]);
    if (s <= 0.5) {
      return t_prev + (s_prev - 0.5) / (s_prev - s) * (b.times[j] - t_prev);
    }
    t_prev = b.times[j];
    s_prev = s;
  }
  throw ConvergenceError(
      "baseline_median_estimate: S0_hat never crosses 0.5");
}

BiasMetrics baseline_bias_metrics(const std::vector<double>& estimates,
                                  double truth) {
  if (estimates.size() < 2) {
    throw std::domain_error("baseline_bias_metrics: need >= 2 estimates");
  }
  const double n = static_cast<double>(estimates.size());
  double sum_e = 0.0;
  double sum_r = 0.0;
  for (double est : estimates) {
    sum_e += est - truth;
    sum_r += (est - truth) / truth;
  }
  BiasMetrics m;
  m.B = sum_e / n;
  m.RB = sum_r / n;
  double ss_e = 0.0;
  double ss_r = 0.0;
  for (double est : estimates) {
    ss_e += ((est - truth) - m.B) * ((est - truth) - m.B);
    ss_r += ((est - truth) / truth - m.RB) * ((est - truth) / truth - m.RB);
  }
  m.B_SD = std::sqrt(ss_e / (n - 1.0));
  m.RB_SD = std::sqrt(ss_r / (n - 1.0));
  return m;
}

std::vector<ParamMetric> summarize_parameters(
    const std::vector<std::string>& names,
    const std::vector<Eigen::VectorXd>& estimates,
    const std::vector<Eigen::VectorXd>& std_errors,
    const Eigen::VectorXd& truth) {
  const int dim = static_cast<int>(truth.size());
  const double n = static_cast<double>(estimates.size());
  if (estimates.empty() || estimates.size() != std_errors.size() ||
      static_cast<int>(names.size()) != dim) {
    throw std::domain_error("summarize_parameters: inconsistent inputs");
  }
  std::vector<ParamMetric> out;
  for (int j = 0; j < dim; ++j) {
    ParamMetric pm;
    pm.name = names[static_cast<std::size_t>(j)];
    pm.truth = truth(j);
    double sum_err = 0.0;
    double sum_sq = 0.0;
    double sum_se = 0.0;
    for (std::size_t r = 0; r < estimates.size(); ++r) {
      const double err = estimates[r](j) - truth(j);
      sum_err += err;
      sum_sq += err * err;
      sum_se += std_errors[r](j);
    }
    pm.bias = sum_err / n;
    pm.rmse = std::sqrt(sum_sq / n);
    pm.mean_se = sum_se / n;
    const double var =
        n > 1.0 ? std::max(0.0, (sum_sq - n * pm.bias * pm.bias) / (n - 1.0))
                : 0.0;
    pm.empirical_sd = std::sqrt(var);
    out.push_back(std::move(pm));
  }
  return out;
}

namespace {

void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
  }
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

MetricsSummary recovery_study(const ScenarioConfig& cfg, FitterKind fitter,
                              int n_threads) {
  cfg.validate();
  const WeibullMoments wb = weibull_from_moments(cfg.mu_w, cfg.sigma2_w);
  const int reps = cfg.n_replicates;

  struct ReplicateOutcome {
    bool ok = false;
    Eigen::VectorXd estimate;  // beta..., theta
    Eigen::VectorXd se;
    double mu_hat = std::numeric_limits<double>::quiet_NaN();
    double xi_hat = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(reps));

  parallel_for(reps, n_threads, [&](int r) {
    auto& out = outcomes[static_cast<std::size_t>(r)];
    GeneratedData gen = gen_dataset(cfg, r);
    FitConfig fit_cfg;
    fit_cfg.baseline_kind = fitter == FitterKind::semiparametric
                                ? BaselineKind::nonparametric
                                : BaselineKind::weibull;
    fit_cfg.compute_tau = false;
    // replicates whose theta_hat drifts to the boundary converge at O(1/k);
    // excluding them would bias the summaries, so give them room
    fit_cfg.max_em_iter = 5000;
    try {
      const FitResult fit = fit_frailty(gen.data, fit_cfg);
      const int p = static_cast<int>(fit.beta_hat.size());
      out.estimate.resize(p + 1);
      out.estimate.head(p) = fit.beta_hat;
      out.estimate(p) = fit.theta_hat;
      out.se.resize(p + 1);
      out.se.head(p) = fit.se_beta;
      out.se(p) = fit.se_theta;
      if (const auto* step = std::get_if<StepBaseline>(&fit.baseline_hat)) {
        out.mu_hat = baseline_mean_estimate(*step);
        try {
          out.xi_hat = baseline_median_estimate(*step);
        } catch (const ConvergenceError&) {
          // no 0.5 crossing; excluded from the median aggregate
        }
      } else if (const auto* wei =
                     std::get_if<WeibullBaseline>(&fit.baseline_hat)) {
        // closed forms for the fitted parametric baseline (scale form)
        const double scale = std::pow(wei->lambda, -1.0 / wei->rho);
        const WeibullMoments fitted{scale, wei->rho, wei->lambda};
        out.mu_hat = weibull_mean(fitted);
        out.xi_hat = weibull_median(fitted);
      }
      out.ok = true;
    } catch (const ConvergenceError&) {
      out.ok = false;
    } catch (const SingularHessianError&) {
      out.ok = false;
    }
  });

  std::vector<Eigen::VectorXd> estimates;
  std::vector<Eigen::VectorXd> ses;
  std::vector<double> mu_hats;
  std::vector<double> xi_hats;
  int failed = 0;
  for (const auto& out : outcomes) {
    if (!out.ok) {
      ++failed;
      continue;
    }
    estimates.push_back(out.estimate);
    ses.push_back(out.se);
    if (std::isfinite(out.mu_hat)) mu_hats.push_back(out.mu_hat);
    if (std::isfinite(out.xi_hat)) xi_hats.push_back(out.xi_hat);
  }
  if (failed > reps / 5) {
    throw ConvergenceError("recovery_study: more than 20% of replicates "
                           "failed to converge (" +
                           std::to_string(failed) + "/" +
                           std::to_string(reps) + ")");
  }

  const int p = static_cast<int>(cfg.beta.size());
  Eigen::VectorXd truth(p + 1);
  truth.head(p) = cfg.beta;
  truth(p) = cfg.theta;
  std::vector<std::string> names = {"x11", "x12", "x2", "x3", "x4"};
  names.push_back("theta");

  MetricsSummary summary;
  summary.n_replicates = reps;
  summary.n_failed = failed;
  summary.parameters = summarize_parameters(names, estimates, ses, truth);
  summary.mu_w.truth = weibull_mean(wb);
  summary.mu_w.n_valid = static_cast<int>(mu_hats.size());
  summary.mu_w.metrics = baseline_bias_metrics(mu_hats, summary.mu_w.truth);
  summary.xi_w.truth = weibull_median(wb);
  summary.xi_w.n_valid = static_cast<int>(xi_hats.size());
  summary.xi_w.metrics = baseline_bias_metrics(xi_hats, summary.xi_w.truth);
  return summary;
}

}  // namespace wlfrail
