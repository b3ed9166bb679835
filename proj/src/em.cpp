#include "wlfrail/em.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wlfrail/association.hpp"
#include "wlfrail/cox.hpp"
#include "wlfrail/special_functions.hpp"
#include "wlfrail/wl_distribution.hpp"

namespace wlfrail {

namespace {

constexpr double kThetaMin = 1e-6;
constexpr double kThetaMax = 1e3;
constexpr double kOffsetClamp = 30.0;

std::vector<double> clamped_log_offsets(const std::vector<double>& z_hat,
                                        bool* clamped) {
  std::vector<double> offsets(z_hat.size());
  for (std::size_t i = 0; i < z_hat.size(); ++i) {
    double o = std::log(z_hat[i]);
    if (o > kOffsetClamp || o < -kOffsetClamp) {
      o = std::clamp(o, -kOffsetClamp, kOffsetClamp);
      if (clamped) *clamped = true;
    }
    offsets[i] = o;
  }
  return offsets;
}

}  // namespace

EStepResult e_step(const Dataset& data, const Eigen::VectorXd& beta,
                   double theta, const Baseline& b) {
  EStepResult r;
  r.z_hat.reserve(data.n_clusters());
  r.kappa_hat.reserve(data.n_clusters());
  for (const auto& c : data.clusters()) {
    const auto [law, suff] = posterior_frailty(c, beta, theta, b);
    const WLMoments m = moments_general(law);
    r.z_hat.push_back(m.mean);
    r.kappa_hat.push_back(m.elog);
  }
  return r;
}

double q2(double theta, const std::vector<double>& z_hat,
          const std::vector<double>& kappa_hat) {
  if (!(theta > 0.0)) {
    throw std::domain_error("q2: theta must be positive");
  }
  if (z_hat.size() != kappa_hat.size()) {
    throw std::domain_error("q2: z_hat and kappa_hat must match in length");
  }
  const double m = static_cast<double>(z_hat.size());
  if (m == 0.0) return 0.0;
  const double a = theta * (theta + 4.0) / (2.0 * (theta + 2.0));
  const double b = 4.0 / (theta * (theta + 4.0));
  double sum_z = 0.0;
  double sum_k = 0.0;
  for (double z : z_hat) sum_z += z;
  for (double k : kappa_hat) sum_k += k;
  return m * (std::log(theta) - log_gamma(b) - (b + 1.0) * std::log(a)) +
         (b - 1.0) * sum_k - sum_z / a;
}

double q2_deriv(double theta, const std::vector<double>& z_hat,
                const std::vector<double>& kappa_hat) {
  if (!(theta > 0.0)) {
    throw std::domain_error("q2_deriv: theta must be positive");
  }
  const double m = static_cast<double>(z_hat.size());
  if (m == 0.0) return 0.0;
  const double a = theta * (theta + 4.0) / (2.0 * (theta + 2.0));
  const double b = 4.0 / (theta * (theta + 4.0));
  const double tt4 = theta * (theta + 4.0);
  const double da = (theta * theta + 4.0 * theta + 8.0) /
                    (2.0 * (theta + 2.0) * (theta + 2.0));
  const double db = -8.0 * (theta + 2.0) / (tt4 * tt4);
  double sum_z = 0.0;
  double sum_k = 0.0;
  for (double z : z_hat) sum_z += z;
  for (double k : kappa_hat) sum_k += k;
  return m * (1.0 / theta - digamma(b) * db - db * std::log(a) -
              (b + 1.0) * da / a) +
         db * sum_k + sum_z * da / (a * a);
}

double m2_maximize_theta(const std::vector<double>& z_hat,
                         const std::vector<double>& kappa_hat,
                         double theta_prev, bool* at_boundary) {
  if (at_boundary) *at_boundary = false;
  const double lo = std::log(kThetaMin);
  const double hi = std::log(kThetaMax);
  const auto obj = [&](double log_theta) {
    return q2(std::exp(log_theta), z_hat, kappa_hat);
  };

  // coarse bracket on the log scale, theta_prev included as a candidate
  constexpr int kGrid = 64;
  double best_t = std::clamp(std::log(theta_prev), lo, hi);
  double best_v = obj(best_t);
  int best_idx = -1;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = lo + (hi - lo) * i / kGrid;
    const double v = obj(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
      best_idx = i;
    }
  }
  double left = best_idx <= 0 ? lo : lo + (hi - lo) * (best_idx - 1) / kGrid;
  double right = best_idx < 0 || best_idx >= kGrid
                     ? hi
                     : lo + (hi - lo) * (best_idx + 1) / kGrid;
  if (best_idx < 0) {
    // theta_prev beat the whole grid; bracket around it
    left = std::max(lo, best_t - (hi - lo) / kGrid);
    right = std::min(hi, best_t + (hi - lo) / kGrid);
  }

  // golden-section on [left, right]
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = right - gr * (right - left);
  double x2 = left + gr * (right - left);
  double f1 = obj(x1);
  double f2 = obj(x2);
  for (int it = 0; it < 200 && right - left > 1e-11; ++it) {
    if (f1 < f2) {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + gr * (right - left);
      f2 = obj(x2);
    } else {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - gr * (right - left);
      f1 = obj(x1);
    }
  }
  double theta = std::exp(0.5 * (left + right));

  // Newton polish on the score q2'(theta) = 0 with a numeric second
  // derivative, kept inside the admissible interval.
  for (int it = 0; it < 8; ++it) {
    const double g = q2_deriv(theta, z_hat, kappa_hat);
    const double h = std::max(1e-7 * theta, 1e-12);
    const double g2 = (q2_deriv(theta + h, z_hat, kappa_hat) -
                       q2_deriv(theta - h, z_hat, kappa_hat)) /
                      (2.0 * h);
    if (!(g2 < 0.0)) break;
    double cand = theta - g / g2;
    if (!(cand > kThetaMin && cand < kThetaMax)) break;
    if (q2(cand, z_hat, kappa_hat) < q2(theta, z_hat, kappa_hat)) break;
    if (std::fabs(cand - theta) < 1e-14 * theta) {
      theta = cand;
      break;
    }
    theta = cand;
  }

  // ascent contract
  if (q2(theta, z_hat, kappa_hat) < q2(theta_prev, z_hat, kappa_hat) - 1e-12) {
    theta = theta_prev;
  }
  if (at_boundary &&
      (theta <= kThetaMin * (1.0 + 1e-6) || theta >= kThetaMax * (1.0 - 1e-6))) {
    *at_boundary = true;
  }
  return theta;
}

double weibull_offset_loglik(const Dataset& data,
                             const std::vector<double>& offsets,
                             const WeibullRegression& point,
                             Eigen::VectorXd* gradient,
                             Eigen::MatrixXd* hessian) {
  if (offsets.size() != data.n_clusters()) {
    throw std::domain_error(
        "weibull_offset_loglik: one offset per cluster required");
  }
  const int p = data.p();
  const int dim = p + 2;  // (u, v, beta)
  const double u = std::log(point.lambda);
  const double v = std::log(point.rho);
  const double rho = point.rho;

  double value = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);

  int ci = 0;
  for (const auto& c : data.clusters()) {
    const double o = offsets[static_cast<std::size_t>(ci)];
    for (const auto& s : c.subjects) {
      const double lt = std::log(s.time);
      const double xb = s.covariates.dot(point.beta);
      const double w = std::exp(u + o + xb + rho * lt);  // e^o e^{xb} lambda t^rho
      const double rl = rho * lt;
      if (s.event) {
        value += u + v + (rho - 1.0) * lt + xb + o;
        grad(0) += 1.0;
        grad(1) += 1.0 + rl;
        grad.tail(p) += s.covariates;
        hess(1, 1) += rl;
      }
      value -= w;
      grad(0) -= w;
      grad(1) -= w * rl;
      grad.tail(p) -= w * s.covariates;
      hess(0, 0) -= w;
      hess(1, 0) -= w * rl;
      hess(1, 1) -= w * rl * (rl + 1.0);
      hess.block(2, 0, p, 1) -= w * s.covariates;
      hess.block(2, 1, p, 1) -= w * rl * s.covariates;
      hess.bottomRightCorner(p, p)
          .selfadjointView<Eigen::Lower>()
          .rankUpdate(s.covariates, -w);
    }
    ++ci;
  }
  hess = hess.selfadjointView<Eigen::Lower>();
  if (gradient) *gradient = grad;
  if (hessian) *hessian = hess;
  return value;
}

WeibullRegression weibull_regression_offset(const Dataset& data,
                                            const std::vector<double>& offsets,
                                            const WeibullRegression& init,
                                            double tol, int max_iter) {
  if (data.total_events() < 1) {
    throw std::domain_error(
        "weibull_regression_offset: at least one event required");
  }
  const int p = data.p();
  WeibullRegression cur = init;
  if (cur.beta.size() != p) cur.beta = Eigen::VectorXd::Zero(p);
  if (!(cur.lambda > 0.0) || !(cur.rho > 0.0)) {
    throw std::domain_error("weibull_regression_offset: invalid init");
  }

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = weibull_offset_loglik(data, offsets, cur, &grad, &hess);
  const int dim = p + 2;
  for (int it = 0; it < max_iter; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() < tol) {
      return cur;
    }
    Eigen::MatrixXd neg_h = -hess;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_h);
    const double min_ev = es.eigenvalues().minCoeff();
    if (!(min_ev > 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))) {
      throw SingularHessianError(
          "weibull_regression_offset: singular information matrix", min_ev);
    }
    const Eigen::VectorXd direction =
        es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() *
                             (es.eigenvectors().transpose() * grad));
    // stop once the expected quadratic gain is below the objective's
    // floating-point resolution: the optimum cannot be resolved any finer
    const double expected_gain = 0.5 * grad.dot(direction);
    if (expected_gain <= 64.0 * std::numeric_limits<double>::epsilon() *
                             (1.0 + std::fabs(value))) {
      return cur;
    }
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= 20; ++h) {
      Eigen::VectorXd delta = step * direction;
      WeibullRegression cand = cur;
      cand.lambda = std::exp(std::log(cur.lambda) + delta(0));
      cand.rho = std::exp(std::log(cur.rho) + delta(1));
      cand.beta = cur.beta + delta.tail(p);
      Eigen::VectorXd g2(dim);
      Eigen::MatrixXd h2(dim, dim);
      const double v2 = weibull_offset_loglik(data, offsets, cand, &g2, &h2);
      if (std::isfinite(v2) && v2 > value) {
        cur = cand;
        value = v2;
        grad = g2;
        hess = h2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      return cur;  // no representable improvement left in this direction
    }
  }
  if (grad.lpNorm<Eigen::Infinity>() < std::max(std::sqrt(tol), 1e3 * tol)) {
    return cur;
  }
  throw ConvergenceError("weibull_regression_offset: did not converge");
}

namespace {

FitResult make_partial_result(const Dataset& data, const Eigen::VectorXd& beta,
                              double theta, Baseline baseline,
                              std::vector<double> trace, int n_iter) {
  FitResult fr;
  fr.beta_hat = beta;
  fr.theta_hat = theta;
  fr.baseline_hat = std::move(baseline);
  fr.loglik_trace = std::move(trace);
  fr.n_iter = n_iter;
  fr.covariate_names = data.covariate_names();
  for (const auto& c : data.clusters()) fr.cluster_ids.push_back(c.id);
  return fr;
}

FitResult run_em(const Dataset& data, const FitConfig& cfg) {
  data.require_fittable();
  const bool nonparametric = cfg.baseline_kind == BaselineKind::nonparametric;
  const LoglikOptions ll_opts{cfg.include_hazard_factors};
  const std::size_t m = data.n_clusters();
  std::vector<double> zero_offsets(m, 0.0);

  const RiskIndex idx(data);
  const CoxOptions cox_opts{cfg.inner_tol, cfg.inner_max_iter, 20};

  // canonical cluster order for the M2 sums (bitwise permutation invariance)
  std::vector<std::size_t> canon(m);
  for (std::size_t i = 0; i < m; ++i) canon[i] = i;
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    return data.clusters()[a].id < data.clusters()[b].id;
  });
  const auto reorder = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[canon[i]];
    return out;
  };

  // no-frailty initial fit
  Eigen::VectorXd beta;
  Baseline baseline = WeibullBaseline{1.0, 1.0};
  WeibullRegression wreg;
  if (nonparametric) {
    beta = fit_cox(idx, zero_offsets, Eigen::VectorXd::Zero(data.p()), cox_opts);
    baseline = breslow(beta, zero_offsets, idx);
  } else {
    wreg = weibull_regression_offset(data, zero_offsets, WeibullRegression{},
                                     cfg.inner_tol, cfg.inner_max_iter);
    beta = wreg.beta;
    baseline = WeibullBaseline{wreg.lambda, wreg.rho};
  }
  double theta = cfg.theta_init;

  FitResult fr = make_partial_result(data, beta, theta, baseline, {}, 0);
  fr.loglik_trace.push_back(observed_loglik(beta, theta, baseline, data, ll_opts));

  bool warned_clamp = false;
  bool warned_boundary = false;
  bool converged = false;
  EStepResult est;
  for (int iter = 1; iter <= cfg.max_em_iter; ++iter) {
    est = e_step(data, beta, theta, baseline);

    bool clamped = false;
    const std::vector<double> offsets = clamped_log_offsets(est.z_hat, &clamped);
    if (clamped && !warned_clamp) {
      fr.warnings.push_back("offsets log(z_hat) clamped to [-30, 30]");
      warned_clamp = true;
    }

    // M1
    Eigen::VectorXd beta_new;
    if (nonparametric) {
      beta_new = fit_cox(idx, offsets, beta, cox_opts);
      baseline = breslow(beta_new, offsets, idx);
    } else {
      wreg.beta = beta;
      wreg = weibull_regression_offset(data, offsets, wreg, cfg.inner_tol,
                                       cfg.inner_max_iter);
      beta_new = wreg.beta;
      baseline = WeibullBaseline{wreg.lambda, wreg.rho};
    }

    // M2
    bool boundary = false;
    const double theta_new = m2_maximize_theta(
        reorder(est.z_hat), reorder(est.kappa_hat), theta, &boundary);
    if (boundary && !warned_boundary) {
      fr.warnings.push_back("theta maximizer at the admissible boundary");
      warned_boundary = true;
    }

    double delta = std::fabs(theta_new - theta);
    for (int j = 0; j < beta.size(); ++j) {
      delta = std::max(delta, std::fabs(beta_new(j) - beta(j)));
    }
    beta = beta_new;
    theta = theta_new;
    fr.n_iter = iter;
    fr.loglik_trace.push_back(
        observed_loglik(beta, theta, baseline, data, ll_opts));
    if (delta < cfg.eps) {
      converged = true;
      break;
    }
  }

  fr.beta_hat = beta;
  fr.theta_hat = theta;
  fr.baseline_hat = baseline;
  est = e_step(data, beta, theta, baseline);
  fr.z_hat = est.z_hat;
  fr.kappa_hat = est.kappa_hat;

  if (!converged) {
    throw EmMaxIterError("EM did not converge within max_em_iter", fr);
  }

  if (cfg.compute_se) {
    const StdErrors se = std_errors(fr, data, cfg.include_hazard_factors);
    fr.se_beta = se.se_beta;
    fr.se_theta = se.se_theta;
  } else {
    fr.se_beta = Eigen::VectorXd::Zero(data.p());
    fr.se_theta = 0.0;
  }
  fr.kendall_tau = cfg.compute_tau ? kendall_tau_wl(fr.theta_hat) : 0.0;
  return fr;
}

}  // namespace

FitResult fit_semiparametric(const Dataset& data, const FitConfig& config) {
  FitConfig cfg = config;
  cfg.baseline_kind = BaselineKind::nonparametric;
  return run_em(data, cfg);
}

FitResult fit_weibull(const Dataset& data, const FitConfig& config) {
  FitConfig cfg = config;
  cfg.baseline_kind = BaselineKind::weibull;
  return run_em(data, cfg);
}

FitResult fit_frailty(const Dataset& data, const FitConfig& config) {
  return config.baseline_kind == BaselineKind::nonparametric
             ? fit_semiparametric(data, config)
             : fit_weibull(data, config);
}

StdErrors std_errors(const FitResult& fit, const Dataset& data,
                     bool include_hazard_factors) {
  const int p = static_cast<int>(fit.beta_hat.size());
  const int dim = p + 1;
  const LoglikOptions opts{include_hazard_factors};

  const auto eval = [&](const Eigen::VectorXd& par) {
    const Eigen::VectorXd beta = par.head(p);
    return observed_loglik(beta, par(p), fit.baseline_hat, data, opts);
  };

  Eigen::VectorXd x0(dim);
  x0.head(p) = fit.beta_hat;
  x0(p) = fit.theta_hat;

  Eigen::VectorXd h(dim);
  for (int j = 0; j < dim; ++j) {
    h(j) = 1e-4 * std::max(std::fabs(x0(j)), 1.0);
  }
  // keep theta - h inside the admissible domain
  h(p) = std::min(h(p), 0.5 * (x0(p) - 1e-6) + 1e-12);
  if (!(h(p) > 0.0)) h(p) = 1e-12;

  Eigen::MatrixXd hess(dim, dim);
  const double f0 = eval(x0);
  for (int j = 0; j < dim; ++j) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp(j) += h(j);
    xm(j) -= h(j);
    hess(j, j) = (eval(xp) - 2.0 * f0 + eval(xm)) / (h(j) * h(j));
    for (int k = j + 1; k < dim; ++k) {
      Eigen::VectorXd xpp = x0, xpm = x0, xmp = x0, xmm = x0;
      xpp(j) += h(j); xpp(k) += h(k);
      xpm(j) += h(j); xpm(k) -= h(k);
      xmp(j) -= h(j); xmp(k) += h(k);
      xmm(j) -= h(j); xmm(k) -= h(k);
      hess(j, k) = hess(k, j) =
          (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) /
          (4.0 * h(j) * h(k));
    }
  }

  Eigen::MatrixXd info = -hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double min_ev = es.eigenvalues().minCoeff();
  if (!(min_ev > 0.0)) {
    throw SingularHessianError(
        "std_errors: information matrix is not positive definite", min_ev);
  }
  const Eigen::MatrixXd cov = es.eigenvectors() *
                              es.eigenvalues().cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
  StdErrors out;
  out.se_beta = cov.diagonal().head(p).cwiseSqrt();
  out.se_theta = std::sqrt(cov(p, p));
  return out;
}

SurvivalCurve predict_survival(const FitResult& fit,
                               const Eigen::VectorXd& profile,
                               SurvivalKind kind, double z,
                               const std::vector<double>& grid) {
  if (profile.size() != fit.beta_hat.size()) {
    throw std::domain_error("predict_survival: profile dimension mismatch");
  }
  if (grid.empty()) {
    throw std::domain_error("predict_survival: empty time grid");
  }
  if (kind == SurvivalKind::conditional && !(z >= 0.0)) {
    throw std::domain_error("predict_survival: z must be nonnegative");
  }
  const auto* step = std::get_if<StepBaseline>(&fit.baseline_hat);
  const double risk = std::exp(profile.dot(fit.beta_hat));
  SurvivalCurve curve;
  curve.kind = kind;
  curve.z = z;
  curve.grid = grid;
  curve.values.reserve(grid.size());
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    if (!(t >= 0.0) || t <= prev) {
      throw std::domain_error(
          "predict_survival: grid must be increasing and nonnegative");
    }
    prev = t;
    if (step != nullptr && t > step->last_time()) {
      throw std::domain_error(
          "predict_survival: grid extends beyond the last event time of the "
          "step baseline");
    }
    const double s_arg = risk * cum_hazard(fit.baseline_hat, t);
    const double value = kind == SurvivalKind::conditional
                             ? std::exp(-z * s_arg)
                             : laplace(s_arg, WLFrailty(fit.theta_hat));
    curve.values.push_back(value);
  }
  return curve;
}

}  // namespace wlfrail
