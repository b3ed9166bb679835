#include "wlfrail/frailty_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wlfrail/special_functions.hpp"

namespace wlfrail {

namespace {

// Hazard factor for likelihood use: a step baseline contributes its jump
// height at jump points and zero elsewhere (the -inf path of the loglik).
double hazard_factor(const Baseline& b, double t) {
  if (const auto* s = std::get_if<StepBaseline>(&b)) {
    const auto it = std::lower_bound(s->times.begin(), s->times.end(), t);
    if (it == s->times.end() || *it != t) return 0.0;
    return s->increments[static_cast<std::size_t>(it - s->times.begin())];
  }
  return hazard_at(b, t);
}

double sum_weighted_cum_hazard(const std::vector<double>& times,
                               const Eigen::MatrixXd& xs,
                               const Eigen::VectorXd& beta, const Baseline& b) {
  if (times.empty() || static_cast<Eigen::Index>(times.size()) != xs.rows() ||
      xs.cols() != beta.size()) {
    throw std::domain_error("cluster evaluation: inconsistent dimensions");
  }
  double s_star = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    s_star += cum_hazard(b, times[j]) *
              std::exp(xs.row(static_cast<Eigen::Index>(j)).dot(beta));
  }
  return s_star;
}

}  // namespace

double conditional_hazard(double t, double z, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& beta, const Baseline& b) {
  if (!(t > 0.0)) {
    throw std::domain_error("conditional_hazard: t must be positive");
  }
  if (!(z > 0.0)) {
    throw std::domain_error("conditional_hazard: z must be positive");
  }
  return hazard_at(b, t) * z * std::exp(x.dot(beta));
}

double cluster_survival(const std::vector<double>& times,
                        const Eigen::MatrixXd& xs, const Eigen::VectorXd& beta,
                        double theta, const Baseline& b) {
  const double s_star = sum_weighted_cum_hazard(times, xs, beta, b);
  return laplace(s_star, WLFrailty(theta));
}

double log_cluster_density(const std::vector<double>& times,
                           const Eigen::MatrixXd& xs,
                           const Eigen::VectorXd& beta, double theta,
                           const Baseline& b) {
  const WLFrailty f(theta);
  const double s_star = sum_weighted_cum_hazard(times, xs, beta, b);
  const int n = static_cast<int>(times.size());
  double log_factors = 0.0;
  for (int j = 0; j < n; ++j) {
    log_factors += std::log(hazard_at(b, times[static_cast<std::size_t>(j)])) +
                   xs.row(j).dot(beta);
  }
  // (-1)^n L^{(n)}(S*) = |L^{(n)}(S*)|
  return log_factors + log_abs_laplace_deriv(n, s_star, f);
}

double cluster_density(const std::vector<double>& times,
                       const Eigen::MatrixXd& xs, const Eigen::VectorXd& beta,
                       double theta, const Baseline& b) {
  return std::exp(log_cluster_density(times, xs, beta, theta, b));
}

WLGeneral survivor_frailty_law(double t, double theta, const Baseline& b) {
  if (!(t > 0.0)) {
    throw std::domain_error("survivor_frailty_law: t must be positive");
  }
  const WLFrailty f(theta);
  const double big_a = f.a_theta / (1.0 + f.a_theta * cum_hazard(b, t));
  return WLGeneral(1.0 / big_a, f.b_theta);
}

WLGeneral failure_frailty_law(double t, double theta, const Baseline& b) {
  if (!(t > 0.0)) {
    throw std::domain_error("failure_frailty_law: t must be positive");
  }
  const WLFrailty f(theta);
  const double big_a = f.a_theta / (1.0 + f.a_theta * cum_hazard(b, t));
  return WLGeneral(1.0 / big_a, f.b_theta + 1.0);
}

std::pair<WLGeneral, ClusterSufficients> posterior_frailty(
    const Cluster& c, const Eigen::VectorXd& beta, double theta,
    const Baseline& b) {
  const WLFrailty f(theta);
  double s_star = 0.0;
  for (const auto& s : c.subjects) {
    s_star += cum_hazard(b, s.time) * std::exp(s.covariates.dot(beta));
  }
  ClusterSufficients suff;
  suff.s_star = s_star;
  suff.r = c.event_count();
  suff.a_psi = 1.0 / (s_star + 1.0 / f.a_theta);
  suff.b_psi = suff.r + f.b_theta;
  return {WLGeneral(1.0 / suff.a_psi, suff.b_psi), suff};
}

double observed_loglik(const Eigen::VectorXd& beta, double theta,
                       const Baseline& b, const Dataset& data,
                       const LoglikOptions& opts) {
  const WLFrailty f(theta);
  const double log_a = std::log(f.a_theta);
  double total = 0.0;
  for (const auto& c : data.clusters()) {
    double s_star = 0.0;
    double event_terms = 0.0;
    int r = 0;
    for (const auto& s : c.subjects) {
      const double xb = s.covariates.dot(beta);
      s_star += cum_hazard(b, s.time) * std::exp(xb);
      if (s.event) {
        ++r;
        event_terms += xb;
        if (opts.include_hazard_factors) {
          const double h = hazard_factor(b, s.time);
          if (!(h > 0.0)) {
            return -std::numeric_limits<double>::infinity();
          }
          event_terms += std::log(h);
        }
      }
    }
    // Gamma-integral form of the cluster marginal, grouped so that the two
    // lnGamma terms collapse into sum_{j=0}^{r-1} ln(b_theta + j); stable as
    // theta -> 0 where b_theta blows up.
    const double log1p_as = std::log1p(f.a_theta * s_star);
    double log_gamma_ratio = 0.0;
    for (int j = 0; j < r; ++j) {
      log_gamma_ratio += std::log(f.b_theta + j);
    }
    const double a_psi_b_psi = (r + f.b_theta) * f.a_theta / (1.0 + f.a_theta * s_star);
    total += std::log(f.theta) - std::log(2.0) + (r - 1.0) * log_a -
             (r + f.b_theta) * log1p_as + log_gamma_ratio +
             std::log1p(a_psi_b_psi) + event_terms;
  }
  return total;
}

}  // namespace wlfrail
