#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

namespace wlfrail {

/// One observation: follow-up time t_ij > 0, event indicator delta_ij and a
/// covariate vector of fixed length p (no intercept column).
struct Subject {
  double time;
  bool event;
  Eigen::VectorXd covariates;
};

struct Cluster {
  std::string id;
  std::vector<Subject> subjects;

  int size() const { return static_cast<int>(subjects.size()); }
  int event_count() const;  // r_i
};

/// Immutable clustered survival dataset.
class Dataset {
 public:
  /// Validates: at least one cluster, all times positive, constant covariate
  /// dimension. Names default to x1..xp when not supplied.
  explicit Dataset(std::vector<Cluster> clusters,
                   std::vector<std::string> covariate_names = {});

  const std::vector<Cluster>& clusters() const { return clusters_; }
  int p() const { return p_; }
  std::size_t n_clusters() const { return clusters_.size(); }
  std::size_t n_subjects() const { return n_subjects_; }
  int total_events() const { return total_events_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  /// Fitting preconditions: m >= 2 clusters and at least one event.
  void require_fittable() const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<std::string> names_;
  int p_ = 0;
  std::size_t n_subjects_ = 0;
  int total_events_ = 0;
};

/// Parametric baseline, rate form: Lambda0(t) = lambda t^rho,
/// lambda0(t) = lambda rho t^{rho-1}.
struct WeibullBaseline {
  double lambda;
  double rho;
};

/// Nonparametric baseline: hazard increments lambda0(t_(k)) at the strictly
/// increasing distinct event times; Lambda0(t) = sum of increments at or
/// before t, Lambda0(0) = 0.
struct StepBaseline {
  std::vector<double> times;
  std::vector<double> increments;
  std::vector<double> cumulative;  // prefix sums of increments

  StepBaseline(std::vector<double> times_, std::vector<double> increments_);
  double last_time() const { return times.back(); }
};

using Baseline = std::variant<WeibullBaseline, StepBaseline>;

/// Lambda0(t) for t >= 0.
double cum_hazard(const Baseline& b, double t);

/// lambda0(t). For a step baseline t must equal a stored jump time;
/// otherwise a std::domain_error is thrown.
double hazard_at(const Baseline& b, double t);

}  // namespace wlfrail
