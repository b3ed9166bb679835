#include "wlfrail/survival_data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wlfrail/errors.hpp"

namespace wlfrail {

int Cluster::event_count() const {
  int r = 0;
  for (const auto& s : subjects) r += s.event ? 1 : 0;
  return r;
}

Dataset::Dataset(std::vector<Cluster> clusters,
                 std::vector<std::string> covariate_names)
    : clusters_(std::move(clusters)), names_(std::move(covariate_names)) {
  if (clusters_.empty()) {
    throw DataError("Dataset: at least one cluster required");
  }
  p_ = static_cast<int>(clusters_.front().subjects.empty()
                            ? 0
                            : clusters_.front().subjects.front().covariates.size());
  for (const auto& c : clusters_) {
    if (c.subjects.empty()) {
      throw DataError("Dataset: cluster '" + c.id + "' has no subjects");
    }
    for (const auto& s : c.subjects) {
      if (!(s.time > 0.0) || !std::isfinite(s.time)) {
        throw DataError("Dataset: nonpositive follow-up time in cluster '" +
                        c.id + "'");
      }
      if (static_cast<int>(s.covariates.size()) != p_) {
        throw DataError("Dataset: inconsistent covariate dimension");
      }
      ++n_subjects_;
      total_events_ += s.event ? 1 : 0;
    }
  }
  if (names_.empty()) {
    for (int j = 1; j <= p_; ++j) names_.push_back("x" + std::to_string(j));
  }
  if (static_cast<int>(names_.size()) != p_) {
    throw DataError("Dataset: covariate name count does not match dimension");
  }
}

void Dataset::require_fittable() const {
  if (n_clusters() < 2) {
    throw DataError("Dataset: fitting requires at least two clusters");
  }
  if (total_events_ < 1) {
    throw DataError("Dataset: fitting requires at least one event");
  }
}

StepBaseline::StepBaseline(std::vector<double> times_,
                           std::vector<double> increments_)
    : times(std::move(times_)), increments(std::move(increments_)) {
  if (times.empty() || times.size() != increments.size()) {
    throw std::domain_error("StepBaseline: need matching nonempty arrays");
  }
  cumulative.resize(times.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::domain_error(
          "StepBaseline: times must be strictly increasing positives");
    }
    if (!(increments[k] > 0.0)) {
      throw std::domain_error("StepBaseline: increments must be positive");
    }
    acc += increments[k];
    cumulative[k] = acc;
  }
}

double cum_hazard(const Baseline& b, double t) {
  if (!(t >= 0.0)) {
    throw std::domain_error("cum_hazard: t must be nonnegative");
  }
  if (const auto* w = std::get_if<WeibullBaseline>(&b)) {
    return t == 0.0 ? 0.0 : w->lambda * std::pow(t, w->rho);
  }
  const auto& s = std::get<StepBaseline>(b);
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  const auto k = static_cast<std::size_t>(it - s.times.begin());
  return k == 0 ? 0.0 : s.cumulative[k - 1];
}

double hazard_at(const Baseline& b, double t) {
  if (!(t > 0.0)) {
    throw std::domain_error("hazard_at: t must be positive");
  }
  if (const auto* w = std::get_if<WeibullBaseline>(&b)) {
    return w->lambda * w->rho * std::pow(t, w->rho - 1.0);
  }
  const auto& s = std::get<StepBaseline>(b);
  const auto it = std::lower_bound(s.times.begin(), s.times.end(), t);
  if (it == s.times.end() || *it != t) {
    throw std::domain_error(
        "hazard_at: t is not a jump point of the step baseline");
  }
  return s.increments[static_cast<std::size_t>(it - s.times.begin())];
}

}  // namespace wlfrail
