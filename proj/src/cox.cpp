#include "wlfrail/cox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wlfrail/errors.hpp"

namespace wlfrail {

RiskIndex::RiskIndex(const Dataset& data) : n_clusters_(data.n_clusters()) {
  const int n = static_cast<int>(data.n_subjects());
  time_.reserve(n);
  event_.reserve(n);
  cluster_of_.reserve(n);
  x_.resize(n, data.p());
  int row = 0;
  int ci = 0;
  for (const auto& c : data.clusters()) {
    for (const auto& s : c.subjects) {
      time_.push_back(s.time);
      event_.push_back(s.event ? 1 : 0);
      cluster_of_.push_back(ci);
      x_.row(row) = s.covariates;
      ++row;
    }
    ++ci;
  }

  // distinct event times ascending with multiplicities
  std::vector<double> evt;
  for (int i = 0; i < n; ++i) {
    if (event_[i]) evt.push_back(time_[i]);
  }
  std::sort(evt.begin(), evt.end());
  for (double t : evt) {
    if (event_times_.empty() || event_times_.back() != t) {
      event_times_.push_back(t);
      event_counts_.push_back(1);
    } else {
      ++event_counts_.back();
    }
  }

  // Canonical traversal order: time descending, ties broken by cluster id and
  // in-cluster position. Keeps every accumulated sum independent of the
  // cluster order of the input, so refitting a permuted dataset reproduces
  // the exact same floating-point trajectory.
  std::vector<std::string> subject_cluster_id;
  std::vector<int> intra_index;
  subject_cluster_id.reserve(static_cast<std::size_t>(n));
  intra_index.reserve(static_cast<std::size_t>(n));
  for (const auto& c : data.clusters()) {
    for (int j = 0; j < c.size(); ++j) {
      subject_cluster_id.push_back(c.id);
      intra_index.push_back(j);
    }
  }
  order_desc_.resize(n);
  std::iota(order_desc_.begin(), order_desc_.end(), 0);
  std::sort(order_desc_.begin(), order_desc_.end(), [&](int a, int b) {
    const auto au = static_cast<std::size_t>(a);
    const auto bu = static_cast<std::size_t>(b);
    if (time_[au] != time_[bu]) return time_[au] > time_[bu];
    if (subject_cluster_id[au] != subject_cluster_id[bu]) {
      return subject_cluster_id[au] < subject_cluster_id[bu];
    }
    return intra_index[au] < intra_index[bu];
  });

  // risk_prefix_[k]: how many subjects (in descending order) have
  // time >= event_times_[k]
  risk_prefix_.resize(event_times_.size());
  int pos = 0;
  for (int k = q() - 1; k >= 0; --k) {
    const double tk = event_times_[static_cast<std::size_t>(k)];
    while (pos < n && time_[static_cast<std::size_t>(order_desc_[pos])] >= tk) {
      ++pos;
    }
    risk_prefix_[static_cast<std::size_t>(k)] = pos;
  }
}

PartialLoglik partial_loglik(const Eigen::VectorXd& beta, const RiskIndex& idx,
                             const std::vector<double>& offsets) {
  if (offsets.size() != idx.n_clusters()) {
    throw std::domain_error("partial_loglik: one offset per cluster required");
  }
  for (double o : offsets) {
    if (!std::isfinite(o)) {
      throw std::domain_error("partial_loglik: offsets must be finite");
    }
  }
  const int p = idx.p();
  const auto& x = idx.covariates();
  const Eigen::VectorXd eta_x = x * beta;

  PartialLoglik out;
  out.value = 0.0;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);

  // event contributions, accumulated in the canonical order
  for (int pos_i : idx.sorted_by_time_desc()) {
    if (idx.events()[static_cast<std::size_t>(pos_i)]) {
      out.value +=
          eta_x(pos_i) +
          offsets[static_cast<std::size_t>(
              idx.cluster_of()[static_cast<std::size_t>(pos_i)])];
      out.gradient += x.row(pos_i).transpose();
    }
  }

  // risk-set sums via one descending sweep
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  int pos = 0;
  const auto& order = idx.sorted_by_time_desc();
  for (int k = idx.q() - 1; k >= 0; --k) {
    const int upto = idx.risk_prefix()[static_cast<std::size_t>(k)];
    while (pos < upto) {
      const int i = order[static_cast<std::size_t>(pos)];
      const double w = std::exp(
          eta_x(i) +
          offsets[static_cast<std::size_t>(idx.cluster_of()[static_cast<std::size_t>(i)])]);
      s0 += w;
      s1 += w * x.row(i).transpose();
      s2.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(), w);
      ++pos;
    }
    const double dk = idx.event_counts()[static_cast<std::size_t>(k)];
    out.value -= dk * std::log(s0);
    const Eigen::VectorXd mean = s1 / s0;
    out.gradient -= dk * mean;
    Eigen::MatrixXd cov = s2.selfadjointView<Eigen::Lower>();
    cov /= s0;
    cov -= mean * mean.transpose();
    out.hessian -= dk * cov;
  }
  return out;
}

PartialLoglik partial_loglik(const Eigen::VectorXd& beta, const Dataset& data,
                             const std::vector<double>& offsets) {
  return partial_loglik(beta, RiskIndex(data), offsets);
}

namespace {

// Checks that -H is safely positive definite; returns its eigendecomposition.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> require_information(
    const Eigen::MatrixXd& hessian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(-hessian));
  const double min_ev = es.eigenvalues().minCoeff();
  const double max_ev = es.eigenvalues().maxCoeff();
  if (!(min_ev > 1e-12 * std::max(1.0, max_ev))) {
    throw SingularHessianError(
        "fit_cox: information matrix is singular (monotone likelihood or "
        "degenerate design)",
        min_ev);
  }
  return es;
}

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& gradient) {
  const auto es = require_information(hessian);
  return es.eigenvectors() *
         (es.eigenvalues().cwiseInverse().asDiagonal() *
          (es.eigenvectors().transpose() * gradient));
}

}  // namespace

Eigen::VectorXd fit_cox(const RiskIndex& idx, const std::vector<double>& offsets,
                        const Eigen::VectorXd& init_beta,
                        const CoxOptions& opts) {
  if (init_beta.size() != idx.p()) {
    throw std::domain_error("fit_cox: init_beta has wrong dimension");
  }
  if (idx.p() == 0) {
    return init_beta;
  }
  Eigen::VectorXd beta = init_beta;
  PartialLoglik cur = partial_loglik(beta, idx, offsets);
  for (int it = 0; it < opts.max_iter; ++it) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() < opts.tol) {
      require_information(cur.hessian);
      return beta;
    }
    const Eigen::VectorXd direction = newton_direction(cur.hessian, cur.gradient);
    // expected quadratic-model gain 0.5 g' H^{-1} g; once it falls below the
    // floating-point resolution of the objective the optimum is resolved as
    // precisely as doubles allow
    const double expected_gain = 0.5 * cur.gradient.dot(direction);
    const double value_resolution =
        64.0 * std::numeric_limits<double>::epsilon() *
        (1.0 + std::fabs(cur.value));
    if (expected_gain <= value_resolution) {
      require_information(cur.hessian);
      return beta;
    }
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      const Eigen::VectorXd cand = beta + step * direction;
      const PartialLoglik next = partial_loglik(cand, idx, offsets);
      if (std::isfinite(next.value) && next.value > cur.value) {
        beta = cand;
        cur = next;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no representable improvement left in this direction
      require_information(cur.hessian);
      return beta;
    }
  }
  if (cur.gradient.lpNorm<Eigen::Infinity>() <
      std::max(std::sqrt(opts.tol), 1e3 * opts.tol)) {
    require_information(cur.hessian);
    return beta;
  }
  throw ConvergenceError("fit_cox: Newton-Raphson did not converge");
}

Eigen::VectorXd fit_cox(const Dataset& data, const std::vector<double>& offsets,
                        const Eigen::VectorXd& init_beta,
                        const CoxOptions& opts) {
  return fit_cox(RiskIndex(data), offsets, init_beta, opts);
}

StepBaseline breslow(const Eigen::VectorXd& beta,
                     const std::vector<double>& offsets, const RiskIndex& idx) {
  if (offsets.size() != idx.n_clusters()) {
    throw std::domain_error("breslow: one offset per cluster required");
  }
  if (idx.q() == 0) {
    throw std::domain_error("breslow: no events in the data");
  }
  const auto& x = idx.covariates();
  const Eigen::VectorXd eta_x = x * beta;
  std::vector<double> increments(static_cast<std::size_t>(idx.q()));
  double s0 = 0.0;
  int pos = 0;
  const auto& order = idx.sorted_by_time_desc();
  for (int k = idx.q() - 1; k >= 0; --k) {
    const int upto = idx.risk_prefix()[static_cast<std::size_t>(k)];
    while (pos < upto) {
      const int i = order[static_cast<std::size_t>(pos)];
      s0 += std::exp(
          eta_x(i) +
          offsets[static_cast<std::size_t>(idx.cluster_of()[static_cast<std::size_t>(i)])]);
      ++pos;
    }
    increments[static_cast<std::size_t>(k)] =
        idx.event_counts()[static_cast<std::size_t>(k)] / s0;
  }
  return StepBaseline(idx.event_times(), increments);
}

StepBaseline breslow(const Eigen::VectorXd& beta,
                     const std::vector<double>& offsets, const Dataset& data) {
  return breslow(beta, offsets, RiskIndex(data));
}

}  // namespace wlfrail
