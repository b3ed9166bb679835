#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_oracles.hpp"
#include "wlfrail/cox.hpp"
#include "wlfrail/errors.hpp"
#include "wlfrail/rng.hpp"

using namespace wlfrail;

namespace {

// one subject per cluster, 1 covariate
Dataset flat_dataset(const std::vector<double>& times,
                     const std::vector<int>& events,
                     const std::vector<double>& x) {
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < times.size(); ++i) {
    Subject s;
    s.time = times[i];
    s.event = events[i] == 1;
    s.covariates = Eigen::VectorXd::Constant(1, x[i]);
    clusters.push_back(Cluster{std::to_string(i + 1), {s}});
  }
  return Dataset(clusters);
}

Dataset random_dataset(int n, Rng& rng) {
  std::vector<double> times, x;
  std::vector<int> events;
  for (int i = 0; i < n; ++i) {
    times.push_back(-std::log(rng.uniform_pos()));
    events.push_back(rng.bernoulli(0.7) ? 1 : 0);
    x.push_back(rng.normal());
  }
  if (std::none_of(events.begin(), events.end(), [](int e) { return e == 1; })) {
    events[0] = 1;
  }
  return flat_dataset(times, events, x);
}

}  // namespace

TEST_SUITE("cox_engine") {

TEST_CASE("risk index structure") {
  const Dataset data = flat_dataset({2.0, 1.0, 2.0, 3.0, 0.5},
                                    {1, 1, 1, 0, 0}, {0, 0, 0, 0, 0});
  const RiskIndex idx(data);
  CHECK(idx.q() == 2);
  CHECK(idx.event_times() == std::vector<double>{1.0, 2.0});
  CHECK(idx.event_counts() == std::vector<int>{1, 2});
  // risk sets: t >= 1 has 4 subjects, t >= 2 has 3
  CHECK(idx.risk_prefix()[0] == 4);
  CHECK(idx.risk_prefix()[1] == 3);
}

TEST_CASE("partial loglik at beta 0 with uniform risk") {
  const Dataset data =
      flat_dataset({1.0, 2.0, 3.0, 4.0}, {1, 1, 1, 1}, {1.0, 0.0, 1.0, 0.0});
  const std::vector<double> offsets(4, 0.0);
  const PartialLoglik pl =
      partial_loglik(Eigen::VectorXd::Zero(1), data, offsets);
  CHECK(pl.value ==
        doctest::Approx(-(std::log(4.0) + std::log(3.0) + std::log(2.0)))
            .epsilon(1e-13));
}

TEST_CASE("gradient and Hessian match finite differences") {
  Rng rng(2024);
  const Dataset data = random_dataset(12, rng);
  std::vector<double> offsets;
  for (int i = 0; i < 12; ++i) offsets.push_back(0.3 * rng.normal());
  const RiskIndex idx(data);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.4);
  const PartialLoglik pl = partial_loglik(beta, idx, offsets);
  const double h = 1e-5;
  const auto at = [&](double b) {
    return partial_loglik(Eigen::VectorXd::Constant(1, b), idx, offsets).value;
  };
  const double grad_fd = (at(0.4 + h) - at(0.4 - h)) / (2.0 * h);
  CHECK(pl.gradient(0) == doctest::Approx(grad_fd).epsilon(1e-6));
  const double hess_fd = (at(0.4 + h) - 2.0 * at(0.4) + at(0.4 - h)) / (h * h);
  CHECK(pl.hessian(0, 0) == doctest::Approx(hess_fd).epsilon(1e-4));
}

TEST_CASE("toy maximizer matches the score-equation oracle") {
  const std::vector<double> times = {1.0, 2.0, 3.0, 4.0};
  const std::vector<int> events = {1, 1, 1, 1};
  const std::vector<double> x = {1.0, 0.0, 1.0, 0.0};
  const std::vector<double> offsets(4, 0.0);
  const Dataset data = flat_dataset(times, events, x);

  const double oracle = test::brute_force_cox_maximizer(times, events, x, offsets);
  CHECK(oracle == doctest::Approx(0.9406).epsilon(1e-3));

  const Eigen::VectorXd beta_hat =
      fit_cox(data, offsets, Eigen::VectorXd::Zero(1));
  CHECK(beta_hat(0) == doctest::Approx(oracle).epsilon(1e-6));

  // converges quickly from zero
  CoxOptions few;
  few.max_iter = 10;
  CHECK_NOTHROW(fit_cox(data, offsets, Eigen::VectorXd::Zero(1), few));
}

TEST_CASE("fit_cox properties") {
  Rng rng(7);
  const Dataset data = random_dataset(30, rng);
  const RiskIndex idx(data);
  std::vector<double> offsets;
  for (int i = 0; i < 30; ++i) offsets.push_back(0.2 * rng.normal());

  const Eigen::VectorXd init = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd fitted = fit_cox(idx, offsets, init);
  CHECK(partial_loglik(fitted, idx, offsets).value >=
        partial_loglik(init, idx, offsets).value);

  // common offset shift leaves beta_hat unchanged
  std::vector<double> shifted = offsets;
  for (double& o : shifted) o += 1.7;
  const Eigen::VectorXd fitted2 = fit_cox(idx, shifted, init);
  CHECK(fitted2(0) == doctest::Approx(fitted(0)).epsilon(1e-8));

  // zero-variance covariate: singular information
  const Dataset degenerate =
      flat_dataset({1.0, 2.0, 3.0}, {1, 1, 1}, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(
      fit_cox(degenerate, std::vector<double>(3, 0.0), Eigen::VectorXd::Zero(1)),
      SingularHessianError);
}

TEST_CASE("breslow estimator") {
  // no covariates effect (beta = 0): Nelson-Aalen increments 1/3, 1/2, 1
  const Dataset data = flat_dataset({1.0, 2.0, 3.0}, {1, 1, 1}, {0, 0, 0});
  const StepBaseline base =
      breslow(Eigen::VectorXd::Zero(1), std::vector<double>(3, 0.0), data);
  REQUIRE(base.times.size() == 3);
  CHECK(base.increments[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(base.increments[1] == doctest::Approx(1.0 / 2.0).epsilon(1e-14));
  CHECK(base.increments[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(base.cumulative[2] ==
        doctest::Approx(1.0 / 3.0 + 1.0 / 2.0 + 1.0).epsilon(1e-14));

  // a censored subject enlarges risk sets at times <= its own but adds no jump
  const Dataset with_censored =
      flat_dataset({1.0, 2.0, 3.0, 2.5}, {1, 1, 1, 0}, {0, 0, 0, 0});
  const StepBaseline base2 = breslow(Eigen::VectorXd::Zero(1),
                                     std::vector<double>(4, 0.0), with_censored);
  REQUIRE(base2.times.size() == 3);
  CHECK(base2.increments[0] == doctest::Approx(1.0 / 4.0).epsilon(1e-14));
  CHECK(base2.increments[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(base2.increments[2] == doctest::Approx(1.0).epsilon(1e-14));

  // an offset of ln 2 doubles that cluster's contribution to denominators
  std::vector<Cluster> clusters;
  clusters.push_back(Cluster{"a", {Subject{1.0, true, Eigen::VectorXd::Zero(1)},
                                   Subject{2.0, false, Eigen::VectorXd::Zero(1)}}});
  clusters.push_back(Cluster{"b", {Subject{1.5, true, Eigen::VectorXd::Zero(1)}}});
  const Dataset two(clusters);
  const StepBaseline plain =
      breslow(Eigen::VectorXd::Zero(1), {0.0, 0.0}, two);
  const StepBaseline boosted =
      breslow(Eigen::VectorXd::Zero(1), {std::log(2.0), 0.0}, two);
  // at t=1.0 the risk set is {a:1.0, a:2.0, b:1.5}: denominators 3 vs 2+2+1
  CHECK(plain.increments[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(boosted.increments[0] == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
  // at t=1.5 the risk set is {a:2.0, b:1.5}: 1/2 vs 1/(2+1)
  CHECK(plain.increments[1] == doctest::Approx(1.0 / 2.0).epsilon(1e-14));
  CHECK(boosted.increments[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("breslow increments positive, cumulative nondecreasing") {
  Rng rng(11);
  const Dataset data = random_dataset(40, rng);
  const std::vector<double> offsets(40, 0.0);
  const Eigen::VectorXd beta =
      fit_cox(data, offsets, Eigen::VectorXd::Zero(1));
  const StepBaseline base = breslow(beta, offsets, data);
  double prev = 0.0;
  for (std::size_t k = 0; k < base.times.size(); ++k) {
    CHECK(base.increments[k] > 0.0);
    CHECK(base.cumulative[k] >= prev);
    prev = base.cumulative[k];
  }
}

TEST_CASE("matches the brute-force maximizer on tiny datasets") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform() * 3);  // 4..6 subjects
    std::vector<double> times, x;
    std::vector<int> events;
    for (int i = 0; i < n; ++i) {
      times.push_back(0.2 + 3.0 * rng.uniform_pos());
      events.push_back(rng.bernoulli(0.8) ? 1 : 0);
      x.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    // need events in both covariate groups for a finite maximizer
    bool has0 = false, has1 = false;
    for (int i = 0; i < n; ++i) {
      if (events[i] && x[i] == 0.0) has0 = true;
      if (events[i] && x[i] == 1.0) has1 = true;
    }
    if (!has0 || !has1) continue;

    const std::vector<double> offsets(static_cast<std::size_t>(n), 0.0);
    const double oracle =
        test::brute_force_cox_maximizer(times, events, x, offsets);
    if (std::fabs(oracle) > 4.0) continue;  // near-monotone layout, skip
    const Dataset data = flat_dataset(times, events, x);
    const Eigen::VectorXd beta_hat =
        fit_cox(data, offsets, Eigen::VectorXd::Zero(1));
    CHECK(beta_hat(0) == doctest::Approx(oracle).epsilon(1e-4));

    // Breslow increments against the direct formula
    const StepBaseline base = breslow(beta_hat, offsets, data);
    for (std::size_t k = 0; k < base.times.size(); ++k) {
      double denom = 0.0;
      int dk = 0;
      for (int i = 0; i < n; ++i) {
        if (times[static_cast<std::size_t>(i)] >= base.times[k]) {
          denom += std::exp(x[static_cast<std::size_t>(i)] * beta_hat(0));
        }
        if (events[static_cast<std::size_t>(i)] &&
            times[static_cast<std::size_t>(i)] == base.times[k]) {
          ++dk;
        }
      }
      CHECK(base.increments[k] == doctest::Approx(dk / denom).epsilon(1e-10));
    }
  }
}

}  // TEST_SUITE
