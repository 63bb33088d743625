#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ltc/error.hpp"
#include "ltc/model.hpp"
#include "ltc/rng.hpp"
#include "ltc/sampler.hpp"
#include "ltc/transition.hpp"
#include "oracles.hpp"

using namespace ltc;

namespace {

TransitionOperator op(std::initializer_list<double> values, int hi = 2) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return TransitionOperator{hi, hi - 1, v};
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(dim);
  for (Eigen::Index j = 0; j < dim; ++j) v[j] = n(rng);
  return v;
}

}  // namespace

TEST_CASE("transition examples") {
  const Eigen::Vector2d a(0.5, -1.0);
  CHECK(transition(a, a, 3).delta.isZero(0.0));
  const auto t = transition(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 2), 5);
  CHECK(t.delta == Eigen::Vector2d(1, 0));
  CHECK(t.hi == 5);
  CHECK(t.lo == 4);

  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const auto x = random_vector(rng, 6);
    const auto y = random_vector(rng, 6);
    CHECK(transition(x, y, 1).delta == -transition(y, x, 1).delta);
  }
}

TEST_CASE("angle examples") {
  CHECK(angle(op({1, 0}), op({1, 0})) == 0.0);
  CHECK(angle(op({1, 0}), op({0, 1})) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(angle(op({1, 0}), op({1, 1})) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(angle(op({1, 0}), op({-2, 0})) == doctest::Approx(std::numbers::pi).epsilon(1e-15));
  CHECK_THROWS_AS(angle(op({0, 0}), op({1, 0})), DegenerateTransition);
  CHECK_THROWS_AS(angle(op({1, 0}), op({1, 0, 0})), ConfigError);
}

TEST_CASE("angle of nearly parallel vectors stays finite") {
  const auto a = op({1e-3, 1e-3, 1e-3});
  const auto b = op({3.0, 3.0, 3.0});
  const double theta = angle(a, b);
  CHECK(std::isfinite(theta));
  CHECK(theta >= 0.0);
  CHECK(theta < 1e-7);
}

TEST_CASE("angle is symmetric and scale invariant") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int k = 0; k < 200; ++k) {
    const TransitionOperator a{2, 1, random_vector(rng, 8)};
    const TransitionOperator b{3, 2, random_vector(rng, 8)};
    const double theta = angle(a, b);
    CHECK(theta == angle(b, a));
    const TransitionOperator a_scaled{2, 1, scale(rng) * a.delta};
    const TransitionOperator b_scaled{3, 2, scale(rng) * b.delta};
    CHECK(angle(a_scaled, b_scaled) == doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_CASE("wg closed form examples") {
  CHECK(wg_closed_form(op({1, 2}), op({1, 2}), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wg_closed_form(op({2, 4}), op({1, 2}), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(wg_closed_form(op({1, 2}), op({1, 2}), 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(wg_closed_form(op({1, 2}), op({0, 0}), 1.0), DegenerateTransition);
  CHECK_THROWS_AS(wg_closed_form(op({1, 2}), op({1, 2}), 0.0), NumericError);
}

TEST_CASE("wg closed form matches a golden-section minimiser") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> g(0.5, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const TransitionOperator d1{3, 2, random_vector(rng, 8)};
    const TransitionOperator d2{4, 3, random_vector(rng, 8)};
    const double gamma = g(rng);
    const double w = wg_closed_form(d1, d2, gamma);
    const auto objective = [&](double x) { return (d1.delta - x * gamma * d2.delta).squaredNorm(); };
    const double reference = oracle::golden_minimize(objective, w - 10.0, w + 10.0);
    CHECK(std::abs(w - reference) < 1e-6);
  }
}

TEST_CASE("wg closed form scale covariance") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const TransitionOperator d1{3, 2, random_vector(rng, 5)};
    const TransitionOperator d2{4, 3, random_vector(rng, 5)};
    const double c = 0.1 + 0.05 * k;
    const double w = wg_closed_form(d1, d2, 1.3);
    CHECK(wg_closed_form({3, 2, c * d1.delta}, d2, 1.3) == doctest::Approx(c * w).epsilon(1e-12));
    CHECK(wg_closed_form(d1, {4, 3, c * d2.delta}, 1.3) == doctest::Approx(w / c).epsilon(1e-12));
  }
}

TEST_CASE("approx step examples") {
  const Eigen::Vector2d x(1.0, -1.0);
  const auto d = op({0.5, 0.25});
  CHECK(approx_step(x, d, 0.0, 1.7) == x);
  CHECK(approx_step(x, d, 1.0, 1.0) == x + d.delta);
}

TEST_CASE("optimal residual is orthogonal to the look-back transition") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const auto x2 = random_vector(rng, 8);
    const auto x1 = random_vector(rng, 8);
    const auto x0 = random_vector(rng, 8);
    const auto d_prev2 = transition(x1, x2, 3);
    const auto d_prev = transition(x0, x1, 2);
    const double gamma = 0.5 + 0.01 * k;
    const double w = wg_closed_form(d_prev, d_prev2, gamma);
    const Eigen::VectorXd residual = d_prev.delta - w * gamma * d_prev2.delta;
    CHECK(std::abs(residual.dot(d_prev2.delta)) / d_prev2.delta.squaredNorm() < 1e-10);
    const auto x_star = approx_step(x1, d_prev2, w, gamma);
    CHECK((x0 - x_star - residual).norm() < 1e-12);
  }
}

TEST_CASE("relative error examples") {
  std::mt19937_64 rng(6);
  const auto x1 = random_vector(rng, 4);
  const auto x0 = random_vector(rng, 4);
  const auto d = transition(x0, x1, 2);
  CHECK(relative_error(x0, x0, d) == 0.0);
  CHECK(relative_error(x0, x1, d) == 1.0);
  CHECK_THROWS_AS(relative_error(x0, x0, transition(x0, x0, 2)), DegenerateTransition);
}

TEST_CASE("relative error at the optimal weight equals sin^2 of the angle") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    const auto x2 = random_vector(rng, 8);
    const auto x1 = random_vector(rng, 8);
    const auto x0 = random_vector(rng, 8);
    const auto d_prev2 = transition(x1, x2, 3);
    const auto d_prev = transition(x0, x1, 2);
    const double gamma = 0.5 + 0.003 * k;
    const double w = wg_closed_form(d_prev, d_prev2, gamma);
    const double s = std::sin(angle(d_prev, d_prev2));
    CHECK(std::abs(relative_error(x0, approx_step(x1, d_prev2, w, gamma), d_prev) - s * s) < 1e-10);
  }
}

TEST_CASE("detect interval examples") {
  const std::vector<double> theta = {0.5, 0.05, 0.05, 0.05, 0.5};
  CHECK(detect_interval(theta, 0.1) == Interval{1, 3});
  CHECK_FALSE(detect_interval(std::vector<double>{0.2, 0.3, 0.1}, 0.1).has_value());
  CHECK_FALSE(detect_interval(std::vector<double>{}, 0.1).has_value());
  // equal-length runs resolve to the earliest
  CHECK(detect_interval(std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0}, 0.1) == Interval{0, 1});
  CHECK(detect_interval(std::vector<double>{1.0, 0.0, 0.0}, 0.1) == Interval{1, 2});
}

TEST_CASE("detect interval on a trace shaped like a real model's angle curve") {
  // High angles early, a long flat dip, then a rising tail near t = 0.
  AngleTrace trace;
  trace.first_iteration = 2;
  for (int i = 2; i <= 40; ++i) {
    double theta = 0.0;
    if (i < 12) {
      theta = 0.6 - 0.04 * i;
    } else if (i <= 38) {
      theta = 0.03 + 0.02 * std::sin(0.3 * i);
    } else {
      theta = 0.2 + 0.1 * (i - 38);
    }
    trace.theta.push_back(theta);
  }
  CHECK(detect_interval(trace, 0.1) == Interval{12, 38});
}

TEST_CASE("detected interval is maximal") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int k = 0; k < 300; ++k) {
    std::vector<double> theta(1 + k % 30);
    for (auto& t : theta) t = u(rng);
    const auto found = detect_interval(theta, 0.1);
    if (!found) {
      for (double t : theta) CHECK(t >= 0.1);
      continue;
    }
    for (int i = found->first; i <= found->last; ++i) CHECK(theta[static_cast<std::size_t>(i)] < 0.1);
    if (found->first > 0) CHECK(theta[static_cast<std::size_t>(found->first) - 1] >= 0.1);
    if (found->last + 1 < static_cast<int>(theta.size())) {
      CHECK(theta[static_cast<std::size_t>(found->last) + 1] >= 0.1);
    }
  }
}

TEST_CASE("angle trace of a sampled trajectory") {
  const auto s = std::make_shared<const NoiseSchedule>(build_linear_beta(1000, 1e-4, 0.02));
  const AnalyticDenoiser d(gmm_benchmark(), s);
  const auto traj = sample_full(d, *s, initial_noise(0, 16), sampling_grid(1000, 40));
  const auto trace = angle_trace(traj);
  REQUIRE(trace.theta.size() == 39);
  CHECK(trace.first_iteration == 2);
  for (double t : trace.theta) {
    CHECK(t >= 0.0);
    CHECK(t <= std::numbers::pi);
  }
  // iteration 2 compares states[2]-states[1] with states[1]-states[0]
  const double expected = angle(transition(traj.states[2], traj.states[1], 2),
                                transition(traj.states[1], traj.states[0], 1));
  CHECK(trace.theta[0] == expected);
}
