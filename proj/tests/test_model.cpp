#include <doctest.h>

#include <cmath>
#include <random>

#include "ltc/error.hpp"
#include "ltc/model.hpp"
#include "oracles.hpp"

using namespace ltc;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
  return rows;
}

DiagGmm symmetric_pair() {
  DiagGmm g;
  g.weights = Eigen::Vector2d(0.5, 0.5);
  g.means = Eigen::MatrixXd(2, 1);
  g.means << 1.0, -1.0;
  g.variances = Eigen::MatrixXd::Constant(2, 1, 0.01);
  return g;
}

// Schedule whose alpha_bar at step 1 is 0.5.
NoiseSchedule half_schedule() { return NoiseSchedule::from_alpha_bar({1.0, 0.5, 0.2}); }

}  // namespace

TEST_CASE("point mass at the origin predicts x / sqrt(1 - alpha_bar)") {
  const auto s = build_linear_beta(100, 1e-4, 0.02);
  const PointMass pm{Eigen::VectorXd::Zero(3)};
  const Eigen::Vector3d x(0.5, -1.0, 2.0);
  for (int t : {1, 50, 100}) {
    const auto eps = epsilon_hat(pm, x, t, s);
    CHECK((eps - x / std::sqrt(1.0 - s.alpha_bar(t))).norm() < 1e-14);
  }
}

TEST_CASE("point mass implied clean estimate is exactly mu") {
  const auto s = build_linear_beta(1000, 1e-4, 0.02);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Eigen::VectorXd mu(8);
  for (auto& v : mu) v = n(rng);
  const PointMass pm{mu};
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(8);
    for (auto& v : x) v = 3.0 * n(rng);
    const int t = 1 + static_cast<int>(rng() % 1000);
    const double ab = s.alpha_bar(t);
    const auto eps = epsilon_hat(pm, x, t, s);
    const Eigen::VectorXd x0 = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    CHECK((x0 - mu).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + x.norm() / std::sqrt(ab)));
  }
}

TEST_CASE("single-component mixture vanishes at its diffused mean") {
  const auto s = build_linear_beta(50, 1e-4, 0.02);
  DiagGmm g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd(1, 3);
  g.means << 0.3, -2.0, 1.5;
  g.variances = Eigen::MatrixXd::Constant(1, 3, 0.2);
  for (int t : {1, 25, 50}) {
    const Eigen::VectorXd x = std::sqrt(s.alpha_bar(t)) * g.means.row(0).transpose();
    CHECK(epsilon_hat(g, x, t, s).norm() < 1e-14);
  }
}

TEST_CASE("symmetric bimodal mixture") {
  const auto s = half_schedule();
  const auto g = symmetric_pair();
  CHECK(std::abs(epsilon_hat(g, Eigen::VectorXd::Zero(1), 1, s)[0]) < 1e-15);

  // Frozen at 40 digits offline from the analytic log-density derivative.
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  const double eps = epsilon_hat(g, x, 1, s)[0];
  CHECK(eps == doctest::Approx(0.027010097037564074).epsilon(1e-12));

  // And against a finite-difference gradient of the oracle log-density.
  const auto logp = [&](const std::vector<double>& y) {
    return oracle::gmm_log_density({0.5, 0.5}, {{1.0}, {-1.0}}, {{0.01}, {0.01}}, y, 0.5);
  };
  const double fd = -std::sqrt(0.5) * oracle::fd_gradient(logp, {0.3})[0];
  CHECK(std::abs(eps - fd) <= 1e-4 * std::abs(fd));
}

TEST_CASE("score consistency against finite differences at random points") {
  const auto s = build_linear_beta(1000, 1e-4, 0.02);
  GmmBenchmarkParams params;
  params.dim = 4;
  params.components = 3;
  params.mean_scale = 1.0;
  params.variance_min = 0.05;
  params.variance_max = 0.5;
  const DiagGmm g = gmm_benchmark(params);
  const auto weights = to_std(g.weights);
  const auto means = rows_of(g.means);
  const auto vars = rows_of(g.variances);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 1000);
    const double ab = s.alpha_bar(t);
    Eigen::VectorXd x(4);
    for (auto& v : x) v = n(rng);
    const auto eps = epsilon_hat(g, x, t, s);
    const auto logp = [&](const std::vector<double>& y) {
      return oracle::gmm_log_density(weights, means, vars, y, ab);
    };
    const auto grad = oracle::fd_gradient(logp, to_std(x), 1e-5);
    for (int j = 0; j < 4; ++j) {
      const double expected = -std::sqrt(1.0 - ab) * grad[static_cast<std::size_t>(j)];
      // relative tolerance with a floor for components near zero
      CHECK(std::abs(eps[j] - expected) <= 1e-4 * std::max(std::abs(expected), 1e-2));
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("zero-variance single component reduces to a point mass") {
  const auto s = build_linear_beta(200, 1e-4, 0.02);
  const Eigen::Vector3d mu(1.0, -0.5, 0.25);
  DiagGmm g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = mu.transpose();
  g.variances = Eigen::MatrixXd::Zero(1, 3);
  const PointMass pm{mu};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const int t = 1 + static_cast<int>(rng() % 200);
    const auto a = epsilon_hat(g, x, t, s);
    const auto b = epsilon_hat(pm, x, t, s);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + b.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("extreme responsibilities stay finite") {
  const auto s = build_linear_beta(1000, 1e-4, 0.02);
  const auto g = symmetric_pair();
  const Eigen::VectorXd far = Eigen::VectorXd::Constant(1, 40.0);
  const auto eps = epsilon_hat(g, far, 1, s);
  CHECK(std::isfinite(eps[0]));
}

TEST_CASE("denoiser input errors") {
  const auto s = build_linear_beta(10, 1e-4, 0.02);
  const PointMass pm{Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(epsilon_hat(pm, Eigen::Vector2d(NAN, 0.0), 3, s), NumericError);
  CHECK_THROWS_AS(epsilon_hat(pm, Eigen::Vector2d(0.0, 0.0), 0, s), IndexError);
  CHECK_THROWS_AS(epsilon_hat(pm, Eigen::Vector3d(0.0, 0.0, 0.0), 3, s), ConfigError);
}

TEST_CASE("mixture validation") {
  auto g = symmetric_pair();
  CHECK_NOTHROW(g.validate());
  g.weights = Eigen::Vector2d(0.5, 0.6);
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.weights = Eigen::Vector2d(1.0, 0.0);
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = symmetric_pair();
  g.variances(0, 0) = -1e-3;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = symmetric_pair();
  g.variances = Eigen::MatrixXd::Constant(2, 2, 0.1);
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("benchmark mixture is deterministic and valid") {
  const auto a = gmm_benchmark();
  const auto b = gmm_benchmark();
  CHECK(a.dim() == 16);
  CHECK(a.components() == 4);
  CHECK(a.means == b.means);
  CHECK(a.variances == b.variances);
  CHECK_NOTHROW(a.validate());
  CHECK(a.variances.minCoeff() >= 0.01);
  CHECK(a.variances.maxCoeff() <= 0.1);
}

TEST_CASE("recorded trace denoiser replays stored rows") {
  auto trace = std::make_shared<Trace>();
  trace->dim = 2;
  trace->steps = 3;
  trace->seeds = 2;
  for (int i = 0; i < 12; ++i) trace->values.push_back(static_cast<float>(i));
  const TraceDenoiser seed1(trace, 1);
  // seed 1 rows start at index 6; step 3 is stored first
  const auto v = seed1.predict(Eigen::Vector2d::Zero(), EvalPoint{999, 3});
  CHECK(v[0] == 6.0);
  CHECK(v[1] == 7.0);
  const auto w = seed1.predict(Eigen::Vector2d::Zero(), EvalPoint{0, 1});
  CHECK(w[0] == 10.0);
  CHECK_THROWS_AS(seed1.predict(Eigen::Vector2d::Zero(), EvalPoint{0, 4}), TraceExhausted);
  const TraceDenoiser seed2(trace, 2);
  CHECK_THROWS_AS(seed2.predict(Eigen::Vector2d::Zero(), EvalPoint{0, 1}), TraceExhausted);
}
