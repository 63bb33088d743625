#include "ltc/transition.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "ltc/error.hpp"
#include "ltc/sampler.hpp"

namespace ltc {
namespace {

void require_same_dim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw ConfigError(fmt::format("dimension mismatch: {} vs {}", a.size(), b.size()));
  }
}

}  // namespace

TransitionOperator transition(const Eigen::VectorXd& x_lo, const Eigen::VectorXd& x_hi, int hi) {
  require_same_dim(x_lo, x_hi);
  return TransitionOperator{hi, hi - 1, x_lo - x_hi};
}

double angle(const TransitionOperator& d1, const TransitionOperator& d2) {
  require_same_dim(d1.delta, d2.delta);
  const double n1 = d1.delta.norm();
  const double n2 = d2.delta.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) {
    throw DegenerateTransition(
        fmt::format("angle undefined for zero transition (norms {}, {})", n1, n2));
  }
  const double cosine = d1.delta.dot(d2.delta) / (n1 * n2);
  return std::acos(std::clamp(cosine, -1.0, 1.0));
}

double wg_closed_form(const TransitionOperator& d_prev, const TransitionOperator& d_prev2,
                      double gamma) {
  require_same_dim(d_prev.delta, d_prev2.delta);
  const double norm2 = d_prev2.delta.squaredNorm();
  if (!(norm2 > 0.0)) {
    throw DegenerateTransition("look-back transition has zero norm");
  }
  if (!(gamma > 0.0)) {
    throw NumericError(fmt::format("step ratio must be positive, got {}", gamma));
  }
  return d_prev.delta.dot(d_prev2.delta) / (gamma * norm2);
}

Eigen::VectorXd approx_step(const Eigen::VectorXd& x_hi, const TransitionOperator& d_prev2,
                            double wg, double gamma) {
  require_same_dim(x_hi, d_prev2.delta);
  return x_hi + (wg * gamma) * d_prev2.delta;
}

double relative_error(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_approx,
                      const TransitionOperator& d_prev) {
  require_same_dim(x_true, x_approx);
  require_same_dim(x_true, d_prev.delta);
  const double ref = d_prev.delta.squaredNorm();
  if (!(ref > 0.0)) {
    throw DegenerateTransition("relative error undefined for a zero reference transition");
  }
  return (x_true - x_approx).squaredNorm() / ref;
}

AngleTrace angle_trace(const Trajectory& trajectory) {
  AngleTrace trace;
  const auto& xs = trajectory.states;
  for (std::size_t k = 2; k < xs.size(); ++k) {
    const auto cur = transition(xs[k], xs[k - 1], static_cast<int>(k));
    const auto prev = transition(xs[k - 1], xs[k - 2], static_cast<int>(k) - 1);
    trace.theta.push_back(angle(cur, prev));
  }
  return trace;
}

std::optional<Interval> detect_interval(std::span<const double> theta, double tau) {
  std::optional<Interval> best;
  int run_start = -1;
  const int n = static_cast<int>(theta.size());
  for (int k = 0; k <= n; ++k) {
    const bool below = k < n && theta[static_cast<std::size_t>(k)] < tau;
    if (below && run_start < 0) run_start = k;
    if (!below && run_start >= 0) {
      const Interval run{run_start, k - 1};
      if (!best || run.size() > best->size()) best = run;
      run_start = -1;
    }
  }
  return best;
}

std::optional<Interval> detect_interval(const AngleTrace& trace, double tau) {
  auto found = detect_interval(std::span<const double>(trace.theta), tau);
  if (found) {
    found->first += trace.first_iteration;
    found->last += trace.first_iteration;
  }
  return found;
}

}  // namespace ltc
