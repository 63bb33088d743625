#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ltc {

struct Trajectory;

// Displacement produced by one denoising step: delta = x_lo - x_hi, where
// `hi` is the noisier (earlier) state.
struct TransitionOperator {
  int hi = 0;
  int lo = 0;
  Eigen::VectorXd delta;
};

TransitionOperator transition(const Eigen::VectorXd& x_lo, const Eigen::VectorXd& x_hi, int hi);

// Angle in [0, pi] between two operators. Uses unsquared norms so the
// argument of arccos is a cosine; clamped to [-1, 1].
double angle(const TransitionOperator& d1, const TransitionOperator& d2);

// Least-squares scale w minimising |d_prev - w * gamma * d_prev2|^2.
double wg_closed_form(const TransitionOperator& d_prev, const TransitionOperator& d_prev2,
                      double gamma);

// x_hi + wg * gamma * d_prev2. No denoiser call.
Eigen::VectorXd approx_step(const Eigen::VectorXd& x_hi, const TransitionOperator& d_prev2,
                            double wg, double gamma);

// |x_true - x_approx|^2 / |d_prev|^2.
double relative_error(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_approx,
                      const TransitionOperator& d_prev);

// Angles between consecutive transitions. theta[k] belongs to iteration
// first_iteration + k and compares that iteration's transition with the
// previous one.
struct AngleTrace {
  int first_iteration = 2;
  std::vector<double> theta;
};

AngleTrace angle_trace(const Trajectory& trajectory);

// Inclusive index range.
struct Interval {
  int first = 0;
  int last = 0;

  int size() const { return last - first + 1; }
  bool contains(int i) const { return i >= first && i <= last; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Longest run of consecutive positions with theta < tau; earliest run wins
// ties. Positions are 0-based offsets into `theta`. nullopt when nothing
// qualifies.
std::optional<Interval> detect_interval(std::span<const double> theta, double tau);

// Same, translated to iteration numbers.
std::optional<Interval> detect_interval(const AngleTrace& trace, double tau);

}  // namespace ltc
