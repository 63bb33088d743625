#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ltc/model.hpp"
#include "ltc/schedule.hpp"
#include "ltc/trace.hpp"

namespace fixtures {

// Counts calls to the wrapped denoiser.
class CountingDenoiser final : public ltc::Denoiser {
 public:
  explicit CountingDenoiser(const ltc::Denoiser& inner) : inner_(inner) {}
  Eigen::VectorXd predict(const Eigen::VectorXd& x, const ltc::EvalPoint& at) const override {
    ++calls;
    return inner_.predict(x, at);
  }
  Eigen::Index dim() const override { return inner_.dim(); }

  mutable std::atomic<int> calls{0};

 private:
  const ltc::Denoiser& inner_;
};

// Schedule over `steps` indices whose sqrt-SNR values are given directly
// (phi[t] for t = 1..steps, strictly decreasing in t).
inline ltc::NoiseSchedule schedule_from_phi(const std::vector<double>& phi_by_t) {
  std::vector<double> ab{1.0};
  for (double p : phi_by_t) {
    const double snr = p * p;
    ab.push_back(snr / (1.0 + snr));
  }
  return ltc::NoiseSchedule::from_alpha_bar(std::move(ab));
}

// Noise predictions that make DDIM on `grid` visit the given states exactly:
// solves x_next = ddim(x, eps) for eps at each step.
inline ltc::Trace trace_through(const ltc::NoiseSchedule& schedule, std::span<const int> grid,
                                const std::vector<Eigen::VectorXd>& states) {
  ltc::Trace trace;
  trace.dim = static_cast<int>(states[0].size());
  trace.steps = static_cast<int>(grid.size()) - 1;
  trace.seeds = 1;
  for (int k = 0; k < trace.steps; ++k) {
    const double a = schedule.alpha_bar(grid[static_cast<std::size_t>(k)]);
    const double ap = schedule.alpha_bar(grid[static_cast<std::size_t>(k) + 1]);
    const double scale = std::sqrt(ap / a);
    const double denom = std::sqrt(1.0 - ap) - scale * std::sqrt(1.0 - a);
    const Eigen::VectorXd eps =
        (states[static_cast<std::size_t>(k) + 1] - scale * states[static_cast<std::size_t>(k)]) / denom;
    for (Eigen::Index j = 0; j < eps.size(); ++j) trace.values.push_back(static_cast<float>(eps[j]));
  }
  return trace;
}

// Replayed run whose states advance by equal increments along one line.
// phi over the grid grows by increments that multiply by `ratio` each step,
// so every step ratio gamma equals `ratio`. Kept at low SNR, where the DDIM
// path without noise already nearly scales linearly with phi, so the
// replayed (float) predictions stay small and the drift exact to ~1e-12.
struct LinearDrift {
  std::shared_ptr<const ltc::NoiseSchedule> schedule;
  std::vector<int> grid;
  std::shared_ptr<const ltc::Trace> trace;
  Eigen::VectorXd x_init;
};

inline LinearDrift linear_drift(int iterations, double ratio, Eigen::Index dim = 4) {
  LinearDrift out;
  std::vector<double> phi_by_t(static_cast<std::size_t>(iterations));
  double increment = 1e-4;
  double value = 1e-3;
  // t = iterations is the noisiest index
  for (int t = iterations; t >= 1; --t) {
    phi_by_t[static_cast<std::size_t>(t - 1)] = value;
    value += increment;
    increment *= ratio;
  }
  out.schedule = std::make_shared<const ltc::NoiseSchedule>(schedule_from_phi(phi_by_t));
  out.grid = ltc::sampling_grid(iterations, iterations);

  out.x_init = Eigen::VectorXd::LinSpaced(dim, 1.0, 2.0);
  const double step = 1e-4 / phi_by_t.back();
  std::vector<Eigen::VectorXd> states;
  for (int k = 0; k <= iterations; ++k) states.push_back(out.x_init * (1.0 + step * k));
  out.trace = std::make_shared<const ltc::Trace>(trace_through(*out.schedule, out.grid, states));
  return out;
}

}  // namespace fixtures
