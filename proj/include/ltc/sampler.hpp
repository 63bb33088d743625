#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ltc/model.hpp"
#include "ltc/schedule.hpp"

namespace ltc {

// States of one reverse run, noisiest first. states[k] sits at timesteps[k];
// iteration k (1-based) produced states[k] from states[k - 1].
struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<int> timesteps;
  std::vector<Eigen::VectorXd> states;
  // Noise prediction used for each real step, keyed by the input timestep.
  std::map<int, Eigen::VectorXd> eps_cache;
  int nfe = 0;
  // Iterations synthesised by extrapolation instead of a denoiser call.
  std::vector<int> approximated;
  // Accelerable iterations that fell back to a real step (zero look-back
  // transition). Counted in nfe.
  std::vector<int> fallbacks;

  int iterations() const { return static_cast<int>(states.size()) - 1; }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

// Deterministic DDIM update (eta = 0) from alpha_bar values.
Eigen::VectorXd ddim_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps, double alpha_bar_t,
                          double alpha_bar_prev);

// Same update between schedule indices; requires 0 <= t_prev < t <= T.
Eigen::VectorXd ddim_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps,
                          const NoiseSchedule& schedule, int t, int t_prev);

// Throws ConfigError unless timesteps runs strictly downward from T to 0.
void validate_timesteps(std::span<const int> timesteps, const NoiseSchedule& schedule);

// One real denoising iteration from grid position `from` to `to`. The trace
// step for replay is derived from the full grid length.
Eigen::VectorXd real_step(const Denoiser& denoiser, const NoiseSchedule& schedule,
                          std::span<const int> timesteps, const Eigen::VectorXd& x, int from,
                          int to, Eigen::VectorXd* eps_out = nullptr);

Trajectory sample_full(const Denoiser& denoiser, const NoiseSchedule& schedule,
                       const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                       std::uint64_t seed = 0);

// Removes the listed iterations (interior grid positions) and lets DDIM jump
// across them. Endpoints cannot be skipped.
Trajectory sample_skipping(const Denoiser& denoiser, const NoiseSchedule& schedule,
                           const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                           const std::set<int>& skipped, std::uint64_t seed = 0);

}  // namespace ltc
