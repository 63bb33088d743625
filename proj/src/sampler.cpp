#include "ltc/sampler.hpp"

#include <cmath>

#include <fmt/core.h>

#include "ltc/error.hpp"

namespace ltc {

Eigen::VectorXd ddim_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps, double alpha_bar_t,
                          double alpha_bar_prev) {
  if (x_t.size() != eps.size()) {
    throw ConfigError(fmt::format("state has dimension {}, prediction {}", x_t.size(), eps.size()));
  }
  const Eigen::VectorXd x0 = (x_t - std::sqrt(1.0 - alpha_bar_t) * eps) / std::sqrt(alpha_bar_t);
  return std::sqrt(alpha_bar_prev) * x0 + std::sqrt(1.0 - alpha_bar_prev) * eps;
}

Eigen::VectorXd ddim_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps,
                          const NoiseSchedule& schedule, int t, int t_prev) {
  if (!(t_prev < t)) {
    throw ConfigError(fmt::format("DDIM step must move toward t=0 (t={}, t_prev={})", t, t_prev));
  }
  return ddim_step(x_t, eps, schedule.alpha_bar(t), schedule.alpha_bar(t_prev));
}

void validate_timesteps(std::span<const int> timesteps, const NoiseSchedule& schedule) {
  if (timesteps.size() < 2) {
    throw ConfigError("timestep grid needs at least two entries");
  }
  if (timesteps.front() != schedule.steps() || timesteps.back() != 0) {
    throw ConfigError(fmt::format("timestep grid must run from {} to 0, got {} to {}",
                                  schedule.steps(), timesteps.front(), timesteps.back()));
  }
  for (std::size_t k = 1; k < timesteps.size(); ++k) {
    if (!(timesteps[k] < timesteps[k - 1])) {
      throw ConfigError(fmt::format("timestep grid not strictly descending at position {}", k));
    }
  }
}

Eigen::VectorXd real_step(const Denoiser& denoiser, const NoiseSchedule& schedule,
                          std::span<const int> timesteps, const Eigen::VectorXd& x, int from,
                          int to, Eigen::VectorXd* eps_out) {
  const int iterations = static_cast<int>(timesteps.size()) - 1;
  const int t = timesteps[static_cast<std::size_t>(from)];
  const int t_prev = timesteps[static_cast<std::size_t>(to)];
  Eigen::VectorXd eps = denoiser.predict(x, EvalPoint{t, iterations - from});
  Eigen::VectorXd next = ddim_step(x, eps, schedule, t, t_prev);
  if (!next.allFinite()) {
    throw NumericError(fmt::format("non-finite state after step {} -> {}", t, t_prev));
  }
  if (eps_out) *eps_out = std::move(eps);
  return next;
}

Trajectory sample_full(const Denoiser& denoiser, const NoiseSchedule& schedule,
                       const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                       std::uint64_t seed) {
  return sample_skipping(denoiser, schedule, x_init, timesteps, {}, seed);
}

Trajectory sample_skipping(const Denoiser& denoiser, const NoiseSchedule& schedule,
                           const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                           const std::set<int>& skipped, std::uint64_t seed) {
  validate_timesteps(timesteps, schedule);
  const int iterations = static_cast<int>(timesteps.size()) - 1;
  for (int k : skipped) {
    if (k <= 0 || k >= iterations) {
      throw ConfigError(fmt::format("cannot skip grid position {} (interior is 1..{})", k,
                                    iterations - 1));
    }
  }

  Trajectory traj;
  traj.seed = seed;
  traj.timesteps.push_back(timesteps.front());
  traj.states.push_back(x_init);
  int from = 0;
  for (int k = 1; k <= iterations; ++k) {
    if (skipped.count(k)) continue;
    Eigen::VectorXd eps;
    Eigen::VectorXd next = real_step(denoiser, schedule, timesteps, traj.states.back(), from, k, &eps);
    ++traj.nfe;
    traj.eps_cache[timesteps[static_cast<std::size_t>(from)]] = std::move(eps);
    traj.timesteps.push_back(timesteps[static_cast<std::size_t>(k)]);
    traj.states.push_back(std::move(next));
    from = k;
  }
  return traj;
}

}  // namespace ltc
