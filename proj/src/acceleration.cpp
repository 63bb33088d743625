#include "ltc/acceleration.hpp"

#include <cmath>

#include <fmt/core.h>

#include "ltc/error.hpp"
#include "ltc/metrics.hpp"

namespace ltc {
namespace {

double step_gamma(const NoiseSchedule& schedule, std::span<const int> timesteps, int iteration,
                  PhiMode mode) {
  const auto at = [&](int k) {
    return phi(schedule, timesteps[static_cast<std::size_t>(k)], mode);
  };
  return gamma(at(iteration), at(iteration - 1), at(iteration - 2));
}

}  // namespace

bool AccelerationPlan::accelerates(int iteration) const {
  return interval && interval->contains(iteration) && iteration % period == period - 1;
}

std::vector<int> AccelerationPlan::accelerated_iterations(int total_iterations) const {
  std::vector<int> out;
  for (int i = 1; i <= total_iterations; ++i) {
    if (accelerates(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::string> AccelerationPlan::validate(int total_iterations, bool require_wg) const {
  if (period < 2) {
    throw ConfigError(fmt::format("acceleration period must be >= 2, got {}", period));
  }
  if (!(tau > 0.0)) {
    throw ConfigError(fmt::format("tau must be positive, got {}", tau));
  }
  if (interval) {
    if (interval->first < 2 || interval->first > interval->last ||
        interval->last > total_iterations - 1) {
      throw ConfigError(fmt::format(
          "acceleration interval [{}, {}] invalid for {} iterations (need 2 <= a <= b <= {})",
          interval->first, interval->last, total_iterations, total_iterations - 1));
    }
    if (require_wg) {
      for (int i : accelerated_iterations(total_iterations)) {
        if (!wg.count(i)) {
          throw ConfigError(fmt::format("no wg entry for accelerated iteration {}", i));
        }
      }
    }
  }
  std::vector<std::string> warnings;
  if (tau > kTauCeiling) {
    warnings.push_back(
        fmt::format("tau = {} exceeds the recommended ceiling {}", tau, kTauCeiling));
  }
  if (period > 2) {
    warnings.push_back(fmt::format("period {} > 2: the error bound covers single extrapolations only", period));
  }
  return warnings;
}

AccelerationPlan plan_after(int after, int total_iterations, int period) {
  AccelerationPlan plan;
  plan.period = period;
  plan.interval = Interval{std::max(after + 1, 2), total_iterations - 1};
  if (plan.interval->first > plan.interval->last) plan.interval.reset();
  return plan;
}

Trajectory accelerated_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                              const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                              const AccelerationPlan& plan, std::uint64_t seed,
                              std::vector<ShadowRecord>* shadow) {
  validate_timesteps(timesteps, schedule);
  const int iterations = static_cast<int>(timesteps.size()) - 1;
  plan.validate(iterations);

  Trajectory traj;
  traj.seed = seed;
  traj.timesteps.assign(timesteps.begin(), timesteps.end());
  traj.states.reserve(timesteps.size());
  traj.states.push_back(x_init);

  for (int i = 1; i <= iterations; ++i) {
    const Eigen::VectorXd& x_prev = traj.states[static_cast<std::size_t>(i - 1)];
    if (plan.accelerates(i)) {
      const auto look_back = transition(x_prev, traj.states[static_cast<std::size_t>(i - 2)], i - 1);
      if (look_back.delta.squaredNorm() > 0.0) {
        const double g = step_gamma(schedule, timesteps, i, plan.phi_mode);
        const double w = plan.wg.at(i) + plan.bias;
        Eigen::VectorXd next = approx_step(x_prev, look_back, w, g);
        if (shadow) {
          const Eigen::VectorXd real = real_step(denoiser, schedule, timesteps, x_prev, i - 1, i);
          const auto actual = transition(real, x_prev, i);
          ShadowRecord rec;
          rec.iteration = i;
          rec.gamma = g;
          rec.wg_applied = w;
          rec.theta = angle(actual, look_back);
          rec.wg_optimal = wg_closed_form(actual, look_back, g);
          rec.eps_r_applied = relative_error(real, next, actual);
          rec.eps_r_optimal =
              relative_error(real, approx_step(x_prev, look_back, rec.wg_optimal, g), actual);
          shadow->push_back(rec);
        }
        traj.approximated.push_back(i);
        traj.states.push_back(std::move(next));
        continue;
      }
      traj.fallbacks.push_back(i);
    }
    Eigen::VectorXd eps;
    Eigen::VectorXd next = real_step(denoiser, schedule, timesteps, x_prev, i - 1, i, &eps);
    ++traj.nfe;
    traj.eps_cache[timesteps[static_cast<std::size_t>(i - 1)]] = std::move(eps);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Calibration calibrate_wg(const Denoiser& denoiser, const NoiseSchedule& schedule,
                         const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                         const AccelerationPlan& skeleton, std::uint64_t seed) {
  validate_timesteps(timesteps, schedule);
  const int iterations = static_cast<int>(timesteps.size()) - 1;
  skeleton.validate(iterations, /*require_wg=*/false);

  Calibration out;
  Trajectory& traj = out.trajectory;
  traj.seed = seed;
  traj.timesteps.assign(timesteps.begin(), timesteps.end());
  traj.states.push_back(x_init);

  for (int i = 1; i <= iterations; ++i) {
    const Eigen::VectorXd x_prev = traj.states.back();
    Eigen::VectorXd eps;
    Eigen::VectorXd real = real_step(denoiser, schedule, timesteps, x_prev, i - 1, i, &eps);
    ++traj.nfe;
    traj.eps_cache[timesteps[static_cast<std::size_t>(i - 1)]] = std::move(eps);

    if (skeleton.accelerates(i)) {
      const auto look_back = transition(x_prev, traj.states[static_cast<std::size_t>(i - 2)], i - 1);
      if (look_back.delta.squaredNorm() > 0.0) {
        const double g = step_gamma(schedule, timesteps, i, skeleton.phi_mode);
        const double w = wg_closed_form(transition(real, x_prev, i), look_back, g);
        out.wg[i] = w;
        traj.approximated.push_back(i);
        traj.states.push_back(approx_step(x_prev, look_back, w, g));
        continue;
      }
      // a zero look-back makes every weight equivalent
      out.wg[i] = 0.0;
      traj.fallbacks.push_back(i);
    }
    traj.states.push_back(std::move(real));
  }
  return out;
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double refine_bias(const std::function<double(double)>& psnr_of_bias, double lo, double hi,
                   BiasSearch mode) {
  if (lo > hi) {
    throw ConfigError(fmt::format("bias interval [{}, {}] is reversed", lo, hi));
  }
  if (lo == hi) return lo;

  double best = 0.0;
  double best_score = -INFINITY;
  const auto consider = [&](double bias, double score) {
    if (score > best_score) {
      best = bias;
      best_score = score;
    }
  };

  if (lo <= 0.0 && 0.0 <= hi) consider(0.0, psnr_of_bias(0.0));

  double search_lo = lo;
  double search_hi = hi;
  if (mode == BiasSearch::kGridGolden) {
    constexpr int kGridPoints = 11;
    int best_k = 0;
    double grid_best = -INFINITY;
    for (int k = 0; k < kGridPoints; ++k) {
      const double bias = lo + (hi - lo) * k / (kGridPoints - 1);
      const double score = psnr_of_bias(bias);
      consider(bias, score);
      if (score > grid_best) {
        grid_best = score;
        best_k = k;
      }
    }
    search_lo = lo + (hi - lo) * std::max(best_k - 1, 0) / (kGridPoints - 1);
    search_hi = lo + (hi - lo) * std::min(best_k + 1, kGridPoints - 1) / (kGridPoints - 1);
  }
  const double refined = golden_section_maximize(psnr_of_bias, search_lo, search_hi);
  consider(refined, psnr_of_bias(refined));
  return best;
}

double refine_bias(const Denoiser& denoiser, const NoiseSchedule& schedule,
                   const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                   const AccelerationPlan& plan, double lo, double hi, BiasSearch mode) {
  const Trajectory full = sample_full(denoiser, schedule, x_init, timesteps);
  const auto objective = [&](double bias) {
    AccelerationPlan trial = plan;
    trial.bias = bias;
    const Trajectory accel = accelerated_sample(denoiser, schedule, x_init, timesteps, trial);
    return psnr(full.final_state(), accel.final_state());
  };
  return refine_bias(objective, lo, hi, mode);
}

}  // namespace ltc
