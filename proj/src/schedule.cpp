#include "ltc/schedule.hpp"

#include <cmath>
#include <fmt/core.h>

#include "ltc/error.hpp"

namespace ltc {

PhiMode parse_phi_mode(std::string_view name) {
  if (name == "sqrt_snr") return PhiMode::kSqrtSnr;
  if (name == "snr") return PhiMode::kSnr;
  throw ConfigError(fmt::format("unknown phi mode '{}'", name));
}

std::string_view to_string(PhiMode mode) {
  return mode == PhiMode::kSnr ? "snr" : "sqrt_snr";
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  snr_.resize(alpha_bar_.size());
  snr_[0] = 0.0;  // never read; phi(0) is forbidden
  for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
    snr_[t] = alpha_bar_[t] / (1.0 - alpha_bar_[t]);
  }
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar) {
  if (alpha_bar.size() < 2) {
    throw ConfigError("schedule needs at least one step");
  }
  if (!(alpha_bar.front() <= 1.0) || !(alpha_bar.back() > 0.0)) {
    throw ConfigError("alpha_bar must lie in (0, 1]");
  }
  for (std::size_t t = 1; t < alpha_bar.size(); ++t) {
    if (!std::isfinite(alpha_bar[t]) || !(alpha_bar[t] < alpha_bar[t - 1])) {
      throw ConfigError(fmt::format("alpha_bar not strictly decreasing at t={}", t));
    }
  }
  return NoiseSchedule(std::move(alpha_bar));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) {
    throw IndexError(fmt::format("step {} outside [0, {}]", t, steps()));
  }
  return alpha_bar_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::snr(int t) const {
  if (t < 1 || t > steps()) {
    throw IndexError(fmt::format("SNR requested at step {}, valid range is [1, {}]", t, steps()));
  }
  return snr_[static_cast<std::size_t>(t)];
}

NoiseSchedule build_linear_beta(int steps, double beta_start, double beta_end) {
  if (steps < 3) {
    throw ConfigError(fmt::format("schedule needs at least 3 steps, got {}", steps));
  }
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ConfigError(
        fmt::format("invalid beta range [{}, {}]: need 0 < start <= end < 1", beta_start, beta_end));
  }
  std::vector<double> alpha_bar(static_cast<std::size_t>(steps) + 1);
  alpha_bar[0] = 1.0;
  double prod = 1.0;
  for (int s = 1; s <= steps; ++s) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(s - 1) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(s)] = prod;
  }
  return NoiseSchedule::from_alpha_bar(std::move(alpha_bar));
}

double phi(const NoiseSchedule& schedule, int t, PhiMode mode) {
  const double snr = schedule.snr(t);
  return mode == PhiMode::kSnr ? snr : std::sqrt(snr);
}

double gamma(double phi_t, double phi_t1, double phi_t2) {
  const double num = phi_t - phi_t1;
  const double den = phi_t1 - phi_t2;
  if (!(den > 0.0) || !(num > 0.0) || !std::isfinite(num) || !std::isfinite(den)) {
    throw DegenerateSchedule(
        fmt::format("progress values ({}, {}, {}) are not strictly monotone", phi_t, phi_t1, phi_t2));
  }
  return num / den;
}

std::vector<int> sampling_grid(int train_steps, int sampling_steps) {
  if (sampling_steps < 1 || sampling_steps > train_steps) {
    throw ConfigError(
        fmt::format("sampling steps {} must lie in [1, {}]", sampling_steps, train_steps));
  }
  std::vector<int> grid(static_cast<std::size_t>(sampling_steps) + 1);
  for (int i = 0; i <= sampling_steps; ++i) {
    const double t = static_cast<double>(train_steps) * (sampling_steps - i) / sampling_steps;
    grid[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(t));
  }
  return grid;
}

}  // namespace ltc
