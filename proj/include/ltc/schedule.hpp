#pragma once

#include <string_view>
#include <vector>

namespace ltc {

enum class PhiMode { kSqrtSnr, kSnr };

PhiMode parse_phi_mode(std::string_view name);
std::string_view to_string(PhiMode mode);

// Discrete variance-preserving schedule. alpha_bar[t] for t = 0..T, with
// alpha_bar[0] = 1 for the linear-beta builder. Immutable after construction.
class NoiseSchedule {
 public:
  // Validates strict monotonic decrease and 0 < alpha_bar[T], alpha_bar[0] <= 1.
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);

  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const;
  const std::vector<double>& alpha_bar_table() const { return alpha_bar_; }

  // SNR_t = alpha_bar_t / (1 - alpha_bar_t); requires 1 <= t <= T.
  double snr(int t) const;

 private:
  explicit NoiseSchedule(std::vector<double> alpha_bar);

  std::vector<double> alpha_bar_;
  std::vector<double> snr_;
};

// alpha_bar_t = prod_{s<=t} (1 - beta_s), beta linear from beta_start to beta_end.
NoiseSchedule build_linear_beta(int steps, double beta_start, double beta_end);

// Denoising progress. sqrt_snr is the default; snr is the squared variant.
double phi(const NoiseSchedule& schedule, int t, PhiMode mode = PhiMode::kSqrtSnr);

// Step ratio from three consecutive progress values, newest first:
// (phi_t - phi_t1) / (phi_t1 - phi_t2).
double gamma(double phi_t, double phi_t1, double phi_t2);

// Evenly spaced integer subsample of [0, train_steps], descending, with
// both endpoints: sampling_steps + 1 entries.
std::vector<int> sampling_grid(int train_steps, int sampling_steps);

}  // namespace ltc
