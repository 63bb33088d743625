#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ltc/model.hpp"
#include "ltc/sampler.hpp"
#include "ltc/schedule.hpp"
#include "ltc/transition.hpp"

namespace ltc {

inline constexpr double kDefaultTau = 0.1;
inline constexpr double kTauCeiling = 0.15;
inline constexpr int kDefaultPeriod = 2;
inline constexpr double kDefaultBiasLow = -0.05;
inline constexpr double kDefaultBiasHigh = 0.10;

// Which iterations are extrapolated and with what weights. Iterations are
// numbered 1..N from the noisiest end; iteration i is approximated when it
// lies in `interval` and i mod period == period - 1.
struct AccelerationPlan {
  std::optional<Interval> interval;
  int period = kDefaultPeriod;
  double tau = kDefaultTau;
  std::map<int, double> wg;
  double bias = 0.0;
  PhiMode phi_mode = PhiMode::kSqrtSnr;

  bool accelerates(int iteration) const;
  std::vector<int> accelerated_iterations(int total_iterations) const;

  // Throws ConfigError on an invalid plan for a run of `total_iterations`:
  // the interval must satisfy 2 <= a <= b <= N - 1 so every approximated
  // iteration has two prior states and the final step stays real. Returns
  // non-fatal warnings (tau above the recommended ceiling).
  std::vector<std::string> validate(int total_iterations, bool require_wg = true) const;
};

// Plan accelerating every iteration i > after (i mod period == period - 1)
// up to the last legal iteration.
AccelerationPlan plan_after(int after, int total_iterations, int period = kDefaultPeriod);

// Diagnostics for one approximated iteration, computed against a real step
// that is evaluated but not used (not counted in nfe).
struct ShadowRecord {
  int iteration = 0;
  double theta = 0.0;          // angle between the real and look-back transitions
  double gamma = 0.0;
  double wg_applied = 0.0;     // table value plus bias
  double wg_optimal = 0.0;     // closed form against the real step
  double eps_r_applied = 0.0;  // relative error of the state actually used
  double eps_r_optimal = 0.0;  // relative error at the optimal weight
};

// Accelerated sampling. Approximated states feed later transitions. When the
// look-back transition is zero the iteration falls back to a real step.
Trajectory accelerated_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                              const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                              const AccelerationPlan& plan, std::uint64_t seed = 0,
                              std::vector<ShadowRecord>* shadow = nullptr);

struct Calibration {
  std::map<int, double> wg;
  Trajectory trajectory;  // the drifted run the weights were fitted on
};

// Fits wg at each accelerable iteration against the real step,
// then continues from the extrapolated state so the weights see the drift
// the accelerated run will see. Real steps taken for fitting count in
// trajectory.nfe.
Calibration calibrate_wg(const Denoiser& denoiser, const NoiseSchedule& schedule,
                         const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                         const AccelerationPlan& skeleton, std::uint64_t seed = 0);

enum class BiasSearch {
  kGridGolden,  // 11-point grid, then golden section around the best point
  kGolden,      // golden section over the whole interval
};

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tolerance = 1e-7);

// Bias search over a generic objective (PSNR as a function of bias). Zero is
// always a candidate when it lies in [lo, hi], so the result never scores
// below bias 0.
double refine_bias(const std::function<double(double)>& psnr_of_bias, double lo, double hi,
                   BiasSearch mode = BiasSearch::kGridGolden);

// Bias search for one initial noise: PSNR of the accelerated final state
// against the full run's.
double refine_bias(const Denoiser& denoiser, const NoiseSchedule& schedule,
                   const Eigen::VectorXd& x_init, std::span<const int> timesteps,
                   const AccelerationPlan& plan, double lo, double hi,
                   BiasSearch mode = BiasSearch::kGridGolden);

}  // namespace ltc
