#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltc/acceleration.hpp"
#include "ltc/model.hpp"
#include "ltc/schedule.hpp"

namespace ltc {

enum class Mode { kAngles, kCalibrate, kRefine, kSample, kAblateSkip, kReport };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct ScheduleConfig {
  int train_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int sampling_steps = 40;
};

enum class DenoiserKind { kGmmBenchmark, kGmm, kPointMass, kTrace };

struct DenoiserConfig {
  DenoiserKind kind = DenoiserKind::kGmmBenchmark;
  GmmBenchmarkParams benchmark;
  std::vector<double> mu;                    // point-mass
  std::vector<double> weights;               // gmm
  std::vector<std::vector<double>> means;    // gmm, one row per component
  std::vector<std::vector<double>> variances;
  std::filesystem::path manifest;            // trace
};

// How the acceleration interval is chosen.
enum class IntervalMode {
  kNone,      // no acceleration
  kAfter,     // iterations > after, up to N - 1
  kExplicit,  // [first, last]
  kAuto,      // detected from the mean angle trace at tau
};

enum class RefineMode { kOff, kGrid, kBinary };

struct PlanConfig {
  IntervalMode interval_mode = IntervalMode::kAfter;
  int after = 12;
  Interval interval{13, 39};
  int period = kDefaultPeriod;
  double tau = kDefaultTau;
  PhiMode phi_mode = PhiMode::kSqrtSnr;
  double bias = 0.0;
  double bias_low = kDefaultBiasLow;
  double bias_high = kDefaultBiasHigh;
  RefineMode refine = RefineMode::kGrid;
  int sweep_points = 16;
  bool per_seed_wg = false;
  std::optional<std::filesystem::path> wg_file;
};

struct ExperimentConfig {
  Mode mode = Mode::kSample;
  ScheduleConfig schedule;
  DenoiserConfig denoiser;
  std::vector<std::uint64_t> seeds;
  std::uint64_t calibration_seed = 0;
  PlanConfig plan;
  // Empty means "not set": the CLI falls back to LTC_OUT, then ltc-out.
  std::filesystem::path output_dir;

  // Throws ConfigError on any inconsistency.
  void validate() const;
};

// Applies a config file on top of `base`. Format: `[section]` headers and
// `key = value` lines; `#` starts a comment. Unknown sections or keys,
// duplicates, and malformed values are ConfigErrors. Relative paths are
// resolved against `base_dir`.
void apply_config_text(ExperimentConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentConfig> base = std::nullopt);

// Canonical rendering of every resolved field; parses back to the same config.
std::string to_text(const ExperimentConfig& config);

// Named configurations:
// sd2-ddim-40, sd2-ddim-50, sd2-ddim-100, fig2-trace, fig4-bias.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

// "1,2,5" or "1..20" or a mix ("0,3..5").
std::vector<std::uint64_t> parse_seed_set(std::string_view text);

}  // namespace ltc
