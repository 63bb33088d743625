#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltc/config.hpp"
#include "ltc/metrics.hpp"
#include "ltc/transition.hpp"

namespace ltc {

// Aggregated outcome of one harness run.
struct RunReport {
  AngleTrace angle_trace;                // mean over seeds
  std::optional<SeriesStats> rel_error;  // per iteration, percent
  std::optional<SeriesStats> abs_error;
  std::optional<SeriesStats> wg_stats;
  std::optional<Interval> interval;      // resolved acceleration interval
  std::optional<double> bias_star;
  double psnr = 0.0;                     // mean over seeds, accelerated vs full
  int total_iterations = 0;
  int nfe = 0;
  double speedup = 1.0;
  std::uint32_t fingerprint = 0;         // crc32 of the canonical config
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

struct RunOptions {
  int jobs = 1;
};

// Executes the experiment and writes CSVs plus manifest.txt into
// config.output_dir. Deterministic for a given config regardless of `jobs`.
RunReport run(const ExperimentConfig& config, const RunOptions& options = {});

// Exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

}  // namespace ltc
