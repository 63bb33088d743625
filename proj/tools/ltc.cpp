// Command-line front end: one subcommand per experiment mode.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "ltc/config.hpp"
#include "ltc/error.hpp"
#include "ltc/harness.hpp"

namespace {

int execute(ltc::Mode mode, const std::string& config_path, const std::string& preset_name,
            int jobs, const std::string& out_dir, const std::string& seed_set) {
  std::optional<ltc::ExperimentConfig> base;
  if (!preset_name.empty()) base = ltc::preset(preset_name);
  if (config_path.empty() && !base) {
    throw ltc::ConfigError("either --config or --preset is required");
  }
  ltc::ExperimentConfig config = config_path.empty() ? *base : ltc::load_config(config_path, base);
  config.mode = mode;
  if (!seed_set.empty()) config.seeds = ltc::parse_seed_set(seed_set);
  if (!out_dir.empty()) {
    config.output_dir = out_dir;
  } else if (config.output_dir.empty()) {
    const char* env = std::getenv("LTC_OUT");
    config.output_dir = env && *env ? env : "ltc-out";
  }
  if (jobs < 1) throw ltc::ConfigError("--jobs must be >= 1");

  const ltc::RunReport report = ltc::run(config, {jobs});
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << fmt::format("mode={} interval={} nfe={} speedup={:.4f}", ltc::to_string(mode),
                           report.interval ? fmt::format("{}..{}", report.interval->first,
                                                         report.interval->last)
                                           : "none",
                           report.nfe, report.speedup);
  if (report.rel_error) std::cout << fmt::format(" mean_psnr={:.3f}", report.psnr);
  if (report.bias_star) std::cout << fmt::format(" bias*={:.6f}", *report.bias_star);
  std::cout << fmt::format(" out={}\n", config.output_dir.string());
  return ltc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ltc: transition-coherence acceleration for diffusion sampling"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string out_dir;
  std::string seed_set;
  int jobs = 1;

  const std::pair<const char*, ltc::Mode> commands[] = {
      {"angles", ltc::Mode::kAngles},       {"calibrate", ltc::Mode::kCalibrate},
      {"refine", ltc::Mode::kRefine},       {"sample", ltc::Mode::kSample},
      {"ablate-skip", ltc::Mode::kAblateSkip}, {"report", ltc::Mode::kReport},
  };
  std::optional<ltc::Mode> chosen;
  for (const auto& [name, mode] : commands) {
    auto* sub = app.add_subcommand(name, fmt::format("run the {} experiment", name));
    sub->add_option("--config", config_path, "experiment config file");
    sub->add_option("--preset", preset_name, "named base configuration");
    sub->add_option("--jobs", jobs, "worker threads for per-seed work");
    sub->add_option("--out", out_dir, "output directory (fallback: $LTC_OUT)");
    sub->add_option("--seed-set", seed_set, "seed list override, e.g. 1..20 or 1,4,9");
    sub->callback([&chosen, m = mode] { chosen = m; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ltc::kExitConfig;
  }

  try {
    return execute(*chosen, config_path, preset_name, jobs, out_dir, seed_set);
  } catch (const ltc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ltc::kExitConfig;
  } catch (const ltc::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return ltc::kExitNumeric;
  } catch (const ltc::IoError& e) {
    std::cerr << "I/O failure: " << e.what() << '\n';
    return ltc::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ltc::kExitNumeric;
  }
}
