#include "ltc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "ltc/acceleration.hpp"
#include "ltc/error.hpp"
#include "ltc/rng.hpp"
#include "ltc/sampler.hpp"
#include "ltc/trace.hpp"

namespace ltc {
namespace {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
// written to per-index slots; the lowest-index failure is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = to_vector(rows[r]).transpose();
  return m;
}

DenoiserSpec make_spec(const DenoiserConfig& d) {
  switch (d.kind) {
    case DenoiserKind::kGmmBenchmark: return gmm_benchmark(d.benchmark);
    case DenoiserKind::kGmm: return DiagGmm{to_vector(d.weights), to_matrix(d.means), to_matrix(d.variances)};
    case DenoiserKind::kPointMass: return PointMass{to_vector(d.mu)};
    case DenoiserKind::kTrace: return RecordedTrace{d.manifest};
  }
  throw ConfigError("unknown denoiser kind");
}

std::map<int, double> read_wg_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open wg table {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  const CsvTable table = CsvTable::parse(text.str());
  if (table.header != std::vector<std::string>{"Timestep", "Wg"}) {
    throw IoError(fmt::format("{}: expected header Timestep,Wg", path.string()));
  }
  std::map<int, double> wg;
  for (const auto& row : table.rows) {
    try {
      wg[std::stoi(row[0])] = std::stod(row[1]);
    } catch (const std::exception&) {
      throw IoError(fmt::format("{}: malformed row '{},{}'", path.string(), row[0], row[1]));
    }
  }
  return wg;
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    const auto* bytes = reinterpret_cast<const unsigned char*>(content.data());
    entries_.emplace_back(name, crc32_bytes({bytes, content.size()}));
    paths_.push_back(path);
  }

  void write(const std::string& name, const CsvTable& table) { write(name, table.to_string()); }

  const std::vector<std::pair<std::string, std::uint32_t>>& entries() const { return entries_; }
  const std::vector<std::filesystem::path>& paths() const { return paths_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::uint32_t>> entries_;
  std::vector<std::filesystem::path> paths_;
};

std::vector<int> iota_index(int first, std::size_t count) {
  std::vector<int> index(count);
  for (std::size_t k = 0; k < count; ++k) index[k] = first + static_cast<int>(k);
  return index;
}

std::string interval_label(const std::optional<Interval>& interval) {
  return interval ? fmt::format("{}..{}", interval->first, interval->last) : "none";
}

class Experiment {
 public:
  Experiment(const ExperimentConfig& config, const RunOptions& options)
      : config_(config),
        jobs_(options.jobs),
        schedule_(std::make_shared<const NoiseSchedule>(build_linear_beta(
            config.schedule.train_steps, config.schedule.beta_start, config.schedule.beta_end))),
        grid_(sampling_grid(config.schedule.train_steps, config.schedule.sampling_steps)),
        source_(make_spec(config.denoiser), schedule_),
        out_(config.output_dir.empty() ? std::filesystem::path("ltc-out") : config.output_dir) {}

  RunReport run();

 private:
  int iterations() const { return static_cast<int>(grid_.size()) - 1; }
  std::size_t seed_count() const { return config_.seeds.size(); }

  Eigen::VectorXd init(std::uint64_t seed) const { return initial_noise(seed, source_.dim()); }

  void run_full();
  void resolve_interval();
  void calibrate();
  AccelerationPlan plan_for(std::size_t seed_index, double bias) const;

  void emit_angles();
  void emit_calibration();
  void emit_refine();
  void emit_sample(bool with_skip);
  void emit_manifest();

  const ExperimentConfig& config_;
  int jobs_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  std::vector<int> grid_;
  DenoiserSource source_;
  OutputDir out_;

  std::vector<Trajectory> full_;
  AccelerationPlan skeleton_;
  std::map<int, double> shared_wg_;
  std::vector<std::map<int, double>> seed_wg_;
  CsvTable report_{{"Seed", "Method", "Iterations", "NFE", "Speedup", "PSNR", "Abs Error",
                    "Rel Error"},
                   {}};
  RunReport result_;
};

void Experiment::run_full() {
  full_.resize(seed_count());
  parallel_for(seed_count(), jobs_, [&](std::size_t k) {
    const auto seed = config_.seeds[k];
    const auto denoiser = source_.bind(seed);
    full_[k] = sample_full(*denoiser, *schedule_, init(seed), grid_, seed);
  });

  std::vector<std::vector<double>> angles(seed_count());
  for (std::size_t k = 0; k < seed_count(); ++k) angles[k] = angle_trace(full_[k]).theta;
  const auto stats = aggregate(angles, iota_index(2, angles[0].size()));
  result_.angle_trace = AngleTrace{2, stats.mean};
}

void Experiment::resolve_interval() {
  const auto& p = config_.plan;
  const int n = iterations();
  skeleton_.period = p.period;
  skeleton_.tau = p.tau;
  skeleton_.phi_mode = p.phi_mode;
  switch (p.interval_mode) {
    case IntervalMode::kNone:
      skeleton_.interval.reset();
      break;
    case IntervalMode::kAfter:
      skeleton_.interval = plan_after(p.after, n, p.period).interval;
      break;
    case IntervalMode::kExplicit:
      skeleton_.interval = p.interval;
      break;
    case IntervalMode::kAuto: {
      auto found = detect_interval(result_.angle_trace, p.tau);
      if (found) {
        found->first = std::max(found->first, 2);
        found->last = std::min(found->last, n - 1);
        if (found->first > found->last) found.reset();
      }
      skeleton_.interval = found;
      break;
    }
  }
  for (auto& w : skeleton_.validate(n, false)) result_.warnings.push_back(std::move(w));
  result_.interval = skeleton_.interval;
}

void Experiment::calibrate() {
  if (config_.plan.wg_file) {
    shared_wg_ = read_wg_table(*config_.plan.wg_file);
  } else {
    const auto seed = config_.calibration_seed;
    const auto denoiser = source_.bind(seed);
    shared_wg_ = calibrate_wg(*denoiser, *schedule_, init(seed), grid_, skeleton_, seed).wg;
  }
  seed_wg_.assign(seed_count(), {});
  if (config_.plan.per_seed_wg || config_.mode == Mode::kCalibrate || config_.mode == Mode::kReport) {
    parallel_for(seed_count(), jobs_, [&](std::size_t k) {
      const auto seed = config_.seeds[k];
      const auto denoiser = source_.bind(seed);
      seed_wg_[k] = calibrate_wg(*denoiser, *schedule_, init(seed), grid_, skeleton_, seed).wg;
    });
  }
}

AccelerationPlan Experiment::plan_for(std::size_t seed_index, double bias) const {
  AccelerationPlan plan = skeleton_;
  plan.wg = config_.plan.per_seed_wg ? seed_wg_[seed_index] : shared_wg_;
  plan.bias = bias;
  return plan;
}

void Experiment::emit_angles() {
  std::vector<std::vector<double>> angles(seed_count());
  for (std::size_t k = 0; k < seed_count(); ++k) {
    angles[k] = angle_trace(full_[k]).theta;
    const auto index = iota_index(2, angles[k].size());
    out_.write(fmt::format("angles_seed_{}.csv", config_.seeds[k]), angle_series_table(index, angles[k]));
  }
  const auto stats = aggregate(angles, iota_index(2, angles[0].size()));
  out_.write("angle_mean.csv", angle_series_table(stats.index, stats.mean));
  out_.write("angle_min.csv", angle_series_table(stats.index, stats.min));
  out_.write("angle_max.csv", angle_series_table(stats.index, stats.max));
}

void Experiment::emit_calibration() {
  CsvTable table{{"Timestep", "Wg"}, {}};
  for (const auto& [i, w] : shared_wg_) table.rows.push_back({std::to_string(i), format_number(w)});
  out_.write("wg_table.csv", table);

  if (!seed_wg_.empty() && !seed_wg_[0].empty()) {
    std::vector<int> index;
    for (const auto& [i, w] : seed_wg_[0]) index.push_back(i);
    std::vector<std::vector<double>> series;
    for (const auto& table_k : seed_wg_) {
      std::vector<double> row;
      for (int i : index) row.push_back(table_k.at(i));
      series.push_back(std::move(row));
    }
    result_.wg_stats = aggregate(series, index);
    out_.write("latent_wg_summary.csv", weight_summary_table(*result_.wg_stats));
  }
}

void Experiment::emit_refine() {
  const auto& p = config_.plan;
  const auto mean_psnr_at = [&](double bias, std::vector<double>* per_seed) {
    std::vector<double> scores(seed_count());
    parallel_for(seed_count(), jobs_, [&](std::size_t k) {
      const auto seed = config_.seeds[k];
      const auto denoiser = source_.bind(seed);
      const auto accel = accelerated_sample(*denoiser, *schedule_, init(seed), grid_, plan_for(k, bias), seed);
      scores[k] = psnr(full_[k].final_state(), accel.final_state());
    });
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double s : sorted) sum += s;
    if (per_seed) *per_seed = std::move(scores);
    return sum / static_cast<double>(sorted.size());
  };

  std::vector<double> biases;
  std::vector<std::vector<double>> by_seed(seed_count());
  for (int j = 0; j < p.sweep_points; ++j) {
    const double bias = j == p.sweep_points - 1
                            ? p.bias_high
                            : p.bias_low + (p.bias_high - p.bias_low) * j / (p.sweep_points - 1);
    biases.push_back(bias);
    std::vector<double> scores;
    mean_psnr_at(bias, &scores);
    for (std::size_t k = 0; k < seed_count(); ++k) by_seed[k].push_back(scores[k]);
  }
  const auto stats = aggregate(by_seed, iota_index(0, biases.size()));
  out_.write("psnr_summary.csv", psnr_summary_table(biases, stats));

  if (p.refine != RefineMode::kOff) {
    const auto mode = p.refine == RefineMode::kBinary ? BiasSearch::kGolden : BiasSearch::kGridGolden;
    const double best = refine_bias([&](double b) { return mean_psnr_at(b, nullptr); }, p.bias_low,
                                    p.bias_high, mode);
    result_.bias_star = best;
    CsvTable table{{"Bias", "Mean PSNR"}, {}};
    table.rows.push_back({format_number(0.0), format_number(mean_psnr_at(0.0, nullptr))});
    table.rows.push_back({format_number(best), format_number(mean_psnr_at(best, nullptr))});
    out_.write("bias_refinement.csv", table);
  }
}

void Experiment::emit_sample(bool with_skip) {
  const int n = iterations();
  std::vector<Trajectory> accel(seed_count());
  std::vector<Trajectory> skip(with_skip ? seed_count() : 0);
  std::vector<std::vector<ShadowRecord>> shadow(seed_count());
  parallel_for(seed_count(), jobs_, [&](std::size_t k) {
    const auto seed = config_.seeds[k];
    const auto denoiser = source_.bind(seed);
    const auto plan = plan_for(k, config_.plan.bias);
    accel[k] = accelerated_sample(*denoiser, *schedule_, init(seed), grid_, plan, seed, &shadow[k]);
    if (with_skip) {
      const auto positions = plan.accelerated_iterations(n);
      skip[k] = sample_skipping(*denoiser, *schedule_, init(seed), grid_,
                                std::set<int>(positions.begin(), positions.end()), seed);
    }
  });

  const auto add_row = [&](std::uint64_t seed, const char* method, const Trajectory& full,
                           const Trajectory& t) {
    const auto err = end_error(full, t);
    report_.rows.push_back({std::to_string(seed), method, std::to_string(n), std::to_string(t.nfe),
                            format_number(nfe_speedup(n, t.nfe)),
                            format_number(psnr(full.final_state(), t.final_state())),
                            format_number(err.absolute), format_number(err.relative_percent)});
  };

  std::vector<std::vector<double>> rel(seed_count());
  std::vector<std::vector<double>> abs(seed_count());
  CsvTable bound{{"Seed", "Timestep", "Angle", "Gamma", "Wg Applied", "Wg Optimal", "Eps R Applied",
                  "Eps R Optimal"},
                 {}};
  CsvTable ablation{{"Seed", "PSNR LTC", "PSNR Skip", "LTC Wins"}, {}};
  double psnr_sum = 0.0;
  int nfe = 0;
  for (std::size_t k = 0; k < seed_count(); ++k) {
    const auto seed = config_.seeds[k];
    add_row(seed, "full", full_[k], full_[k]);
    add_row(seed, "ltc", full_[k], accel[k]);
    psnr_sum += psnr(full_[k].final_state(), accel[k].final_state());
    nfe = std::max(nfe, accel[k].nfe);
    for (int i = 1; i <= n; ++i) {
      const auto& ref = full_[k].states[static_cast<std::size_t>(i)];
      const double d = (ref - accel[k].states[static_cast<std::size_t>(i)]).norm();
      abs[k].push_back(d);
      rel[k].push_back(d / ref.norm() * 100.0);
    }
    for (const auto& r : shadow[k]) {
      bound.rows.push_back({std::to_string(seed), std::to_string(r.iteration), format_number(r.theta),
                            format_number(r.gamma), format_number(r.wg_applied),
                            format_number(r.wg_optimal), format_number(r.eps_r_applied),
                            format_number(r.eps_r_optimal)});
    }
    for (int i : accel[k].fallbacks) {
      result_.warnings.push_back(fmt::format("seed {}: iteration {} fell back to a real step", seed, i));
    }
    if (with_skip) {
      add_row(seed, "skip", full_[k], skip[k]);
      const double p_ltc = psnr(full_[k].final_state(), accel[k].final_state());
      const double p_skip = psnr(full_[k].final_state(), skip[k].final_state());
      ablation.rows.push_back({std::to_string(seed), format_number(p_ltc), format_number(p_skip),
                               p_ltc > p_skip ? "1" : "0"});
    }
  }
  result_.rel_error = aggregate(rel, iota_index(1, static_cast<std::size_t>(n)));
  result_.abs_error = aggregate(abs, iota_index(1, static_cast<std::size_t>(n)));
  result_.psnr = psnr_sum / static_cast<double>(seed_count());
  result_.nfe = nfe;
  result_.speedup = nfe_speedup(n, nfe);

  out_.write("error_summary.csv", error_summary_table(*result_.rel_error));
  out_.write("error_abs_summary.csv", error_summary_table(*result_.abs_error));
  out_.write("bound_check.csv", bound);
  if (with_skip) out_.write("ablation.csv", ablation);
}

void Experiment::emit_manifest() {
  std::string text = "# resolved configuration\n" + to_text(config_);
  text += fmt::format("\n[result]\nfingerprint = {:08x}\ninterval = {}\n", result_.fingerprint,
                      interval_label(result_.interval));
  if (result_.bias_star) text += fmt::format("bias_star = {}\n", format_number(*result_.bias_star));
  text += fmt::format("nfe = {}\nspeedup = {}\n\n[files]\n", result_.nfe, format_number(result_.speedup));
  for (const auto& [name, crc] : out_.entries()) text += fmt::format("{} = {:08x}\n", name, crc);
  out_.write("manifest.txt", text);
}

RunReport Experiment::run() {
  ExperimentConfig anonymous = config_;
  anonymous.output_dir.clear();
  const std::string canonical = to_text(anonymous);
  result_.fingerprint =
      crc32_bytes({reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size()});
  result_.total_iterations = iterations();
  result_.nfe = iterations();

  run_full();
  resolve_interval();

  const Mode mode = config_.mode;
  const bool all = mode == Mode::kReport;
  if (mode == Mode::kAngles || all) emit_angles();
  if (mode != Mode::kAngles) {
    calibrate();
    if (mode == Mode::kCalibrate || all) emit_calibration();
    if (mode == Mode::kRefine || all) emit_refine();
    if (mode == Mode::kSample || mode == Mode::kAblateSkip || all) {
      emit_sample(mode == Mode::kAblateSkip || all);
    }
  }
  if (report_.rows.empty()) {
    for (std::size_t k = 0; k < seed_count(); ++k) {
      report_.rows.push_back({std::to_string(config_.seeds[k]), "full", std::to_string(iterations()),
                              std::to_string(full_[k].nfe), format_number(1.0),
                              format_number(kPsnrCap), format_number(0.0), format_number(0.0)});
    }
  }
  out_.write("report.csv", report_);
  emit_manifest();
  result_.files = out_.paths();
  return result_;
}

}  // namespace

RunReport run(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  Experiment experiment(config, options);
  return experiment.run();
}

}  // namespace ltc
