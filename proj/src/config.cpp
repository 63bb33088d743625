#include "ltc/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "ltc/error.hpp"
#include "ltc/metrics.hpp"

namespace ltc {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Location prefix for error messages.
struct Where {
  std::string section;
  std::string key;
  int line = 0;

  std::string operator()(std::string_view what) const {
    return fmt::format("line {}: [{}] {}: {}", line, section, key, what);
  }
};

double to_double(const std::string& text, const Where& at) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(at(fmt::format("'{}' is not a number", text)));
  }
  return v;
}

long long to_int(const std::string& text, const Where& at) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(at(fmt::format("'{}' is not an integer", text)));
  }
  return v;
}

int to_int32(const std::string& text, const Where& at) {
  const long long v = to_int(text, at);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(at("integer out of range"));
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& text, const Where& at) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(at(fmt::format("'{}' is not a non-negative integer", text)));
  }
  return v;
}

bool to_bool(const std::string& text, const Where& at) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(at(fmt::format("'{}' is not true/false", text)));
}

std::vector<double> to_doubles(const std::string& text, const Where& at) {
  std::vector<double> out;
  for (const auto& cell : split(text, ',')) out.push_back(to_double(cell, at));
  return out;
}

std::vector<std::vector<double>> to_matrix(const std::string& text, const Where& at) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(text, ';')) rows.push_back(to_doubles(row, at));
  return rows;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_number(values[i]);
  }
  return out;
}

std::string join_rows(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += "; ";
    out += join(rows[i]);
  }
  return out;
}

DenoiserKind parse_kind(const std::string& text, const Where& at) {
  if (text == "gmm-benchmark") return DenoiserKind::kGmmBenchmark;
  if (text == "gmm") return DenoiserKind::kGmm;
  if (text == "point-mass") return DenoiserKind::kPointMass;
  if (text == "trace") return DenoiserKind::kTrace;
  throw ConfigError(at(fmt::format("unknown denoiser kind '{}'", text)));
}

std::string_view kind_name(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::kGmmBenchmark: return "gmm-benchmark";
    case DenoiserKind::kGmm: return "gmm";
    case DenoiserKind::kPointMass: return "point-mass";
    case DenoiserKind::kTrace: return "trace";
  }
  return "?";
}

RefineMode parse_refine(const std::string& text, const Where& at) {
  if (text == "off") return RefineMode::kOff;
  if (text == "grid") return RefineMode::kGrid;
  if (text == "binary") return RefineMode::kBinary;
  throw ConfigError(at(fmt::format("unknown refine mode '{}'", text)));
}

std::string_view refine_name(RefineMode mode) {
  switch (mode) {
    case RefineMode::kOff: return "off";
    case RefineMode::kGrid: return "grid";
    case RefineMode::kBinary: return "binary";
  }
  return "?";
}

void parse_interval(PlanConfig& plan, const std::string& text, const Where& at) {
  if (text == "none") {
    plan.interval_mode = IntervalMode::kNone;
  } else if (text == "auto") {
    plan.interval_mode = IntervalMode::kAuto;
  } else if (text.rfind("after ", 0) == 0) {
    plan.interval_mode = IntervalMode::kAfter;
    plan.after = to_int32(trim(text.substr(6)), at);
  } else if (const auto dots = text.find(".."); dots != std::string::npos) {
    plan.interval_mode = IntervalMode::kExplicit;
    plan.interval.first = to_int32(trim(text.substr(0, dots)), at);
    plan.interval.last = to_int32(trim(text.substr(dots + 2)), at);
  } else {
    throw ConfigError(at(fmt::format("interval must be none, auto, 'after N' or 'a..b', got '{}'", text)));
  }
}

std::string interval_text(const PlanConfig& plan) {
  switch (plan.interval_mode) {
    case IntervalMode::kNone: return "none";
    case IntervalMode::kAuto: return "auto";
    case IntervalMode::kAfter: return fmt::format("after {}", plan.after);
    case IntervalMode::kExplicit: return fmt::format("{}..{}", plan.interval.first, plan.interval.last);
  }
  return "?";
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"mode", "output"}},
      {"schedule", {"train_steps", "beta_start", "beta_end", "sampling_steps"}},
      {"denoiser",
       {"kind", "dim", "components", "generator_seed", "mean_scale", "variance_min",
        "variance_max", "mu", "weights", "means", "variances", "manifest"}},
      {"seeds", {"list", "calibration"}},
      {"plan",
       {"interval", "period", "tau", "phi_mode", "bias", "bias_interval", "refine",
        "sweep_points", "per_seed_wg", "wg_file"}},
  };
  return keys;
}

void apply_key(ExperimentConfig& c, const std::string& value, const Where& at,
               const std::filesystem::path& base_dir) {
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  const std::string& s = at.section;
  const std::string& k = at.key;
  auto& d = c.denoiser;
  auto& p = c.plan;
  if (s == "experiment") {
    if (k == "mode") c.mode = parse_mode(value);
    else c.output_dir = value.empty() ? std::filesystem::path() : resolve(value);
  } else if (s == "schedule") {
    if (k == "train_steps") c.schedule.train_steps = to_int32(value, at);
    else if (k == "beta_start") c.schedule.beta_start = to_double(value, at);
    else if (k == "beta_end") c.schedule.beta_end = to_double(value, at);
    else c.schedule.sampling_steps = to_int32(value, at);
  } else if (s == "denoiser") {
    if (k == "kind") d.kind = parse_kind(value, at);
    else if (k == "dim") d.benchmark.dim = to_int32(value, at);
    else if (k == "components") d.benchmark.components = to_int32(value, at);
    else if (k == "generator_seed") d.benchmark.seed = to_u64(value, at);
    else if (k == "mean_scale") d.benchmark.mean_scale = to_double(value, at);
    else if (k == "variance_min") d.benchmark.variance_min = to_double(value, at);
    else if (k == "variance_max") d.benchmark.variance_max = to_double(value, at);
    else if (k == "mu") d.mu = to_doubles(value, at);
    else if (k == "weights") d.weights = to_doubles(value, at);
    else if (k == "means") d.means = to_matrix(value, at);
    else if (k == "variances") d.variances = to_matrix(value, at);
    else d.manifest = resolve(value);
  } else if (s == "seeds") {
    if (k == "list") {
      try {
        c.seeds = parse_seed_set(value);
      } catch (const ConfigError& e) {
        throw ConfigError(at(e.what()));
      }
    } else {
      c.calibration_seed = to_u64(value, at);
    }
  } else {
    if (k == "interval") parse_interval(p, value, at);
    else if (k == "period") p.period = to_int32(value, at);
    else if (k == "tau") p.tau = to_double(value, at);
    else if (k == "phi_mode") p.phi_mode = parse_phi_mode(value);
    else if (k == "bias") p.bias = to_double(value, at);
    else if (k == "bias_interval") {
      const auto v = to_doubles(value, at);
      if (v.size() != 2) throw ConfigError(at("bias_interval needs two values"));
      p.bias_low = v[0];
      p.bias_high = v[1];
    } else if (k == "refine") p.refine = parse_refine(value, at);
    else if (k == "sweep_points") p.sweep_points = to_int32(value, at);
    else if (k == "per_seed_wg") p.per_seed_wg = to_bool(value, at);
    else p.wg_file = value.empty() ? std::nullopt : std::optional(resolve(value));
  }
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "angles") return Mode::kAngles;
  if (name == "calibrate") return Mode::kCalibrate;
  if (name == "refine") return Mode::kRefine;
  if (name == "sample") return Mode::kSample;
  if (name == "ablate-skip") return Mode::kAblateSkip;
  if (name == "report") return Mode::kReport;
  throw ConfigError(fmt::format("unknown mode '{}'", name));
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kAngles: return "angles";
    case Mode::kCalibrate: return "calibrate";
    case Mode::kRefine: return "refine";
    case Mode::kSample: return "sample";
    case Mode::kAblateSkip: return "ablate-skip";
    case Mode::kReport: return "report";
  }
  return "?";
}

std::vector<std::uint64_t> parse_seed_set(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  const Where at{"seeds", "list", 0};
  for (const auto& part : split(text, ',')) {
    if (const auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = to_u64(trim(part.substr(0, dots)), at);
      const auto hi = to_u64(trim(part.substr(dots + 2)), at);
      if (lo > hi || hi - lo > 1'000'000) {
        throw ConfigError(fmt::format("bad seed range '{}'", part));
      }
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(to_u64(part, at));
    }
  }
  return seeds;
}

void apply_config_text(ExperimentConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') {
        throw ConfigError(fmt::format("line {}: malformed section header '{}'", line_no, body));
      }
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!allowed_keys().count(section)) {
        throw ConfigError(fmt::format("line {}: unknown section [{}]", line_no, section));
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    }
    if (section.empty()) {
      throw ConfigError(fmt::format("line {}: key outside any section", line_no));
    }
    const Where at{section, trim(std::string_view(body).substr(0, eq)), line_no};
    if (!allowed_keys().at(section).count(at.key)) {
      throw ConfigError(fmt::format("line {}: unknown key '{}' in [{}]", line_no, at.key, section));
    }
    if (!seen.insert(section + "." + at.key).second) {
      throw ConfigError(at("duplicate key"));
    }
    try {
      apply_key(config, trim(std::string_view(body).substr(eq + 1)), at, base_dir);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw ConfigError(at(msg));
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentConfig> base) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open config {}", path.string()));
  }
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config = base.value_or(ExperimentConfig{});
  if (!base) config.seeds = {0};
  apply_config_text(config, text.str(), path.parent_path());
  return config;
}

void ExperimentConfig::validate() const {
  const auto& s = schedule;
  if (s.train_steps < 3) throw ConfigError("schedule.train_steps must be >= 3");
  if (!(s.beta_start > 0.0) || !(s.beta_start <= s.beta_end) || !(s.beta_end < 1.0)) {
    throw ConfigError("schedule beta range must satisfy 0 < beta_start <= beta_end < 1");
  }
  if (s.sampling_steps < 3 || s.sampling_steps > s.train_steps) {
    throw ConfigError(fmt::format("schedule.sampling_steps must lie in [3, {}]", s.train_steps));
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seed list has duplicates");
  }

  const auto& d = denoiser;
  switch (d.kind) {
    case DenoiserKind::kGmmBenchmark:
      if (d.benchmark.dim < 1 || d.benchmark.components < 1 ||
          !(d.benchmark.variance_min >= 0.0) ||
          !(d.benchmark.variance_min <= d.benchmark.variance_max)) {
        throw ConfigError("invalid gmm-benchmark parameters");
      }
      break;
    case DenoiserKind::kGmm:
      if (d.means.empty() || d.means.size() != d.variances.size() ||
          d.means.size() != d.weights.size()) {
        throw ConfigError("gmm needs matching weights, means and variances");
      }
      for (std::size_t c = 0; c < d.means.size(); ++c) {
        if (d.means[c].size() != d.means[0].size() || d.variances[c].size() != d.means[0].size()) {
          throw ConfigError("gmm rows must share one dimension");
        }
      }
      break;
    case DenoiserKind::kPointMass:
      if (d.mu.empty()) throw ConfigError("point-mass needs mu");
      break;
    case DenoiserKind::kTrace:
      if (d.manifest.empty()) throw ConfigError("trace denoiser needs a manifest path");
      break;
  }

  const auto& p = plan;
  if (p.period < 2) throw ConfigError("plan.period must be >= 2");
  if (!(p.tau > 0.0)) throw ConfigError("plan.tau must be positive");
  if (!(p.bias_low <= p.bias_high)) throw ConfigError("plan.bias_interval is reversed");
  if (p.sweep_points < 2) throw ConfigError("plan.sweep_points must be >= 2");
  const int n = s.sampling_steps;
  if (p.interval_mode == IntervalMode::kExplicit) {
    AccelerationPlan probe;
    probe.interval = p.interval;
    probe.period = p.period;
    probe.tau = p.tau;
    probe.validate(n, false);
  }
  if (p.interval_mode == IntervalMode::kAfter && p.after < 0) {
    throw ConfigError("plan interval 'after N' needs N >= 0");
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  out += fmt::format("[experiment]\nmode = {}\noutput = {}\n\n", to_string(c.mode),
                     c.output_dir.generic_string());
  out += fmt::format(
      "[schedule]\ntrain_steps = {}\nbeta_start = {}\nbeta_end = {}\nsampling_steps = {}\n\n",
      c.schedule.train_steps, format_number(c.schedule.beta_start),
      format_number(c.schedule.beta_end), c.schedule.sampling_steps);

  const auto& d = c.denoiser;
  out += fmt::format("[denoiser]\nkind = {}\n", kind_name(d.kind));
  switch (d.kind) {
    case DenoiserKind::kGmmBenchmark:
      out += fmt::format(
          "dim = {}\ncomponents = {}\ngenerator_seed = {}\nmean_scale = {}\nvariance_min = {}\n"
          "variance_max = {}\n",
          d.benchmark.dim, d.benchmark.components, d.benchmark.seed,
          format_number(d.benchmark.mean_scale), format_number(d.benchmark.variance_min),
          format_number(d.benchmark.variance_max));
      break;
    case DenoiserKind::kGmm:
      out += fmt::format("weights = {}\nmeans = {}\nvariances = {}\n", join(d.weights),
                         join_rows(d.means), join_rows(d.variances));
      break;
    case DenoiserKind::kPointMass:
      out += fmt::format("mu = {}\n", join(d.mu));
      break;
    case DenoiserKind::kTrace:
      out += fmt::format("manifest = {}\n", d.manifest.generic_string());
      break;
  }

  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    if (i) seeds += ", ";
    seeds += std::to_string(c.seeds[i]);
  }
  out += fmt::format("\n[seeds]\nlist = {}\ncalibration = {}\n\n", seeds, c.calibration_seed);

  const auto& p = c.plan;
  out += fmt::format(
      "[plan]\ninterval = {}\nperiod = {}\ntau = {}\nphi_mode = {}\nbias = {}\n"
      "bias_interval = {}, {}\nrefine = {}\nsweep_points = {}\nper_seed_wg = {}\n",
      interval_text(p), p.period, format_number(p.tau), to_string(p.phi_mode),
      format_number(p.bias), format_number(p.bias_low), format_number(p.bias_high),
      refine_name(p.refine), p.sweep_points, p.per_seed_wg ? "true" : "false");
  if (p.wg_file) out += fmt::format("wg_file = {}\n", p.wg_file->generic_string());
  return out;
}

std::vector<std::string> preset_names() {
  return {"sd2-ddim-40", "sd2-ddim-50", "sd2-ddim-100", "fig2-trace", "fig4-bias"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.seeds = parse_seed_set("1..20");
  c.calibration_seed = 0;
  if (name == "sd2-ddim-40") {
    c.mode = Mode::kSample;
    c.schedule.sampling_steps = 40;
    c.plan.after = 12;
  } else if (name == "sd2-ddim-50") {
    c.mode = Mode::kSample;
    c.schedule.sampling_steps = 50;
    c.plan.after = 10;
  } else if (name == "sd2-ddim-100") {
    c.mode = Mode::kSample;
    c.schedule.sampling_steps = 100;
    c.plan.after = 20;
  } else if (name == "fig2-trace") {
    c.mode = Mode::kAngles;
    c.schedule.sampling_steps = 40;
    c.plan.interval_mode = IntervalMode::kAuto;
  } else if (name == "fig4-bias") {
    c.mode = Mode::kRefine;
    c.schedule.sampling_steps = 40;
    c.plan.after = 12;
    c.seeds = parse_seed_set("1..5");
  } else {
    throw ConfigError(fmt::format("unknown preset '{}'", name));
  }
  c.plan.interval_mode = name == "fig2-trace" ? IntervalMode::kAuto : IntervalMode::kAfter;
  return c;
}

}  // namespace ltc
