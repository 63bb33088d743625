#include "ltc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "ltc/error.hpp"

namespace ltc {

double psnr(const Eigen::VectorXd& reference, const Eigen::VectorXd& test) {
  if (reference.size() != test.size() || reference.size() == 0) {
    throw ConfigError(
        fmt::format("PSNR needs equal non-empty vectors ({} vs {})", reference.size(), test.size()));
  }
  const double range = reference.maxCoeff() - reference.minCoeff();
  if (!(range > 0.0)) {
    throw NumericError("PSNR undefined for a constant reference");
  }
  const double mse = (reference - test).squaredNorm() / static_cast<double>(reference.size());
  if (!std::isfinite(mse)) {
    throw NumericError("PSNR of non-finite vectors");
  }
  const double peak2 = range * range;
  if (mse < 1e-12 * peak2) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak2 / mse));
}

EndError end_error(const Trajectory& full, const Trajectory& accel) {
  if (full.timesteps.empty() || accel.timesteps.empty() ||
      full.timesteps.back() != accel.timesteps.back()) {
    throw ConfigError("trajectories end at different timesteps");
  }
  const Eigen::VectorXd& ref = full.final_state();
  const double norm = ref.norm();
  if (!(norm > 0.0)) {
    throw NumericError("relative end error undefined for a zero reference state");
  }
  EndError e;
  e.absolute = (ref - accel.final_state()).norm();
  e.relative_percent = e.absolute / norm * 100.0;
  return e;
}

double nfe_speedup(int total_iterations, int nfe) {
  if (nfe < 1 || nfe > total_iterations) {
    throw NumericError(fmt::format("nfe {} outside [1, {}]", nfe, total_iterations));
  }
  return static_cast<double>(total_iterations) / nfe;
}

SeriesStats aggregate(std::span<const std::vector<double>> series, std::vector<int> index) {
  if (series.empty()) {
    throw ConfigError("aggregate needs at least one series");
  }
  for (const auto& s : series) {
    if (s.size() != index.size()) {
      throw ConfigError(
          fmt::format("misaligned series: {} values for {} positions", s.size(), index.size()));
    }
  }
  SeriesStats out;
  out.index = std::move(index);
  std::vector<double> column(series.size());
  for (std::size_t k = 0; k < out.index.size(); ++k) {
    for (std::size_t s = 0; s < series.size(); ++s) column[s] = series[s][k];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    out.mean.push_back(sum / static_cast<double>(column.size()));
    out.min.push_back(column.front());
    out.max.push_back(column.back());
  }
  return out;
}

std::string CsvTable::to_string() const {
  std::string out;
  const auto append_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_row(header);
  for (const auto& row : rows) append_row(row);
  return out;
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size()) {
        throw IoError(fmt::format("CSV row has {} cells, header has {}", cells.size(),
                                  table.header.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw IoError("CSV has no header");
  return table;
}

std::string format_number(double value) { return fmt::format("{}", value); }

CsvTable angle_series_table(const std::vector<int>& index, const std::vector<double>& theta) {
  CsvTable t{kAngleHeader, {}};
  for (std::size_t k = 0; k < index.size(); ++k) {
    t.rows.push_back({std::to_string(index[k]), format_number(theta[k])});
  }
  return t;
}

namespace {

CsvTable stats_table(std::vector<std::string> header, const std::vector<std::string>& keys,
                     const SeriesStats& stats) {
  CsvTable t{std::move(header), {}};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    t.rows.push_back({keys[k], format_number(stats.mean[k]), format_number(stats.min[k]),
                      format_number(stats.max[k])});
  }
  return t;
}

std::vector<std::string> index_keys(const SeriesStats& stats) {
  std::vector<std::string> keys;
  for (int i : stats.index) keys.push_back(std::to_string(i));
  return keys;
}

}  // namespace

CsvTable error_summary_table(const SeriesStats& stats) {
  return stats_table(kErrorHeader, index_keys(stats), stats);
}

CsvTable weight_summary_table(const SeriesStats& stats) {
  return stats_table(kWeightHeader, index_keys(stats), stats);
}

CsvTable psnr_summary_table(const std::vector<double>& bias, const SeriesStats& stats) {
  std::vector<std::string> keys;
  for (double b : bias) keys.push_back(format_number(b));
  return stats_table(kPsnrHeader, keys, stats);
}

}  // namespace ltc
