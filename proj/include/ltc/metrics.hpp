#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ltc/sampler.hpp"

namespace ltc {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(MAX^2 / MSE) with MAX the peak-to-peak range of `reference`.
// Capped at 99 dB; a constant reference is an error.
double psnr(const Eigen::VectorXd& reference, const Eigen::VectorXd& test);

struct EndError {
  double absolute = 0.0;          // L2 distance of the final states
  double relative_percent = 0.0;  // absolute / |full final| * 100
};

EndError end_error(const Trajectory& full, const Trajectory& accel);

double nfe_speedup(int total_iterations, int nfe);

// Per-position statistics over several aligned series.
struct SeriesStats {
  std::vector<int> index;
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

// Every series must have index.size() entries. Values at each position are
// reduced in sorted order, so the result does not depend on series order.
SeriesStats aggregate(std::span<const std::vector<double>> series, std::vector<int> index);

// Minimal CSV table: header plus string cells. No quoting; cells never hold
// commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
  static CsvTable parse(const std::string& text);
};

// Shortest round-trip representation, locale independent.
std::string format_number(double value);

// Tables with fixed headers (kAngleHeader and friends below).
CsvTable angle_series_table(const std::vector<int>& index, const std::vector<double>& theta);
CsvTable error_summary_table(const SeriesStats& stats);
CsvTable weight_summary_table(const SeriesStats& stats);
CsvTable psnr_summary_table(const std::vector<double>& bias, const SeriesStats& stats);

inline const std::vector<std::string> kAngleHeader = {"Timestep", "Angle"};
inline const std::vector<std::string> kErrorHeader = {"Timestep", "Average Error", "Min Error",
                                                      "Max Error"};
inline const std::vector<std::string> kWeightHeader = {"Timestep", "Mean", "Min", "Max"};
inline const std::vector<std::string> kPsnrHeader = {"Bias", "Mean PSNR", "Min PSNR", "Max PSNR"};

}  // namespace ltc
