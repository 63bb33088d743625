#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <variant>

#include <Eigen/Core>

#include "ltc/schedule.hpp"
#include "ltc/trace.hpp"

namespace ltc {

// All data mass at mu.
struct PointMass {
  Eigen::VectorXd mu;
};

// Mixture of axis-aligned Gaussians. Rows of `means` and `variances` are
// components; columns are dimensions. Zero variances are allowed.
struct DiagGmm {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;

  Eigen::Index dim() const { return means.cols(); }
  Eigen::Index components() const { return means.rows(); }
  void validate() const;
};

// Replays externally recorded noise predictions.
struct RecordedTrace {
  std::filesystem::path manifest_path;
};

using DenoiserSpec = std::variant<PointMass, DiagGmm, RecordedTrace>;

// eps_hat = -sqrt(1 - alpha_bar_t) * grad log p_t(x) for the VP-diffused
// marginal of the data distribution. Requires 1 <= t <= T and finite x.
Eigen::VectorXd epsilon_hat(const PointMass& spec, const Eigen::VectorXd& x, int t,
                            const NoiseSchedule& schedule);
Eigen::VectorXd epsilon_hat(const DiagGmm& spec, const Eigen::VectorXd& x, int t,
                            const NoiseSchedule& schedule);

// Where a denoiser call happens: the schedule timestep of the input state
// and, for replay, the trace step (N for the first call, down to 1).
struct EvalPoint {
  int timestep = 0;
  int trace_step = 0;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Eigen::VectorXd predict(const Eigen::VectorXd& x, const EvalPoint& at) const = 0;
  virtual Eigen::Index dim() const = 0;
};

class AnalyticDenoiser final : public Denoiser {
 public:
  AnalyticDenoiser(DenoiserSpec spec, std::shared_ptr<const NoiseSchedule> schedule);

  Eigen::VectorXd predict(const Eigen::VectorXd& x, const EvalPoint& at) const override;
  Eigen::Index dim() const override;

 private:
  DenoiserSpec spec_;
  std::shared_ptr<const NoiseSchedule> schedule_;
};

// Returns the recorded vector for (seed, trace_step); x is ignored apart from
// the dimension check.
class TraceDenoiser final : public Denoiser {
 public:
  TraceDenoiser(std::shared_ptr<const Trace> trace, std::size_t seed_index);

  Eigen::VectorXd predict(const Eigen::VectorXd& x, const EvalPoint& at) const override;
  Eigen::Index dim() const override { return trace_->dim; }

 private:
  std::shared_ptr<const Trace> trace_;
  std::size_t seed_index_;
};

// Builds per-seed denoisers from a spec. Recorded traces are loaded once, at
// construction, and shared read-only across seeds.
class DenoiserSource {
 public:
  DenoiserSource(DenoiserSpec spec, std::shared_ptr<const NoiseSchedule> schedule);

  std::unique_ptr<Denoiser> bind(std::size_t seed_index) const;
  Eigen::Index dim() const;
  const DenoiserSpec& spec() const { return spec_; }
  // Recorded trace, if the denoiser replays one.
  const Trace* trace() const { return trace_.get(); }

 private:
  DenoiserSpec spec_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  std::shared_ptr<const Trace> trace_;
};

struct GmmBenchmarkParams {
  int dim = 16;
  int components = 4;
  std::uint64_t seed = 7;
  double mean_scale = 2.0;
  double variance_min = 0.01;
  double variance_max = 0.1;
};

// Deterministic random mixture: weights ~ U(0.5, 1.5) normalised, means
// mean_scale * N(0, 1), variances ~ U(variance_min, variance_max).
DiagGmm gmm_benchmark(const GmmBenchmarkParams& params = {});

}  // namespace ltc
