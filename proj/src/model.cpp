#include "ltc/model.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "ltc/error.hpp"
#include "ltc/rng.hpp"

namespace ltc {
namespace {

void check_input(const Eigen::VectorXd& x, Eigen::Index dim, int t, const NoiseSchedule& schedule) {
  if (x.size() != dim) {
    throw ConfigError(fmt::format("state has dimension {}, denoiser expects {}", x.size(), dim));
  }
  if (t < 1 || t > schedule.steps()) {
    throw IndexError(fmt::format("denoiser queried at step {}, valid range is [1, {}]", t,
                                 schedule.steps()));
  }
  if (!x.allFinite()) {
    throw NumericError(fmt::format("non-finite state passed to denoiser at step {}", t));
  }
}

}  // namespace

void DiagGmm::validate() const {
  const Eigen::Index k = components();
  if (k == 0 || dim() == 0) {
    throw ConfigError("mixture needs at least one component and one dimension");
  }
  if (weights.size() != k || variances.rows() != k || variances.cols() != dim()) {
    throw ConfigError(fmt::format(
        "mixture shapes disagree: {} weights, means {}x{}, variances {}x{}", weights.size(),
        means.rows(), means.cols(), variances.rows(), variances.cols()));
  }
  if (!(weights.array() > 0.0).all()) {
    throw ConfigError("mixture weights must be strictly positive");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ConfigError(fmt::format("mixture weights sum to {:.17g}, not 1", weights.sum()));
  }
  if (!(variances.array() >= 0.0).all() || !variances.allFinite() || !means.allFinite()) {
    throw ConfigError("mixture variances must be finite and non-negative");
  }
}

Eigen::VectorXd epsilon_hat(const PointMass& spec, const Eigen::VectorXd& x, int t,
                            const NoiseSchedule& schedule) {
  check_input(x, spec.mu.size(), t, schedule);
  const double ab = schedule.alpha_bar(t);
  return (x - std::sqrt(ab) * spec.mu) / std::sqrt(1.0 - ab);
}

Eigen::VectorXd epsilon_hat(const DiagGmm& spec, const Eigen::VectorXd& x, int t,
                            const NoiseSchedule& schedule) {
  check_input(x, spec.dim(), t, schedule);
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise_var = 1.0 - ab;
  const Eigen::Index k = spec.components();

  // Diffused component k: mean signal * mu_k, variance ab * sigma2_k + (1 - ab).
  Eigen::MatrixXd var = ab * spec.variances.array() + noise_var;
  Eigen::MatrixXd resid = (-(signal * spec.means)).rowwise() + x.transpose();

  Eigen::VectorXd log_resp(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto v = var.row(c).array();
    const auto r = resid.row(c).array();
    log_resp[c] = std::log(spec.weights[c]) -
                  0.5 * ((2.0 * std::numbers::pi * v).log() + r.square() / v).sum();
  }
  const double peak = log_resp.maxCoeff();
  Eigen::VectorXd resp = (log_resp.array() - peak).exp();
  resp /= resp.sum();

  // -grad log p_t = sum_k resp_k (x - m_k) / v_k
  Eigen::VectorXd neg_score = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    if (resp[c] == 0.0) continue;
    neg_score.array() += resp[c] * resid.row(c).transpose().array() / var.row(c).transpose().array();
  }
  return std::sqrt(noise_var) * neg_score;
}

AnalyticDenoiser::AnalyticDenoiser(DenoiserSpec spec, std::shared_ptr<const NoiseSchedule> schedule)
    : spec_(std::move(spec)), schedule_(std::move(schedule)) {
  if (std::holds_alternative<RecordedTrace>(spec_)) {
    throw ConfigError("recorded traces are replayed by TraceDenoiser");
  }
  if (const auto* gmm = std::get_if<DiagGmm>(&spec_)) gmm->validate();
}

Eigen::VectorXd AnalyticDenoiser::predict(const Eigen::VectorXd& x, const EvalPoint& at) const {
  if (const auto* pm = std::get_if<PointMass>(&spec_)) {
    return epsilon_hat(*pm, x, at.timestep, *schedule_);
  }
  return epsilon_hat(std::get<DiagGmm>(spec_), x, at.timestep, *schedule_);
}

Eigen::Index AnalyticDenoiser::dim() const {
  if (const auto* pm = std::get_if<PointMass>(&spec_)) return pm->mu.size();
  return std::get<DiagGmm>(spec_).dim();
}

TraceDenoiser::TraceDenoiser(std::shared_ptr<const Trace> trace, std::size_t seed_index)
    : trace_(std::move(trace)), seed_index_(seed_index) {}

Eigen::VectorXd TraceDenoiser::predict(const Eigen::VectorXd& x, const EvalPoint& at) const {
  if (x.size() != trace_->dim) {
    throw ConfigError(fmt::format("state has dimension {}, trace records {}", x.size(), trace_->dim));
  }
  const auto row = trace_->at(seed_index_, at.trace_step);
  Eigen::VectorXd eps(trace_->dim);
  for (Eigen::Index j = 0; j < eps.size(); ++j) {
    eps[j] = static_cast<double>(row[static_cast<std::size_t>(j)]);
  }
  return eps;
}

DenoiserSource::DenoiserSource(DenoiserSpec spec, std::shared_ptr<const NoiseSchedule> schedule)
    : spec_(std::move(spec)), schedule_(std::move(schedule)) {
  if (const auto* rec = std::get_if<RecordedTrace>(&spec_)) {
    trace_ = std::make_shared<const Trace>(read_trace(rec->manifest_path));
  } else if (const auto* gmm = std::get_if<DiagGmm>(&spec_)) {
    gmm->validate();
  }
}

std::unique_ptr<Denoiser> DenoiserSource::bind(std::size_t seed_index) const {
  if (trace_) return std::make_unique<TraceDenoiser>(trace_, seed_index);
  return std::make_unique<AnalyticDenoiser>(spec_, schedule_);
}

Eigen::Index DenoiserSource::dim() const {
  if (trace_) return trace_->dim;
  if (const auto* pm = std::get_if<PointMass>(&spec_)) return pm->mu.size();
  return std::get<DiagGmm>(spec_).dim();
}

DiagGmm gmm_benchmark(const GmmBenchmarkParams& params) {
  if (params.dim < 1 || params.components < 1 || !(params.variance_min >= 0.0) ||
      !(params.variance_min <= params.variance_max)) {
    throw ConfigError("invalid mixture benchmark parameters");
  }
  NormalSource rng(params.seed);
  const Eigen::Index k = params.components;
  const Eigen::Index d = params.dim;

  DiagGmm gmm;
  gmm.weights.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) gmm.weights[c] = 0.5 + rng.uniform();
  gmm.weights /= gmm.weights.sum();
  gmm.means.resize(k, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) gmm.means(c, j) = params.mean_scale * rng.normal();
  }
  gmm.variances.resize(k, d);
  const double span = params.variance_max - params.variance_min;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) {
      gmm.variances(c, j) = params.variance_min + span * rng.uniform();
    }
  }
  return gmm;
}

}  // namespace ltc
