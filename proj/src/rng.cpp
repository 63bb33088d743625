#include "ltc/rng.hpp"

#include <cmath>
#include <numbers>

namespace ltc {

double NormalSource::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double NormalSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd NormalSource::normal_vector(Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd initial_noise(std::uint64_t seed, Eigen::Index dim) {
  NormalSource source(seed);
  return source.normal_vector(dim);
}

}  // namespace ltc
