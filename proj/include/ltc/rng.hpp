#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace ltc {

// Seeded standard-normal source. Box-Muller over raw mt19937_64 words so the
// stream is identical on every standard library.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform in (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index dim);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Initial latent x_N for a seed.
Eigen::VectorXd initial_noise(std::uint64_t seed, Eigen::Index dim);

}  // namespace ltc
