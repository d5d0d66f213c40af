#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace dgpal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

// Nugget floor for deterministic (interpolating) fits: sqrt of double epsilon.
inline constexpr double kNuggetFloor = 1.490116119384766e-8;

// Diagonal jitter added when a nominally noiseless covariance fails to factorize.
inline constexpr double kJitter = 1e-8;

/// Training pair: inputs are rows of x (n x d), responses in y (n).
struct Dataset {
  Matrix x;
  Vector y;

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }
};

/// Derive an independent RNG stream for sub-task `k` of a seeded computation.
inline Rng substream(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  s ^= s >> 30;
  s *= 0xBF58476D1CE4E5B9ull;
  s ^= s >> 27;
  s *= 0x94D049BB133111EBull;
  s ^= s >> 31;
  return Rng(s);
}

}  // namespace dgpal
