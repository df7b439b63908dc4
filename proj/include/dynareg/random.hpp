#pragma once

#include <cstdint>
#include <random>

#include "dynareg/operator_core.hpp"

namespace dynareg {

using Rng = std::mt19937_64;

/// Independent generator for work item `index` of an experiment seeded with
/// `seed`. Items draw from their own stream, so results do not depend on the
/// order (or thread) in which items are processed.
inline Rng stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

inline Vector gaussian_vector(Rng& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  return a;
}

/// Gaussian vector rescaled to Euclidean norm exactly `norm`.
inline Vector noise_of_norm(Rng& rng, Index n, double norm) {
  Vector v = gaussian_vector(rng, n);
  const double len = v.norm();
  if (norm == 0.0 || len == 0.0) return Vector::Zero(n);
  return v * (norm / len);
}

}  // namespace dynareg
