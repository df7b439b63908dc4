#pragma once

// Seeded random problem instances shared by the experiment harness, the
// benchmarks and the tests.

#include <random>
#include <vector>

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/random.hpp"

namespace dynareg {

/// Gaussian F_k (scaled by 1/sqrt(m)), data and initial guess; L_k = I.
inline DynamicProblem random_dynamic_problem(Rng& rng, Index n, Index m,
                                             int steps, double alpha) {
  DynamicProblem p;
  p.alpha = alpha;
  p.initial_guess = gaussian_vector(rng, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int k = 0; k < steps; ++k) {
    p.forward.push_back(scale * gaussian_matrix(rng, m, n));
    p.data.push_back(gaussian_vector(rng, m));
  }
  return p;
}

/// Random symmetric positive semidefinite weight of rank <= m.
inline Matrix random_psd(Rng& rng, Index m) {
  const Matrix g = gaussian_matrix(rng, m, m);
  Matrix l = g * g.transpose() / static_cast<double>(m);
  symmetrize(l);
  return l;
}

}  // namespace dynareg
