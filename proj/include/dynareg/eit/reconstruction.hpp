#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/eit/forward.hpp"
#include "dynareg/eit/mesh.hpp"
#include "dynareg/eit/phantom.hpp"

namespace dynareg::eit {

struct ReconstructionSettings {
  int n_rings = 8;
  int n_steps = 50;
  double noise_pct = 1.0;
  DataMode mode = DataMode::nonlinear;
  double alpha = 1e-6;
  PhantomSpec phantom;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Dynamic EIT reconstruction with the discrete DP sweeps and per-frame
/// localization diagnostics.
struct EitReconstruction {
  SimulatedData data;
  ReconstructionSeries series;
  std::vector<std::optional<Point>> centroids;  // top-decile centroid
  std::vector<double> distances;                // to the moving center

  int localized_frames(double tolerance) const {
    int count = 0;
    for (double d : distances) count += d <= tolerance ? 1 : 0;
    return count;
  }

  /// mean_k |F u_k - y_k| / mean_k |noise_k|.
  double residual_to_noise_ratio() const {
    double res = 0.0, noise = 0.0;
    for (double r : series.residuals) res += r;
    for (double n : data.noise_norms) noise += n;
    return noise > 0.0 ? res / noise : std::numeric_limits<double>::infinity();
  }
};

inline EitReconstruction reconstruct(const FemSpace& space,
                                     const LinearizedForward& linear,
                                     const ReconstructionSettings& s) {
  EitReconstruction out;
  out.data = simulate_data(space, linear, s.phantom, s.mode, s.n_steps,
                           s.noise_pct, s.seed, s.alpha, s.threads);
  out.series = dp_solve(out.data.problem);
  for (int k = 0; k < s.n_steps; ++k) {
    const auto c = top_decile_centroid(space.mesh(), out.series.u[k]);
    out.centroids.push_back(c);
    out.distances.push_back(c ? (*c - out.data.moving_centers[k]).norm()
                              : std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace dynareg::eit
