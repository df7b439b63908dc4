#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/eit/forward.hpp"
#include "dynareg/eit/mesh.hpp"
#include "dynareg/error.hpp"
#include "dynareg/parallel.hpp"
#include "dynareg/random.hpp"

namespace dynareg::eit {

/// Two circular inclusions of contrast kappa on the background sigma = 1:
/// a fixed circle and one orbiting the origin while its radius grows,
///   center(t) = orbit_radius (cos 2 pi t, sin 2 pi t),
///   radius(t) = radius_start + radius_growth t,      t in [0, 1].
struct PhantomSpec {
  Point fixed_center{0.0, 0.0};
  double fixed_radius = 0.1;
  double orbit_radius = 0.5;
  double radius_start = 0.12;
  double radius_growth = 0.10;
  double contrast = 0.5;

  Point moving_center(double t) const {
    const double angle = 2.0 * std::numbers::pi * t;
    return orbit_radius * Point(std::cos(angle), std::sin(angle));
  }

  double moving_radius(double t) const {
    return radius_start + radius_growth * t;
  }

  void validate() const {
    detail::require(fixed_radius > 0.0, "PhantomSpec: fixed radius must be > 0");
    detail::require(fixed_center.norm() + fixed_radius < 1.0,
                    "PhantomSpec: fixed inclusion leaves the unit disk");
    detail::require(radius_start > 0.0,
                    "PhantomSpec: moving radius must be > 0");
    detail::require(radius_growth > 0.0,
                    "PhantomSpec: moving radius must increase with time");
    detail::require(orbit_radius >= 0.0,
                    "PhantomSpec: orbit radius must be nonnegative");
    detail::require(orbit_radius + moving_radius(1.0) < 1.0,
                    "PhantomSpec: moving inclusion leaves the unit disk");
    detail::require(contrast > -1.0,
                    "PhantomSpec: contrast must exceed -1 to keep sigma > 0");
  }
};

/// Per-triangle gamma(t): contrast where the triangle centroid lies inside
/// either circle, zero elsewhere.
inline Vector make_phantom(const PhantomSpec& spec, double t,
                           const DiskMesh& mesh) {
  spec.validate();
  detail::require(t >= 0.0 && t <= 1.0, "make_phantom: t must be in [0, 1]");
  const Point center = spec.moving_center(t);
  const double radius = spec.moving_radius(t);
  Vector gamma = Vector::Zero(mesh.triangle_count());
  for (Index e = 0; e < mesh.triangle_count(); ++e) {
    const Point c = mesh.centroid(e);
    if ((c - spec.fixed_center).norm() < spec.fixed_radius ||
        (c - center).norm() < radius) {
      gamma(e) = spec.contrast;
    }
  }
  return gamma;
}

enum class DataMode { linear, nonlinear };

/// Uniform samples of [0, 1] including both endpoints.
inline std::vector<double> sample_times(int n_steps) {
  detail::require(n_steps >= 1, "sample_times: need n_steps >= 1");
  std::vector<double> t(n_steps, 0.0);
  for (int k = 0; k < n_steps; ++k) {
    t[k] = n_steps == 1 ? 0.0 : static_cast<double>(k) / (n_steps - 1);
  }
  return t;
}

struct SimulatedData {
  DynamicProblem problem;          // forward = flattened F'(1), shared
  std::vector<double> times;
  std::vector<Vector> truth;       // gamma(t_k)
  std::vector<Vector> clean_data;  // before noise
  std::vector<double> noise_norms;
  std::vector<Point> moving_centers;
};

/// Synthesizes dynamic EIT data. Linear mode uses y_k = F'(1) gamma(t_k);
/// nonlinear mode uses y_k = G(1 + gamma(t_k)) - G(1). Noise for step k comes
/// from stream(seed, k) and is rescaled to noise_pct % of |y_k|_HS.
inline SimulatedData simulate_data(const FemSpace& space,
                                   const LinearizedForward& linear,
                                   const PhantomSpec& spec, DataMode mode,
                                   int n_steps, double noise_pct,
                                   std::uint64_t seed, double alpha,
                                   int threads = 1) {
  spec.validate();
  detail::require(n_steps >= 1, "simulate_data: need n_steps >= 1");
  detail::require(noise_pct >= 0.0, "simulate_data: noise_pct must be >= 0");
  detail::require(alpha > 0.0, "simulate_data: alpha must be > 0");
  detail::require(linear.jacobian().cols() == space.mesh().triangle_count(),
                  "simulate_data: linearization built for a different mesh");

  SimulatedData out;
  out.times = sample_times(n_steps);
  out.truth.resize(n_steps);
  out.clean_data.resize(n_steps);
  out.noise_norms.assign(n_steps, 0.0);
  out.moving_centers.resize(n_steps);
  out.problem.data.resize(n_steps);

  const Index nt = space.mesh().triangle_count();
  parallel_for(static_cast<std::size_t>(n_steps), threads, [&](std::size_t k) {
    const double t = out.times[k];
    Vector gamma = make_phantom(spec, t, space.mesh());
    Vector y;
    if (mode == DataMode::linear) {
      y = linear.jacobian() * gamma;
    } else {
      const Vector sigma = Vector::Ones(nt) + gamma;
      y = flatten(nd_map(space, sigma).g - linear.background().g);
    }
    Rng rng = stream(seed, k);
    const Vector noise =
        noise_of_norm(rng, y.size(), noise_pct / 100.0 * y.norm());
    out.noise_norms[k] = noise.norm();
    out.problem.data[k] = y + noise;
    out.clean_data[k] = std::move(y);
    out.truth[k] = std::move(gamma);
    out.moving_centers[k] = spec.moving_center(t);
  });

  out.problem.forward = {linear.jacobian()};
  out.problem.alpha = alpha;
  out.problem.initial_guess = Vector::Zero(nt);
  return out;
}

/// Area-weighted centroid of the top 10 % (by value) of the triangles with
/// positive gamma. Returns nullopt when no value is positive.
inline std::optional<Point> top_decile_centroid(const DiskMesh& mesh,
                                                const Vector& gamma) {
  std::vector<Index> positive;
  for (Index e = 0; e < gamma.size(); ++e) {
    if (gamma(e) > 0.0) positive.push_back(e);
  }
  if (positive.empty()) return std::nullopt;
  std::stable_sort(positive.begin(), positive.end(),
                   [&](Index a, Index b) { return gamma(a) > gamma(b); });
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.1 * positive.size())));
  Point sum(0.0, 0.0);
  double weight = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    const Index e = positive[i];
    sum += mesh.areas[e] * mesh.centroid(e);
    weight += mesh.areas[e];
  }
  return Point(sum / weight);
}

}  // namespace dynareg::eit
