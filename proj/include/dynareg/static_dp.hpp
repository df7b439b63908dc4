#pragma once

// Static regularization u_T = R_T(y) obtained from the linear-quadratic
// control problem  min 1/2 \int_0^T |F u - y|^2 + |u'|^2 dt,  u(0) = u0.
//
// Two independent routes are provided:
//  * the closed-form spectral filter
//      u_T = sum (1 - sech(sigma T)) / sigma^2 <F^T y, v> v
//          + sum sech(sigma T) <u0, v> v,
//  * backward RK4 integration of the Riccati equation Q' = -I + Q F F^T Q with
//    Q(T) = 0, followed by forward RK4 integration of u' = -F^T Q (F u - y).

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/error.hpp"
#include "dynareg/operator_core.hpp"
#include "dynareg/parallel.hpp"
#include "dynareg/random.hpp"

namespace dynareg {

/// Spectral symbol of Q(t) = q(t, F F^T):  tanh(sqrt(lambda) (T - t)) /
/// sqrt(lambda), with the limit T - t at lambda = 0.
inline double q_filter(double t, double final_time, double lambda) {
  detail::require(t <= final_time, "q_filter: t must not exceed T");
  detail::require(lambda >= 0.0, "q_filter: lambda must be nonnegative");
  const double remaining = final_time - t;
  if (lambda == 0.0) return remaining;
  const double root = std::sqrt(lambda);
  return std::tanh(root * remaining) / root;
}

struct StaticProblem {
  Matrix forward;        // m x n
  Vector data;           // m
  Vector initial_guess;  // n
  double noise_bound = 0.0;

  void validate() const {
    detail::require(forward.rows() >= 1 && forward.cols() >= 1,
                    "StaticProblem: empty forward operator");
    detail::require(data.size() == forward.rows(),
                    "StaticProblem: data length does not match F rows");
    detail::require(initial_guess.size() == forward.cols(),
                    "StaticProblem: initial guess length does not match F "
                    "columns");
    detail::require(noise_bound >= 0.0,
                    "StaticProblem: noise bound must be nonnegative");
    detail::require(forward.allFinite() && data.allFinite() &&
                        initial_guess.allFinite(),
                    "StaticProblem: non-finite entries");
  }
};

enum class FilterMethod { spectral, riccati_ode };

struct FilterResult {
  Vector solution;
  double final_time = 0.0;
  double residual_norm = 0.0;
  FilterMethod method = FilterMethod::spectral;
};

namespace detail {

inline double sech(double x) {
  const double c = std::cosh(x);
  return std::isfinite(c) ? 1.0 / c : 0.0;
}

inline FilterResult make_result(const StaticProblem& p, Vector u, double T,
                                FilterMethod method) {
  FilterResult r;
  r.residual_norm = (p.forward * u - p.data).norm();
  r.solution = std::move(u);
  r.final_time = T;
  r.method = method;
  return r;
}

}  // namespace detail

/// Closed-form spectral solution using an existing decomposition of p.forward.
inline FilterResult static_filter_solve(const StaticProblem& p,
                                        const SpectralDecomposition& dec,
                                        double final_time) {
  p.validate();
  detail::require(final_time >= 0.0, "static_filter_solve: T must be >= 0");
  detail::require(dec.rows == p.forward.rows() && dec.cols == p.forward.cols(),
                  "static_filter_solve: decomposition does not match F");

  const Matrix& V = dec.right_vectors;
  const Vector data_coeff = dec.left_vectors.transpose() * p.data;
  const Vector guess_coeff = V.transpose() * p.initial_guess;

  Vector coeff(dec.rank());
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s = dec.singular_values(i);
    const double damp = detail::sech(s * final_time);
    // (1 - sech) / sigma^2 applied to F^T y = sigma <y, u_i> v_i.
    coeff(i) = (1.0 - damp) / s * data_coeff(i) + damp * guess_coeff(i);
  }
  // Null-space part of u0 passes through unchanged.
  Vector u = p.initial_guess - V * guess_coeff + V * coeff;
  return detail::make_result(p, std::move(u), final_time,
                             FilterMethod::spectral);
}

inline FilterResult static_filter_solve(const StaticProblem& p,
                                        double final_time) {
  p.validate();
  return static_filter_solve(p, svd(p.forward), final_time);
}

/// Q(t_j) on the uniform grid t_j = j T / steps, together with dQ/dt at the
/// nodes. The slopes make cubic Hermite interpolation available for the half
/// steps of the forward RK4 sweep.
struct RiccatiOdeTrajectory {
  double final_time = 0.0;
  Matrix gram;  // F F^T
  std::vector<double> times;
  std::vector<Matrix> values;
  std::vector<Matrix> rates;

  int steps() const { return static_cast<int>(values.size()) - 1; }
  double step_size() const { return final_time / steps(); }

  /// Q at t_j + h/2.
  Matrix midpoint(int j) const {
    const double h = step_size();
    Matrix q = 0.5 * (values[j] + values[j + 1]) +
               (h / 8.0) * (rates[j] - rates[j + 1]);
    symmetrize(q);
    return q;
  }
};

inline RiccatiOdeTrajectory riccati_ode_solve(const Matrix& forward,
                                              double final_time, int steps) {
  detail::require(steps >= 1, "riccati_ode_solve: steps must be >= 1");
  detail::require(final_time >= 0.0, "riccati_ode_solve: T must be >= 0");
  detail::require(forward.allFinite(), "riccati_ode_solve: non-finite F");

  const Index m = forward.rows();
  const Matrix gram = forward * forward.transpose();
  const Matrix eye = Matrix::Identity(m, m);
  auto rate = [&](const Matrix& q) -> Matrix {
    return -eye + q * gram * q;
  };

  RiccatiOdeTrajectory traj;
  traj.final_time = final_time;
  traj.gram = gram;
  traj.times.resize(steps + 1);
  traj.values.resize(steps + 1);
  traj.rates.resize(steps + 1);
  const double h = final_time / steps;
  for (int j = 0; j <= steps; ++j) traj.times[j] = j * h;
  traj.times[steps] = final_time;

  Matrix q = Matrix::Zero(m, m);
  traj.values[steps] = q;
  traj.rates[steps] = rate(q);
  for (int j = steps; j > 0; --j) {
    const Matrix k1 = rate(q);
    const Matrix k2 = rate(q - 0.5 * h * k1);
    const Matrix k3 = rate(q - 0.5 * h * k2);
    const Matrix k4 = rate(q - h * k3);
    q -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    symmetrize(q);
    if (!q.allFinite()) {
      throw NumericError("riccati_ode_solve: Riccati solution blew up", j - 1);
    }
    traj.values[j - 1] = q;
    traj.rates[j - 1] = rate(q);
  }
  return traj;
}

/// Integrates u' = -F^T Q(t) (F u - y), u(0) = u0 forward on the grid of
/// `traj` and returns u(T).
inline FilterResult evolve_u(const StaticProblem& p,
                             const RiccatiOdeTrajectory& traj,
                             double final_time) {
  p.validate();
  detail::require(traj.steps() >= 1, "evolve_u: empty Riccati trajectory");
  detail::require(
      std::abs(final_time - traj.final_time) <=
          1e-12 * std::max(1.0, std::abs(final_time)),
      "evolve_u: final time does not match the Riccati trajectory grid");
  detail::require(traj.gram.rows() == p.forward.rows(),
                  "evolve_u: Riccati trajectory built for a different F");
  const Matrix gram = p.forward * p.forward.transpose();
  detail::require((gram - traj.gram).norm() <= 1e-12 * (1.0 + gram.norm()),
                  "evolve_u: Riccati trajectory built for a different F");

  const Matrix& F = p.forward;
  auto rate = [&](const Matrix& q, const Vector& u) -> Vector {
    return -F.transpose() * (q * (F * u - p.data));
  };

  const double h = traj.step_size();
  Vector u = p.initial_guess;
  for (int j = 0; j < traj.steps(); ++j) {
    const Matrix mid = traj.midpoint(j);
    const Vector k1 = rate(traj.values[j], u);
    const Vector k2 = rate(mid, u + 0.5 * h * k1);
    const Vector k3 = rate(mid, u + 0.5 * h * k2);
    const Vector k4 = rate(traj.values[j + 1], u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!u.allFinite()) throw NumericError("evolve_u: non-finite state", j);
  }
  return detail::make_result(p, std::move(u), final_time,
                             FilterMethod::riccati_ode);
}

/// A-priori parameter choice T = c * delta^(-1 / (2 mu + 1)).
inline double choose_T(double delta, double mu, double scale = 1.0) {
  detail::require(delta > 0.0,
                  "choose_T: delta must be > 0 (exact data needs no stopping "
                  "time)");
  detail::require(mu > 0.0, "choose_T: mu must be > 0");
  detail::require(scale > 0.0, "choose_T: scale must be > 0");
  return scale * std::pow(delta, -1.0 / (2.0 * mu + 1.0));
}

/// Diagonal test problem whose exact solution satisfies the source condition
/// u_dagger = (F^T F)^mu omega.
struct SourceConditionInstance {
  Vector singular_values;
  Vector omega;
  double mu = 0.0;
  Vector u_dagger;
  Vector y_exact;

  static SourceConditionInstance make(Vector singular_values, Vector omega,
                                      double mu) {
    detail::require(singular_values.size() >= 1 &&
                        singular_values.size() == omega.size(),
                    "SourceConditionInstance: size mismatch");
    detail::require((singular_values.array() > 0.0).all(),
                    "SourceConditionInstance: singular values must be > 0");
    detail::require(mu > 0.0, "SourceConditionInstance: mu must be > 0");
    detail::require(omega.allFinite(),
                    "SourceConditionInstance: omega must be finite");
    SourceConditionInstance inst;
    inst.u_dagger =
        singular_values.array().pow(2.0 * mu).matrix().cwiseProduct(omega);
    inst.y_exact = singular_values.cwiseProduct(inst.u_dagger);
    inst.singular_values = std::move(singular_values);
    inst.omega = std::move(omega);
    inst.mu = mu;
    return inst;
  }

  /// `n` singular values spaced geometrically in [smallest, 1] with a flat
  /// omega of unit norm.
  static SourceConditionInstance geometric(Index n, double smallest,
                                           double mu) {
    detail::require(n >= 2, "SourceConditionInstance: need n >= 2");
    detail::require(smallest > 0.0 && smallest < 1.0,
                    "SourceConditionInstance: smallest must be in (0, 1)");
    Vector s(n);
    for (Index i = 0; i < n; ++i) {
      s(i) = std::pow(smallest, static_cast<double>(i) / (n - 1));
    }
    return make(std::move(s), Vector::Constant(n, 1.0 / std::sqrt(double(n))),
                mu);
  }

  Matrix forward() const { return Matrix(singular_values.asDiagonal()); }

  StaticProblem problem(Vector data) const {
    return StaticProblem{forward(), std::move(data),
                         Vector::Zero(singular_values.size()), 0.0};
  }
};

struct RateRow {
  double delta = 0.0;
  double final_time = 0.0;
  double error = 0.0;
};

struct RateStudy {
  std::vector<RateRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x,
                           std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2,
                  "loglog_slope: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  detail::require(sxx > 0.0, "loglog_slope: x values are all equal");
  return sxy / sxx;
}

/// Noisy-data convergence study with the a-priori choice T = choose_T(delta).
/// Noise for level i is drawn from stream(seed, i) and rescaled to norm delta.
inline RateStudy rate_study(const SourceConditionInstance& inst,
                            std::span<const double> deltas, std::uint64_t seed,
                            double scale = 1.0, int threads = 1) {
  detail::require(deltas.size() >= 4, "rate_study: need at least 4 noise levels");
  double lo = deltas[0], hi = deltas[0];
  for (double d : deltas) {
    detail::require(d > 0.0, "rate_study: noise levels must be > 0");
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  detail::require(hi >= 100.0 * lo,
                  "rate_study: noise levels must span at least two decades");

  const Matrix F = inst.forward();
  const SpectralDecomposition dec = svd(F);
  const Index n = inst.singular_values.size();

  RateStudy study;
  study.rows.resize(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) {
    Rng rng = stream(seed, i);
    const double delta = deltas[i];
    Vector noisy = inst.y_exact + noise_of_norm(rng, n, delta);
    const double T = choose_T(delta, inst.mu, scale);
    const FilterResult r =
        static_filter_solve(inst.problem(std::move(noisy)), dec, T);
    study.rows[i] = {delta, T, (r.solution - inst.u_dagger).norm()};
  });

  std::vector<double> xs, ys;
  bool all_tiny = true;
  for (const auto& row : study.rows) {
    xs.push_back(row.delta);
    ys.push_back(row.error);
    if (row.error >= 1e-14) all_tiny = false;
  }
  if (all_tiny) {
    study.saturated = true;
  } else {
    for (auto& y : ys) y = std::max(y, 1e-300);
    study.slope = loglog_slope(xs, ys);
  }
  return study;
}

/// CSV table "delta,T,error" followed by a "# slope=<value>" comment line.
inline std::string to_csv(const RateStudy& study) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "delta,T,error\n";
  for (const auto& row : study.rows) {
    out << row.delta << ',' << row.final_time << ',' << row.error << '\n';
  }
  if (study.saturated) {
    out << "# slope=saturated\n";
  } else {
    out << "# slope=" << study.slope << '\n';
  }
  return out.str();
}

}  // namespace dynareg
