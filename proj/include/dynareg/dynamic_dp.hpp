#pragma once

// Dynamic regularization of F_k u_k = y_k, k = 1..N, by dynamic programming.
//
// The discrete functional
//
//   J(u) = 1/2 sum_k [ <F_k u_k - y_k, L_k (F_k u_k - y_k)>
//                      + alpha |u_k - u_{k-1}|^2 ],   u_0 fixed,
//
// is minimized by a backward Riccati sweep for the quadratic cost-to-go
// 1/2 <u, Q_k u> + <b_k, u> followed by a forward sweep for u_k. The dense
// normal-equations solve of the same functional and the discrete
// Euler-Lagrange residual are provided as independent certificates. The
// continuous counterpart (Riccati ODE system with M = alpha I) is integrated
// with RK4.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <type_traits>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/error.hpp"
#include "dynareg/operator_core.hpp"

namespace dynareg {

/// Time-indexed problem. `forward` and `weights` hold either one entry per
/// time step or a single entry shared by all steps; empty `weights` means
/// L_k = I.
struct DynamicProblem {
  std::vector<Matrix> forward;
  std::vector<Vector> data;
  std::vector<Matrix> weights;
  double alpha = 1.0;
  Vector initial_guess;

  int steps() const { return static_cast<int>(data.size()); }
  Index parameter_dim() const { return initial_guess.size(); }
  bool time_invariant() const {
    return forward.size() == 1 && weights.size() <= 1;
  }

  /// F_k for k = 1..N.
  const Matrix& forward_at(int k) const {
    return forward.size() == 1 ? forward.front() : forward[k - 1];
  }

  /// L_k for k = 1..N, or nullptr for the identity.
  const Matrix* weight_at(int k) const {
    if (weights.empty()) return nullptr;
    return weights.size() == 1 ? &weights.front() : &weights[k - 1];
  }

  void validate() const {
    const int N = steps();
    detail::require(N >= 1, "DynamicProblem: need at least one time step");
    detail::require(alpha > 0.0 && std::isfinite(alpha),
                    "DynamicProblem: alpha must be > 0");
    detail::require(forward.size() == 1 || forward.size() == data.size(),
                    "DynamicProblem: need one forward operator per step or a "
                    "single shared one");
    detail::require(weights.size() <= 1 || weights.size() == data.size(),
                    "DynamicProblem: need one weight per step, a single "
                    "shared one, or none");
    detail::require(initial_guess.allFinite(),
                    "DynamicProblem: non-finite initial guess");
    const Index n = parameter_dim();
    for (int k = 1; k <= N; ++k) {
      const Matrix& F = forward_at(k);
      const std::string at = " at step " + std::to_string(k);
      detail::require(F.cols() == n,
                      "DynamicProblem: F has wrong column count" + at);
      detail::require(data[k - 1].size() == F.rows(),
                      "DynamicProblem: data length does not match F" + at);
      detail::require(data[k - 1].allFinite(),
                      "DynamicProblem: non-finite data" + at);
    }
    for (const Matrix& F : forward) {
      detail::require(F.allFinite(), "DynamicProblem: non-finite F");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const Matrix& L = weights[i];
      const Index m = forward_at(static_cast<int>(i) + 1).rows();
      detail::require(L.rows() == m && L.cols() == m,
                      "DynamicProblem: weight has wrong size");
      detail::require((L - L.transpose()).cwiseAbs().maxCoeff() <=
                          1e-12 * (1.0 + L.cwiseAbs().maxCoeff()),
                      "DynamicProblem: weight is not symmetric");
      detail::require(min_eigenvalue(L) >= -1e-12 * (1.0 + L.norm()),
                      "DynamicProblem: weight is not positive semidefinite");
    }
  }
};

namespace detail {

// F_k^T L_k F_k and F_k^T L_k y_k, computed once when the problem is time
// invariant.
class NormalTerms {
 public:
  explicit NormalTerms(const DynamicProblem& p) : p_(p) {
    if (p.time_invariant()) shared_ = matrix_for(1);
  }

  Matrix matrix(int k) const { return shared_ ? *shared_ : matrix_for(k); }

  Vector rhs(int k) const {
    const Matrix& F = p_.forward_at(k);
    const Matrix* L = p_.weight_at(k);
    return L ? Vector(F.transpose() * (*L * p_.data[k - 1]))
             : Vector(F.transpose() * p_.data[k - 1]);
  }

 private:
  Matrix matrix_for(int k) const {
    const Matrix& F = p_.forward_at(k);
    const Matrix* L = p_.weight_at(k);
    Matrix out = L ? Matrix(F.transpose() * (*L) * F) : Matrix(F.transpose() * F);
    symmetrize(out);
    return out;
  }

  const DynamicProblem& p_;
  std::optional<Matrix> shared_;
};

}  // namespace detail

/// Q_k, b_k for k = 1..N+1 with Q_{N+1} = 0, b_{N+1} = 0.
struct RiccatiTrajectory {
  double alpha = 0.0;
  std::vector<Matrix> q;  // q[k-1] = Q_k
  std::vector<Vector> b;  // b[k-1] = b_k

  int steps() const { return static_cast<int>(q.size()) - 1; }
  const Matrix& Q(int k) const { return q[k - 1]; }
  const Vector& B(int k) const { return b[k - 1]; }
};

struct ReconstructionSeries {
  std::vector<Vector> u;  // u[k-1] = u_k
  double functional_value = 0.0;
  std::vector<double> residuals;  // |F_k u_k - y_k|
};

/// Per-step contributions 1/2 [ <r, L r> + alpha |u_k - u_{k-1}|^2 ].
inline std::vector<double> functional_terms(const DynamicProblem& p,
                                            const std::vector<Vector>& u) {
  detail::require(static_cast<int>(u.size()) == p.steps(),
                  "functional_value: series length does not match N");
  std::vector<double> terms(u.size());
  const Vector* prev = &p.initial_guess;
  for (int k = 1; k <= p.steps(); ++k) {
    const Vector& uk = u[k - 1];
    detail::require(uk.size() == p.parameter_dim(),
                    "functional_value: wrong vector length at step " +
                        std::to_string(k));
    const Vector r = p.forward_at(k) * uk - p.data[k - 1];
    const Matrix* L = p.weight_at(k);
    const double fit = L ? r.dot(*L * r) : r.squaredNorm();
    terms[k - 1] = 0.5 * (fit + p.alpha * (uk - *prev).squaredNorm());
    prev = &uk;
  }
  return terms;
}

inline double functional_value(const DynamicProblem& p,
                               const std::vector<Vector>& u) {
  double sum = 0.0;
  for (double t : functional_terms(p, u)) sum += t;
  return sum;
}

inline ReconstructionSeries make_series(const DynamicProblem& p,
                                        std::vector<Vector> u) {
  ReconstructionSeries s;
  s.functional_value = functional_value(p, u);
  s.residuals.reserve(u.size());
  for (int k = 1; k <= p.steps(); ++k) {
    s.residuals.push_back((p.forward_at(k) * u[k - 1] - p.data[k - 1]).norm());
  }
  s.u = std::move(u);
  return s;
}

inline RiccatiTrajectory backward_sweep(const DynamicProblem& p) {
  p.validate();
  const int N = p.steps();
  const Index n = p.parameter_dim();
  const double alpha = p.alpha;
  const detail::NormalTerms normal(p);

  RiccatiTrajectory traj;
  traj.alpha = alpha;
  traj.q.resize(N + 1);
  traj.b.resize(N + 1);
  traj.q[N] = Matrix::Zero(n, n);
  traj.b[N] = Vector::Zero(n);

  // Cost-to-go recursion:
  //   Q_{k-1} = alpha (Q_k + alpha I)^{-1} Q_k + F^T L F
  //   b_{k-1} = alpha (Q_k + alpha I)^{-1} b_k - F^T L y
  for (int k = N + 1; k >= 2; --k) {
    Matrix shifted = traj.Q(k);
    shifted.diagonal().array() += alpha;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
      throw NumericError("backward_sweep: Q_k + alpha I is not positive "
                         "definite",
                         k);
    }
    Matrix q = alpha * llt.solve(traj.Q(k)) + normal.matrix(k - 1);
    symmetrize(q);
    Vector b = alpha * llt.solve(traj.B(k)) - normal.rhs(k - 1);
    if (!q.allFinite() || !b.allFinite()) {
      throw NumericError("backward_sweep: non-finite Riccati data", k - 1);
    }
    traj.q[k - 2] = std::move(q);
    traj.b[k - 2] = std::move(b);
  }
  return traj;
}

inline ReconstructionSeries forward_sweep(const DynamicProblem& p,
                                          const RiccatiTrajectory& traj) {
  p.validate();
  detail::require(traj.steps() == p.steps(),
                  "forward_sweep: trajectory has " +
                      std::to_string(traj.steps()) + " steps, problem has " +
                      std::to_string(p.steps()));
  detail::require(traj.alpha == p.alpha,
                  "forward_sweep: trajectory built with a different alpha");
  detail::require(traj.Q(1).rows() == p.parameter_dim(),
                  "forward_sweep: trajectory built for a different "
                  "parameter dimension");

  const double alpha = p.alpha;
  std::vector<Vector> u(p.steps());
  Vector prev = p.initial_guess;
  for (int k = 1; k <= p.steps(); ++k) {
    Matrix shifted = traj.Q(k);
    shifted.diagonal().array() += alpha;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
      throw NumericError("forward_sweep: Q_k + alpha I is not positive "
                         "definite",
                         k);
    }
    Vector uk = llt.solve(alpha * prev - traj.B(k));
    if (!uk.allFinite()) throw NumericError("forward_sweep: non-finite u", k);
    prev = uk;
    u[k - 1] = std::move(uk);
  }
  return make_series(p, std::move(u));
}

/// backward_sweep followed by forward_sweep.
inline ReconstructionSeries dp_solve(const DynamicProblem& p) {
  return forward_sweep(p, backward_sweep(p));
}

inline constexpr Index kDefaultOracleCap = 4096;

/// Minimizer of J from the dense (N n) x (N n) normal equations. Intended for
/// verification only; refuses systems larger than `max_unknowns`.
inline ReconstructionSeries tikhonov_oracle(const DynamicProblem& p,
                                            Index max_unknowns =
                                                kDefaultOracleCap) {
  p.validate();
  const int N = p.steps();
  const Index n = p.parameter_dim();
  const Index total = static_cast<Index>(N) * n;
  if (total > max_unknowns) {
    throw InvalidArgument("tikhonov_oracle: " + std::to_string(total) +
                          " unknowns exceed the oracle cap of " +
                          std::to_string(max_unknowns));
  }
  const detail::NormalTerms normal(p);
  const double alpha = p.alpha;
  Matrix system = Matrix::Zero(total, total);
  Vector rhs = Vector::Zero(total);
  for (int k = 1; k <= N; ++k) {
    const Index at = (k - 1) * n;
    auto block = system.block(at, at, n, n);
    block += normal.matrix(k);
    block.diagonal().array() += (k < N ? 2.0 : 1.0) * alpha;
    if (k > 1) {
      system.block(at, at - n, n, n).diagonal().array() -= alpha;
      system.block(at - n, at, n, n).diagonal().array() -= alpha;
    }
    rhs.segment(at, n) += normal.rhs(k);
  }
  rhs.head(n) += alpha * p.initial_guess;
  const Vector x = solve_sym(system, rhs);
  std::vector<Vector> u(N);
  for (int k = 1; k <= N; ++k) u[k - 1] = x.segment((k - 1) * n, n);
  return make_series(p, std::move(u));
}

struct EulerLagrangeReport {
  double interior = 0.0;  // max_k, k = 1..N-1
  double terminal = 0.0;  // last row of the discrete gradient
  double scale = 1.0;
};

/// Discrete form of  F^T L (F u - y) - alpha u'' = 0  with u(0) = u0:
///   interior rows  F_k^T L_k (F_k u_k - y_k) - alpha (u_{k+1} - 2 u_k + u_{k-1})
///   terminal row   F_N^T L_N (F_N u_N - y_N) + alpha (u_N - u_{N-1}).
/// `scale` = 1 + max_k |F_k^T L_k y_k| + alpha max_k |u_k|.
inline EulerLagrangeReport euler_lagrange_residual(
    const DynamicProblem& p, const ReconstructionSeries& s) {
  p.validate();
  const int N = p.steps();
  detail::require(N >= 2, "euler_lagrange_residual: need N >= 2");
  detail::require(static_cast<int>(s.u.size()) == N,
                  "euler_lagrange_residual: series length does not match N");
  const detail::NormalTerms normal(p);
  const double alpha = p.alpha;

  auto at = [&](int k) -> const Vector& {
    return k == 0 ? p.initial_guess : s.u[k - 1];
  };
  EulerLagrangeReport report;
  double data_scale = 0.0, u_scale = p.initial_guess.norm();
  for (int k = 1; k <= N; ++k) {
    const Matrix& F = p.forward_at(k);
    const Matrix* L = p.weight_at(k);
    const Vector r = F * at(k) - p.data[k - 1];
    const Vector grad =
        L ? Vector(F.transpose() * (*L * r)) : Vector(F.transpose() * r);
    data_scale = std::max(data_scale, normal.rhs(k).norm());
    u_scale = std::max(u_scale, at(k).norm());
    if (k < N) {
      const Vector row = grad - alpha * (at(k + 1) - 2.0 * at(k) + at(k - 1));
      report.interior = std::max(report.interior, row.norm());
    } else {
      report.terminal = (grad + alpha * (at(N) - at(N - 1))).norm();
    }
  }
  report.scale = 1.0 + data_scale + alpha * u_scale;
  return report;
}

/// CSV "k,residual,functional_cumulative".
inline std::string series_csv(const DynamicProblem& p,
                              const ReconstructionSeries& s) {
  const std::vector<double> terms = functional_terms(p, s.u);
  std::ostringstream out;
  out << std::setprecision(17) << "k,residual,functional_cumulative\n";
  double cumulative = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    cumulative += terms[k];
    out << (k + 1) << ',' << s.residuals[k] << ',' << cumulative << '\n';
  }
  return out.str();
}

/// Solution vectors as rows of an N x n matrix (matrix text dump layout).
inline Matrix series_matrix(const ReconstructionSeries& s) {
  if (s.u.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Index>(s.u.size()), s.u.front().size());
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    out.row(static_cast<Index>(k)) = s.u[k].transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuous-time system with M(t) = alpha I:
//   Q' = Q Q / alpha - F^T L F,   b' = Q b / alpha + F^T L y,  Q(T) = b(T) = 0
//   u' = -(Q u + b) / alpha,      u(0) = u0.

struct ContinuousProblem {
  std::function<Matrix(double)> forward;
  std::function<Matrix(double)> weight;  // empty for L = I
  std::function<Vector(double)> data;
  double alpha = 1.0;
  double final_time = 1.0;
  Vector initial_guess;
};

struct ContinuousSolution {
  std::vector<double> times;
  std::vector<Matrix> q;
  std::vector<Vector> b;
  /// u at every grid time t_0 = 0, ..., t_{n_T - 1} = T. The functional value
  /// is a trapezoidal / difference-quotient approximation of the continuous J.
  ReconstructionSeries series;
};

inline ContinuousSolution continuous_riccati_solve(const ContinuousProblem& p,
                                                   int grid_points) {
  detail::require(grid_points >= 2,
                  "continuous_riccati_solve: need at least 2 grid points");
  detail::require(p.alpha > 0.0, "continuous_riccati_solve: alpha must be > 0");
  detail::require(p.final_time > 0.0,
                  "continuous_riccati_solve: T must be > 0");
  detail::require(p.forward && p.data,
                  "continuous_riccati_solve: forward and data are required");

  const Index n = p.initial_guess.size();
  const double alpha = p.alpha;
  const int last = grid_points - 1;
  const double h = p.final_time / last;

  struct Normal {
    Matrix a;
    Vector c;
  };
  auto normal_at = [&](double t) {
    const Matrix F = p.forward(t);
    const Vector y = p.data(t);
    detail::require(F.cols() == n && y.size() == F.rows(),
                    "continuous_riccati_solve: inconsistent dimensions");
    if (p.weight) {
      const Matrix L = p.weight(t);
      return Normal{F.transpose() * L * F, F.transpose() * (L * y)};
    }
    return Normal{F.transpose() * F, F.transpose() * y};
  };
  auto q_rate = [&](const Normal& nt, const Matrix& q) -> Matrix {
    return q * q / alpha - nt.a;
  };
  auto b_rate = [&](const Normal& nt, const Matrix& q,
                    const Vector& b) -> Vector { return q * b / alpha + nt.c; };

  ContinuousSolution sol;
  sol.times.resize(grid_points);
  for (int j = 0; j <= last; ++j) sol.times[j] = j * h;
  sol.times[last] = p.final_time;
  sol.q.resize(grid_points);
  sol.b.resize(grid_points);
  std::vector<Matrix> dq(grid_points);
  std::vector<Vector> db(grid_points);

  Matrix q = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  Normal at_node = normal_at(sol.times[last]);
  sol.q[last] = q;
  sol.b[last] = b;
  dq[last] = q_rate(at_node, q);
  db[last] = b_rate(at_node, q, b);
  for (int j = last; j > 0; --j) {
    const double t = sol.times[j];
    const Normal mid = normal_at(t - 0.5 * h);
    const Normal end = normal_at(sol.times[j - 1]);
    const Matrix kq1 = q_rate(at_node, q);
    const Vector kb1 = b_rate(at_node, q, b);
    const Matrix q2 = q - 0.5 * h * kq1;
    const Vector b2 = b - 0.5 * h * kb1;
    const Matrix kq2 = q_rate(mid, q2);
    const Vector kb2 = b_rate(mid, q2, b2);
    const Matrix q3 = q - 0.5 * h * kq2;
    const Vector b3 = b - 0.5 * h * kb2;
    const Matrix kq3 = q_rate(mid, q3);
    const Vector kb3 = b_rate(mid, q3, b3);
    const Matrix q4 = q - h * kq3;
    const Vector b4 = b - h * kb3;
    const Matrix kq4 = q_rate(end, q4);
    const Vector kb4 = b_rate(end, q4, b4);
    q -= (h / 6.0) * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4);
    b -= (h / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
    symmetrize(q);
    if (!q.allFinite() || !b.allFinite()) {
      std::ostringstream msg;
      msg << "continuous_riccati_solve: non-finite Riccati data at t = "
          << sol.times[j - 1];
      throw NumericError(msg.str(), j - 1);
    }
    at_node = end;
    sol.q[j - 1] = q;
    sol.b[j - 1] = b;
    dq[j - 1] = q_rate(end, q);
    db[j - 1] = b_rate(end, q, b);
  }

  auto u_rate = [&](const Matrix& qq, const Vector& bb, const Vector& u) {
    return Vector(-(qq * u + bb) / alpha);
  };
  std::vector<Vector> u(grid_points);
  u[0] = p.initial_guess;
  for (int j = 0; j < last; ++j) {
    const Matrix q_mid =
        0.5 * (sol.q[j] + sol.q[j + 1]) + (h / 8.0) * (dq[j] - dq[j + 1]);
    const Vector b_mid =
        0.5 * (sol.b[j] + sol.b[j + 1]) + (h / 8.0) * (db[j] - db[j + 1]);
    const Vector& uj = u[j];
    const Vector k1 = u_rate(sol.q[j], sol.b[j], uj);
    const Vector k2 = u_rate(q_mid, b_mid, uj + 0.5 * h * k1);
    const Vector k3 = u_rate(q_mid, b_mid, uj + 0.5 * h * k2);
    const Vector k4 = u_rate(sol.q[j + 1], sol.b[j + 1], uj + h * k3);
    u[j + 1] = uj + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!u[j + 1].allFinite()) {
      std::ostringstream msg;
      msg << "continuous_riccati_solve: non-finite u at t = " << sol.times[j + 1];
      throw NumericError(msg.str(), j + 1);
    }
  }

  ReconstructionSeries& s = sol.series;
  std::vector<double> fit(grid_points);
  for (int j = 0; j <= last; ++j) {
    const double t = sol.times[j];
    const Vector r = p.forward(t) * u[j] - p.data(t);
    s.residuals.push_back(r.norm());
    fit[j] = p.weight ? r.dot(p.weight(t) * r) : r.squaredNorm();
  }
  double value = 0.0;
  for (int j = 0; j < last; ++j) {
    value += 0.5 * h * (fit[j] + fit[j + 1]) +
             alpha * (u[j + 1] - u[j]).squaredNorm() / h;
  }
  s.functional_value = 0.5 * value;
  s.u = std::move(u);
  return sol;
}

/// Samples on the uniform grid of `grid_points` times in [0, T]; values
/// between samples are linearly interpolated. `forward`/`weights` may hold a
/// single time-invariant entry; empty `weights` means L = I.
struct SampledProblem {
  std::vector<Matrix> forward;
  std::vector<Matrix> weights;
  std::vector<Vector> data;
  double alpha = 1.0;
  double final_time = 1.0;
  Vector initial_guess;
};

inline ContinuousSolution continuous_riccati_solve(const SampledProblem& p) {
  const int points = static_cast<int>(p.data.size());
  detail::require(points >= 2,
                  "continuous_riccati_solve: need at least 2 samples");
  detail::require(p.forward.size() == 1 ||
                      static_cast<int>(p.forward.size()) == points,
                  "continuous_riccati_solve: forward sample count mismatch");
  detail::require(p.weights.size() <= 1 ||
                      static_cast<int>(p.weights.size()) == points,
                  "continuous_riccati_solve: weight sample count mismatch");

  const double h = p.final_time / (points - 1);
  auto blend = [h, points](double t, const auto& samples) {
    using Value = std::decay_t<decltype(samples.front())>;
    if (samples.size() == 1) return Value(samples.front());
    const double x = std::clamp(t / h, 0.0, double(points - 1));
    const int j = std::min(static_cast<int>(x), points - 2);
    const double w = x - j;
    return Value((1.0 - w) * samples[j] + w * samples[j + 1]);
  };
  ContinuousProblem cp;
  cp.forward = [&](double t) { return blend(t, p.forward); };
  if (!p.weights.empty()) {
    cp.weight = [&](double t) { return blend(t, p.weights); };
  }
  cp.data = [&](double t) { return blend(t, p.data); };
  cp.alpha = p.alpha;
  cp.final_time = p.final_time;
  cp.initial_guess = p.initial_guess;
  return continuous_riccati_solve(cp, points);
}

}  // namespace dynareg
