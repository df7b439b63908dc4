// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/dynareg.hpp"
#include "dynareg/experiment.hpp"
#include "oracles.hpp"

namespace {

using namespace dynareg;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

DynamicProblem scalar_problem(std::vector<double> y) {
  DynamicProblem p;
  p.forward = {Matrix::Identity(1, 1)};
  p.weights = {Matrix::Identity(1, 1)};
  for (double v : y) p.data.push_back(Vector::Constant(1, v));
  p.alpha = 1.0;
  p.initial_guess = Vector::Zero(1);
  return p;
}

// Shared by criteria 2, 3 and 10.
experiment::OracleCheckParams oracle_params() { return {}; }
constexpr std::uint64_t kOracleSeed = 2024;

Outcome hand_cases() {
  const auto one = scalar_problem({2.0});
  const auto two = scalar_problem({2.0, 2.0});
  const auto t1 = backward_sweep(one);
  const auto t2 = backward_sweep(two);
  const auto s1 = forward_sweep(one, t1);
  const auto s2 = forward_sweep(two, t2);
  const double err = std::max(
      {std::abs(t1.Q(1)(0, 0) - 1.0), std::abs(t1.B(1)(0) + 2.0),
       std::abs(s1.u[0](0) - 1.0), std::abs(s1.functional_value - 1.0),
       std::abs(t2.Q(2)(0, 0) - 1.0), std::abs(t2.B(2)(0) + 2.0),
       std::abs(t2.Q(1)(0, 0) - 1.5), std::abs(t2.B(1)(0) + 3.0),
       std::abs(s2.u[0](0) - 1.2), std::abs(s2.u[1](0) - 1.6)});
  return {err <= 1e-12, "max deviation " + fmt(err) + " (tol 1e-12)"};
}

Outcome oracle_equivalence() {
  const auto rows = experiment::oracle_check(oracle_params(), kOracleSeed);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.relative_error);
  return {rows.size() == 50 && worst <= 1e-8,
          std::to_string(rows.size()) + " instances, max relative error " +
              fmt(worst) + " (tol 1e-8)"};
}

Outcome euler_lagrange() {
  const auto rows = experiment::oracle_check(oracle_params(), kOracleSeed);
  double worst = 0.0;
  int checked = 0;
  for (const auto& r : rows) {
    if (r.steps < 2) continue;  // no interior rows
    ++checked;
    worst = std::max(worst, r.el_interior / r.el_scale);
  }
  return {checked > 0 && worst <= 1e-8,
          std::to_string(checked) + " instances with N >= 2, max interior "
          "residual / scale " + fmt(worst) + " (tol 1e-8)"};
}

Outcome static_agreement() {
  double worst = 0.0, bound_violation = 0.0;
  for (int i = 0; i < 20; ++i) {
    oracle::Gen gen(404, i);
    const Index m = gen.integer(1, 16), n = gen.integer(1, 16);
    const Matrix f = gen.matrix(m, n) / std::sqrt(double(m));
    StaticProblem p{f, gen.vector(m), gen.vector(n), 0.0};
    const double T = gen.uniform(0.5, 5.0);
    const auto traj = riccati_ode_solve(f, T, 400);
    const Vector a = static_filter_solve(p, T).solution;
    const Vector b = evolve_u(p, traj, T).solution;
    worst = std::max(worst, (a - b).norm());
    const double norm = f.operatorNorm();
    for (int j = 0; j <= traj.steps(); ++j) {
      const double s = T - traj.times[j];
      const double lo = norm > 0 ? std::tanh(s * norm) / norm : s;
      bound_violation = std::max(
          {bound_violation, lo - 1e-6 - min_eigenvalue(traj.values[j]),
           max_eigenvalue(traj.values[j]) - s - 1e-6});
    }
  }
  return {worst <= 1e-6 && bound_violation <= 0.0,
          "max |spectral - ode| " + fmt(worst) +
              " (tol 1e-6), spectrum bound " +
              (bound_violation <= 0.0 ? "holds" : "violated by " + fmt(bound_violation))};
}

Outcome noise_free_decay() {
  const auto inst = SourceConditionInstance::geometric(200, 1e-4, 1.0);
  const auto dec = svd(inst.forward());
  std::vector<double> err;
  for (double T : {5.0, 10.0, 20.0, 40.0}) {
    err.push_back((static_filter_solve(inst.problem(inst.y_exact), dec, T).solution -
                   inst.u_dagger).norm());
  }
  bool ok = true;
  std::string ratios;
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double r = err[i - 1] / err[i];
    ok = ok && r >= 4.0 / 1.5 && r <= 4.0 * 1.5;
    ratios += (i > 1 ? ", " : "") + fmt(r);
  }
  return {ok, "error ratios per doubling of T: " + ratios + " (target 4 within x1.5)"};
}

Outcome rate_study_slope() {
  const auto inst = SourceConditionInstance::geometric(200, 1e-4, 0.5);
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  const auto study = rate_study(inst, deltas, 11);
  const bool ok = !study.saturated && std::abs(study.slope - 0.5) <= 0.15;
  return {ok, "slope " + fmt(study.slope) + " (target 0.5 +- 0.15)"};
}

Outcome taylor_order() {
  const eit::FemSpace space(eit::build_disk_mesh(8));
  const eit::LinearizedForward lin(space);
  const Index nt = space.mesh().triangle_count();
  oracle::Gen gen(707);
  const Vector gamma = gen.vector(nt);
  std::vector<double> rem;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    const Matrix g = eit::nd_map(space, Vector::Ones(nt) + h * gamma).g;
    rem.push_back((g - lin.background().g - h * lin.apply(gamma)).norm());
  }
  const double o1 = std::log10(rem[0] / rem[1]), o2 = std::log10(rem[1] / rem[2]);
  return {o1 >= 1.9 && o2 >= 1.9,
          "observed orders " + fmt(o1) + ", " + fmt(o2) + " (min 1.9)"};
}

Outcome eit_reconstruction() {
  const eit::FemSpace space(eit::build_disk_mesh(8));
  const eit::LinearizedForward lin(space);
  eit::ReconstructionSettings s;
  s.n_steps = 50;
  s.seed = 2024;

  s.mode = eit::DataMode::linear;
  s.noise_pct = 0.0;
  const auto clean = eit::reconstruct(space, lin, s);
  const int clean_hits = clean.localized_frames(0.2);

  s.mode = eit::DataMode::nonlinear;
  s.noise_pct = 1.0;
  const auto noisy = eit::reconstruct(space, lin, s);
  const int noisy_hits = noisy.localized_frames(0.2);
  const double ratio = noisy.residual_to_noise_ratio();

  const bool ok = clean_hits >= 45 && noisy_hits >= 45 && ratio >= 1.0 / 3.0 &&
                  ratio <= 3.0;
  return {ok, "localized frames linear/noise-free " + std::to_string(clean_hits) +
                  "/50, nonlinear/1% " + std::to_string(noisy_hits) +
                  "/50 (min 45); mean residual / mean noise " + fmt(ratio) +
                  " (within x3)"};
}

Outcome complexity_scaling() {
  experiment::BenchOptions opt;
  opt.sizes = {64, 128, 256, 512};
  opt.n = 32;
  opt.m = 32;
  opt.seed = 7;
  opt.repetitions = 7;
  const auto r = experiment::bench_scaling(opt);
  const bool ok = r.exponent >= 0.8 && r.exponent <= 1.3 &&
                  r.max_doubling_ratio <= 2.5;
  return {ok, "exponent " + fmt(r.exponent) + " (range [0.8, 1.3]), max doubling ratio " +
                  fmt(r.max_doubling_ratio) + " (max 2.5), batch " +
                  std::to_string(r.batch)};
}

Outcome invariant_suite() {
  std::vector<std::string> failed;

  // PSD of every Q_k on the oracle instances.
  double min_eig = 0.0;
  const auto params = oracle_params();
  for (int i = 0; i < params.instances; ++i) {
    const auto traj = backward_sweep(experiment::oracle_instance(params, kOracleSeed, i));
    for (const auto& q : traj.q) min_eig = std::min(min_eig, min_eigenvalue(q));
  }
  if (min_eig < -1e-8) failed.push_back("PSD");

  // q-filter satisfies q' = -1 + lambda q^2 with an O(h^2) central-difference
  // residual at 100 random points.
  oracle::Gen gen(1010);
  int ode_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const double T = gen.uniform(0.5, 5.0);
    const double lambda = gen.uniform(0.0, 10.0);
    const double t = gen.uniform(0.1, T - 0.1);
    auto residual = [&](double h) {
      const double dq =
          (q_filter(t + h, T, lambda) - q_filter(t - h, T, lambda)) / (2 * h);
      const double q = q_filter(t, T, lambda);
      return std::abs(dq + 1.0 - lambda * q * q);
    };
    const double r1 = residual(1e-2), r2 = residual(5e-3);
    const bool second_order = r1 <= 1e-10 || (r1 / r2 > 3.0 && r1 / r2 < 5.0);
    if (!second_order || r1 > 1e-2) ++ode_bad;
  }
  if (ode_bad) failed.push_back("q-ODE");

  // Adjoint consistency and gauge identities on the n_rings = 8 mesh.
  const eit::FemSpace space(eit::build_disk_mesh(8));
  const eit::LinearizedForward lin(space);
  const auto& mesh = space.mesh();
  double adj_err = 0.0, gauge_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector gamma = gen.vector(mesh.triangle_count());
    const Matrix w = gen.matrix(lin.boundary_count(), lin.boundary_count());
    const Vector back = lin.adjoint(w);
    double pair = 0.0;
    for (Index e = 0; e < gamma.size(); ++e) pair += mesh.areas[e] * gamma(e) * back(e);
    adj_err = std::max(adj_err, std::abs(eit::hs_inner(lin.apply(gamma), w) - pair));

    const Vector sigma = (gamma.array().abs() + 0.1).matrix();
    const Matrix g = eit::nd_map(space, sigma).g;
    const Vector ones = Vector::Ones(g.rows());
    gauge_err = std::max({gauge_err, (g * ones).cwiseAbs().maxCoeff(),
                          (ones.transpose() * g).cwiseAbs().maxCoeff()});
  }
  gauge_err = std::max(gauge_err, (lin.background().g * Vector::Ones(lin.boundary_count()))
                                      .cwiseAbs().maxCoeff());
  if (adj_err > 1e-8) failed.push_back("adjoint");
  if (gauge_err > 1e-10) failed.push_back("gauge");

  std::string detail = "min eig Q_k " + fmt(min_eig) + ", q-ODE failures " +
                       std::to_string(ode_bad) + "/100, adjoint gap " + fmt(adj_err) +
                       ", |G 1| " + fmt(gauge_err);
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "scalar DP hand cases", 1.0, hand_cases},
      {2, "oracle equivalence", 30.0, oracle_equivalence},
      {3, "Euler-Lagrange certification", 30.0, euler_lagrange},
      {4, "static cross-method agreement", 60.0, static_agreement},
      {5, "noise-free decay", 10.0, noise_free_decay},
      {6, "noisy rate study", 60.0, rate_study_slope},
      {7, "EIT linearization order", 60.0, taylor_order},
      {8, "EIT reconstruction", 900.0, eit_reconstruction},
      {9, "complexity scaling", 300.0, complexity_scaling},
      {10, "invariant suites", 120.0, invariant_suite},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-4s %s: %s; %.2fs (limit %.0fs)%s\n", c.id,
                pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), secs,
                c.limit_seconds, in_time ? "" : " TIME LIMIT EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
