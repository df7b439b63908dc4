#include <gtest/gtest.h>

#include "dynareg/static_dp.hpp"
#include "oracles.hpp"

namespace dynareg {
namespace {

StaticProblem scalar_problem(double f, double y, double u0) {
  return {Matrix::Constant(1, 1, f), Vector::Constant(1, y),
          Vector::Constant(1, u0), 0.0};
}

TEST(QFilter, ValuesAndLimits) {
  EXPECT_EQ(q_filter(2.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(q_filter(2.0, 2.0, 0.0), 0.0);
  EXPECT_EQ(q_filter(0.5, 2.0, 0.0), 1.5);
  EXPECT_NEAR(q_filter(0.0, 1.0, 1.0), 0.7615941559557649, 1e-15);
  EXPECT_THROW(q_filter(3.0, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(q_filter(0.0, 2.0, -1.0), InvalidArgument);
}

TEST(QFilter, MatchesExponentialFormAndStaysInRange) {
  oracle::Gen gen(21);
  for (int i = 0; i < 200; ++i) {
    const double T = gen.uniform(0.0, 10.0);
    const double t = gen.uniform(0.0, T);
    const double lambda = std::pow(10.0, gen.uniform(-8.0, 3.0));
    const double q = q_filter(t, T, lambda);
    EXPECT_NEAR(q, oracle::q_exp(t, T, lambda), 1e-10 * (1.0 + q));
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, T - t + 1e-15);
  }
}

TEST(QFilter, SatisfiesRiccatiOdeToSecondOrder) {
  oracle::Gen gen(22);
  for (int i = 0; i < 100; ++i) {
    const double T = gen.uniform(0.5, 5.0);
    const double lambda = gen.uniform(0.0, 10.0);
    const double t = gen.uniform(0.1, T - 0.1);
    auto residual = [&](double h) {
      const double dq = (q_filter(t + h, T, lambda) - q_filter(t - h, T, lambda)) /
                        (2.0 * h);
      const double q = q_filter(t, T, lambda);
      return std::abs(dq - (-1.0 + lambda * q * q));
    };
    const double r1 = residual(1e-2), r2 = residual(5e-3);
    EXPECT_LE(r1, 1e-2) << "t=" << t << " lambda=" << lambda;
    if (r1 > 1e-9) EXPECT_GT(r1 / r2, 3.0) << "t=" << t << " lambda=" << lambda;
  }
}

TEST(StaticFilter, ZeroTimeReturnsInitialGuess) {
  oracle::Gen gen(23);
  StaticProblem p{gen.matrix(3, 5), gen.vector(3), gen.vector(5), 0.0};
  const auto r = static_filter_solve(p, 0.0);
  EXPECT_LE((r.solution - p.initial_guess).norm(), 1e-15);
  EXPECT_EQ(r.method, FilterMethod::spectral);
}

TEST(StaticFilter, ScalarClosedForm) {
  const auto r = static_filter_solve(scalar_problem(1.0, 1.0, 0.0), 3.0);
  EXPECT_NEAR(r.solution(0), 1.0 - 1.0 / std::cosh(3.0), 1e-15);
  EXPECT_NEAR(r.solution(0), 0.9006720725805668, 1e-15);
  const auto far = static_filter_solve(scalar_problem(1.0, 1.0, 0.0), 60.0);
  EXPECT_NEAR(far.solution(0), 1.0, 1e-15);
}

TEST(StaticFilter, MatchesEigenOracleAndKeepsNullSpace) {
  for (int trial = 0; trial < 30; ++trial) {
    oracle::Gen gen(24, trial);
    const Index m = gen.integer(1, 10), n = gen.integer(1, 10);
    Matrix f = gen.matrix(m, n);
    if (trial % 3 == 0 && n > 1) f.col(0).setZero();  // null-space direction
    StaticProblem p{f, gen.vector(m), gen.vector(n), 0.0};
    const double T = gen.uniform(0.0, 5.0);
    const auto r = static_filter_solve(p, T);
    const Vector ref = oracle::static_solution(f, p.data, p.initial_guess, T);
    EXPECT_LE((r.solution - ref).norm(), 1e-9 * (1.0 + ref.norm()));
    EXPECT_NEAR(r.residual_norm, (f * r.solution - p.data).norm(),
                1e-12 * (1.0 + r.residual_norm));
    EXPECT_EQ(r.final_time, T);
    if (trial % 3 == 0 && n > 1) {
      EXPECT_NEAR(r.solution(0), p.initial_guess(0), 1e-12);
    }
  }
}

TEST(StaticFilter, ResidualNonincreasingInTForAttainableData) {
  oracle::Gen gen(25);
  const Matrix f = gen.matrix(6, 4);
  StaticProblem p{f, f * gen.vector(4), Vector::Zero(4), 0.0};
  const auto dec = svd(f);
  double prev = std::numeric_limits<double>::infinity();
  for (double T = 0.0; T <= 20.0; T += 0.25) {
    const double r = static_filter_solve(p, dec, T).residual_norm;
    EXPECT_LE(r, prev + 1e-13);
    prev = r;
  }
}

TEST(StaticFilter, CommutationIdentity) {
  oracle::Gen gen(26);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = gen.matrix(gen.integer(1, 8), gen.integer(1, 8));
    const auto dec = svd(f);
    const double t = gen.uniform(0.0, 1.0), T = 1.0 + t;
    const auto q = [&](double l) { return q_filter(t, T, l); };
    const Matrix left = f.transpose() * apply_spectral_function(dec, q, Side::left);
    const Matrix right = apply_spectral_function(dec, q, Side::right) * f.transpose();
    EXPECT_LE((left - right).norm(), 1e-10);
  }
}

TEST(StaticFilter, RejectsBadInput) {
  StaticProblem p = scalar_problem(1.0, 1.0, 0.0);
  EXPECT_THROW(static_filter_solve(p, -1.0), InvalidArgument);
  p.data = Vector::Ones(2);
  EXPECT_THROW(static_filter_solve(p, 1.0), InvalidArgument);
}

TEST(RiccatiOde, ScalarMatchesTanh) {
  const auto traj = riccati_ode_solve(Matrix::Identity(1, 1), 3.0, 300);
  ASSERT_EQ(traj.steps(), 300);
  EXPECT_EQ(traj.values.back()(0, 0), 0.0);
  for (int j = 0; j <= traj.steps(); ++j) {
    EXPECT_NEAR(traj.values[j](0, 0), std::tanh(3.0 - traj.times[j]), 1e-9);
  }
}

TEST(RiccatiOde, ZeroOperatorIsLinearInTime) {
  const auto traj = riccati_ode_solve(Matrix::Zero(3, 3), 2.0, 16);
  for (int j = 0; j <= traj.steps(); ++j) {
    const Matrix expect = (2.0 - traj.times[j]) * Matrix::Identity(3, 3);
    EXPECT_LE((traj.values[j] - expect).norm(), 1e-14);
  }
}

TEST(RiccatiOde, SpectrumBoundAndSymmetry) {
  for (int trial = 0; trial < 10; ++trial) {
    oracle::Gen gen(27, trial);
    const Index m = gen.integer(1, 16), n = gen.integer(1, 16);
    const Matrix f = gen.matrix(m, n) / std::sqrt(double(m));
    const double T = gen.uniform(0.5, 5.0);
    const auto traj = riccati_ode_solve(f, T, 400);
    const double norm = f.operatorNorm();
    for (int j = 0; j <= traj.steps(); ++j) {
      const double s = T - traj.times[j];
      const Matrix& q = traj.values[j];
      EXPECT_EQ((q - q.transpose()).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_GE(min_eigenvalue(q), std::tanh(s * norm) / norm - 1e-6);
      EXPECT_LE(max_eigenvalue(q), s + 1e-6);
    }
  }
}

TEST(RiccatiOde, BlowUpReportsStep) {
  // Huge entries overflow the quadratic term on the first step.
  try {
    riccati_ode_solve(Matrix::Constant(2, 2, 1e160), 1.0, 4);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_TRUE(e.step().has_value());
  }
  EXPECT_THROW(riccati_ode_solve(Matrix::Identity(1, 1), 1.0, 0), InvalidArgument);
}

TEST(EvolveU, StationaryForConsistentData) {
  oracle::Gen gen(28);
  const Matrix f = gen.matrix(4, 3);
  const Vector u0 = gen.vector(3);
  StaticProblem p{f, f * u0, u0, 0.0};
  const auto traj = riccati_ode_solve(f, 2.0, 50);
  EXPECT_LE((evolve_u(p, traj, 2.0).solution - u0).norm(), 1e-13);
}

TEST(EvolveU, ZeroOperatorKeepsInitialGuess) {
  oracle::Gen gen(29);
  StaticProblem p{Matrix::Zero(2, 3), gen.vector(2), gen.vector(3), 0.0};
  const auto traj = riccati_ode_solve(p.forward, 1.0, 10);
  EXPECT_EQ(evolve_u(p, traj, 1.0).solution, p.initial_guess);
}

TEST(EvolveU, ScalarAgreesWithSpectral) {
  const auto p = scalar_problem(1.0, 1.0, 0.0);
  const auto traj = riccati_ode_solve(p.forward, 3.0, 200);
  const auto r = evolve_u(p, traj, 3.0);
  EXPECT_EQ(r.method, FilterMethod::riccati_ode);
  EXPECT_NEAR(r.solution(0), static_filter_solve(p, 3.0).solution(0), 1e-6);
}

TEST(EvolveU, RejectsMismatchedTrajectory) {
  const auto p = scalar_problem(1.0, 1.0, 0.0);
  const auto traj = riccati_ode_solve(p.forward, 3.0, 20);
  EXPECT_THROW(evolve_u(p, traj, 2.0), InvalidArgument);
  const auto other = riccati_ode_solve(Matrix::Constant(1, 1, 2.0), 3.0, 20);
  EXPECT_THROW(evolve_u(p, other, 3.0), InvalidArgument);
}

TEST(EvolveU, FourthOrderConvergence) {
  oracle::Gen gen(30);
  const Matrix f = gen.matrix(3, 3) / std::sqrt(3.0);
  StaticProblem p{f, gen.vector(3), gen.vector(3), 0.0};
  const Vector exact = static_filter_solve(p, 2.0).solution;
  const double e1 = (evolve_u(p, riccati_ode_solve(f, 2.0, 10), 2.0).solution - exact).norm();
  const double e2 = (evolve_u(p, riccati_ode_solve(f, 2.0, 20), 2.0).solution - exact).norm();
  EXPECT_GT(e1 / e2, 12.0);
}

TEST(ChooseT, Examples) {
  EXPECT_EQ(choose_T(1.0, 0.7), 1.0);
  EXPECT_NEAR(choose_T(1e-3, 0.5), std::pow(10.0, 1.5), 1e-12);
  EXPECT_NEAR(choose_T(1e-4, 1.0, 2.0), 2.0 * std::pow(10.0, 4.0 / 3.0), 1e-11);
  EXPECT_THROW(choose_T(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(choose_T(0.1, 0.0), InvalidArgument);
}

TEST(SourceCondition, ConstructionIdentity) {
  const auto inst = SourceConditionInstance::geometric(50, 1e-3, 0.75);
  const Vector expect = inst.singular_values.array().square().pow(0.75).matrix()
                            .cwiseProduct(inst.omega);
  EXPECT_LE((inst.u_dagger - expect).norm(), 1e-15);
  EXPECT_LE((inst.forward() * inst.u_dagger - inst.y_exact).norm(), 1e-15);
  EXPECT_NEAR(inst.omega.norm(), 1.0, 1e-15);
  EXPECT_NEAR(inst.singular_values.minCoeff(), 1e-3, 1e-15);
}

TEST(RateStudy, NoiseFreeErrorBoundedByTPowerMinus2Mu) {
  const auto inst = SourceConditionInstance::geometric(200, 1e-4, 1.0);
  const Matrix f = inst.forward();
  const auto dec = svd(f);
  for (double T : {5.0, 10.0, 20.0, 40.0}) {
    const double err =
        (static_filter_solve(inst.problem(inst.y_exact), dec, T).solution -
         inst.u_dagger).norm();
    // Filter bound sup_l l^mu sech(sqrt(l) T) <= C T^(-2 mu) with C = 2 for mu = 1.
    EXPECT_LE(err, 2.0 * std::pow(T, -2.0) * inst.omega.norm());
  }
}

TEST(RateStudy, SlopeNearBalancedExponent) {
  const auto inst = SourceConditionInstance::geometric(200, 1e-4, 0.5);
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  const auto study = rate_study(inst, deltas, 5);
  ASSERT_FALSE(study.saturated);
  EXPECT_NEAR(study.slope, 0.5, 0.15);
  ASSERT_EQ(study.rows.size(), 4u);
  for (const auto& row : study.rows) {
    EXPECT_EQ(row.final_time, choose_T(row.delta, 0.5));
  }
}

TEST(RateStudy, DeterministicAcrossThreadCounts) {
  const auto inst = SourceConditionInstance::geometric(100, 1e-3, 0.5);
  const std::vector<double> deltas{1e-1, 1e-2, 1e-2, 1e-3, 1e-4};
  const std::string a = to_csv(rate_study(inst, deltas, 9, 1.0, 1));
  const std::string b = to_csv(rate_study(inst, deltas, 9, 1.0, 3));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("delta,T,error\n", 0), 0u);
  EXPECT_NE(a.find("# slope="), std::string::npos);
}

TEST(RateStudy, Preconditions) {
  const auto inst = SourceConditionInstance::geometric(10, 1e-2, 0.5);
  const std::vector<double> few{1e-1, 1e-2, 1e-3};
  EXPECT_THROW(rate_study(inst, few, 1), InvalidArgument);
  const std::vector<double> narrow{1e-1, 5e-2, 3e-2, 2e-2};
  EXPECT_THROW(rate_study(inst, narrow, 1), InvalidArgument);
}

TEST(RateStudy, SaturatedWhenErrorsVanish) {
  // u_dagger = 0 and noise far below 1e-14 keep every error under the
  // saturation threshold.
  auto inst = SourceConditionInstance::make(Vector::Ones(3), Vector::Zero(3), 1.0);
  const std::vector<double> deltas{1e-20, 1e-21, 1e-22, 1e-23};
  const auto study = rate_study(inst, deltas, 3);
  EXPECT_TRUE(study.saturated);
  EXPECT_NE(to_csv(study).find("# slope=saturated"), std::string::npos);
}

TEST(LogLogSlope, RecoversPowerLaw) {
  const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-14);
}

}  // namespace
}  // namespace dynareg
