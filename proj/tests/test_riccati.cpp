#include <gtest/gtest.h>

#include <cmath>

#include "kric/errors.hpp"
#include "kric/oracle.hpp"
#include "kric/riccati.hpp"
#include "test_util.hpp"

using namespace kric;
using kric::testing::random_matrix;
using kric::testing::random_psd;

namespace {

struct MatrixProblem {
  std::shared_ptr<const MeasureAtoms> mu;
  LQCoefficients lq;
};

MatrixProblem matrix_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MatrixProblem p;
  p.mu = std::make_shared<const MeasureAtoms>(
      MeasureAtoms({0.0, 0.8, 2.0}, {random_matrix(rng, 2, 2), random_matrix(rng, 2, 2), random_matrix(rng, 2, 2)}, 2, 2));
  p.lq.B = random_matrix(rng, 2, 2, 0.5);
  p.lq.D = random_matrix(rng, 2, 2, 0.3);
  p.lq.C = random_matrix(rng, 2, 2);
  p.lq.F = random_matrix(rng, 2, 2, 0.3);
  p.lq.Q = random_psd(rng, 2, 0.2);
  p.lq.N = random_psd(rng, 2, 1.0);
  p.lq.lambda_margin = 0.5;
  return p;
}

KernelSlice symmetric_slice(std::mt19937_64& rng, std::size_t n, Eigen::Index d) {
  const Eigen::MatrixXd a = random_matrix(rng, static_cast<Eigen::Index>(n) * d, static_cast<Eigen::Index>(n) * d, 0.3);
  return dense_to_slice(a * a.transpose(), static_cast<Eigen::Index>(n), d);
}

}  // namespace

TEST(RiccatiRhs, AtZeroIsQ) {
  const MatrixProblem p = matrix_problem(1);
  KernelSlice zero(3, 2), out(3, 2);
  riccati_rhs(*p.mu, p.lq, zero, out, 0.25);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LT((out.block(j, k) - p.lq.Q).norm(), 1e-15);
  }
}

TEST(RiccatiRhs, ScalarBruteForce) {
  const auto mu = MeasureAtoms::scalar({0.2, 1.0}, {0.6, -0.3});
  const auto lq = LQCoefficients::scalar(0.3, 1.2, 0.2, 0.4, 1.0, 1.5, 0.5);
  KernelSlice g(2, 1);
  const double vals[2][2] = {{0.9, 0.2}, {0.2, 0.5}};
  for (int j = 0; j < 2; ++j) for (int k = 0; k < 2; ++k) g.at(j, k, 0, 0) = vals[j][k];
  KernelSlice out(2, 1);
  riccati_rhs(mu, lq, g, out, 0.25);
  const double w[2] = {0.6, -0.3};
  double u = 0.0, v[2] = {0, 0};
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      u += w[j] * vals[j][k] * w[k];
      v[k] += w[j] * vals[j][k];
    }
  }
  const double nh = 1.5 + 0.4 * 0.4 * u;
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      const double sj = 1.2 * v[j] + 0.4 * u * 0.2, sk = 1.2 * v[k] + 0.4 * u * 0.2;
      const double expect = 1.0 + 0.04 * u + 0.3 * v[k] + v[j] * 0.3 - sj * sk / nh;
      EXPECT_NEAR(out.at(j, k, 0, 0), expect, 1e-14);
    }
  }
}

TEST(RiccatiRhs, AgreesWithDenseAssembly) {
  const MatrixProblem p = matrix_problem(2);
  std::mt19937_64 rng(7);
  const KernelSlice g = symmetric_slice(rng, 3, 2);
  KernelSlice out(3, 2);
  riccati_rhs(*p.mu, p.lq, g, out, 0.25);
  const Eigen::MatrixXd dense = assemble_dense(*p.mu, p.lq).riccati_map(slice_to_dense(g));
  EXPECT_LT((slice_to_dense(out) - dense).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Feedback, SolvesTheCouplingEquation) {
  const MatrixProblem p = matrix_problem(3);
  std::mt19937_64 rng(8);
  const KernelSlice g = symmetric_slice(rng, 3, 2);
  const AtomMatrices th = theta_feedback(*p.mu, p.lq, g, 0.25);
  const SliceIntegrals si = slice_integrals(g, *p.mu);
  const Eigen::MatrixXd nh = nhat(*p.mu, p.lq, g);
  EXPECT_LT((nh - (p.lq.N + p.lq.F.transpose() * si.total * p.lq.F)).norm(), 1e-13);
  for (std::size_t k = 0; k < 3; ++k) {
    const Eigen::MatrixXd s = p.lq.C.transpose() * si.col.matrix(k) + p.lq.F.transpose() * si.total * p.lq.D;
    EXPECT_LT((s + nh * th.matrix(k)).norm(), 1e-12);
  }
  EXPECT_THROW(theta_feedback(*p.mu, p.lq, g, 1e6, 0.5), FeedbackFloorError);
}

TEST(Validate, RejectsInvalidCoefficients) {
  MatrixProblem p = matrix_problem(4);
  EXPECT_NO_THROW(p.lq.validate(*p.mu));
  LQCoefficients bad = p.lq;
  bad.Q(0, 1) += 1.0;
  EXPECT_THROW(bad.validate(*p.mu), ConfigError);
  bad = p.lq;
  bad.Q = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(bad.validate(*p.mu), ConfigError);
  bad = p.lq;
  bad.lambda_margin = 100.0;
  EXPECT_THROW(bad.validate(*p.mu), ConfigError);
  bad = p.lq;
  bad.B = Eigen::MatrixXd::Ones(3, 2);
  EXPECT_THROW(bad.validate(*p.mu), ConfigError);
}

TEST(Solve, ZeroCostGivesZeroSolution) {
  MatrixProblem p = matrix_problem(5);
  p.lq.Q.setZero();
  RiccatiSolveOptions o;
  o.lyapunov.time_steps = 50;
  const RiccatiSolution sol = solve_riccati_iterative(p.mu, p.lq, 1.0, o);
  EXPECT_EQ(sol.report.sup_l1_norm, 0.0);
  EXPECT_EQ(sol.theta.sup_norm(), 0.0);
  EXPECT_TRUE(sol.report.checks.all_passed());
}

TEST(Solve, ScalarDiracMatchesClosedForm) {
  const auto lq = LQCoefficients::scalar(0.5, 1.0, 0.0, 0.0, 1.0, 1.0, 0.5);
  const RiccatiSolution it = solve_riccati_iterative(kric::testing::dirac(0.0), lq, 1.0);
  const double err = std::abs(it.gamma.slice(0).at(0, 0, 0, 0) - 1.12915340943619273);
  EXPECT_LE(err, 10.0 * it.report.step_error_estimate);
  EXPECT_LE(err, 1e-6);
  EXPECT_TRUE(it.report.checks.all_passed());
}

TEST(Solve, FullScalarDiracMatchesAdaptiveIntegration) {
  const auto lq = LQCoefficients::scalar(0.3, 1.0, 0.2, 0.3, 1.0, 1.0, 0.5);
  RiccatiSolveOptions o;
  o.lyapunov.time_steps = 2000;
  for (bool direct : {false, true}) {
    const RiccatiSolution sol = direct ? solve_riccati_direct(kric::testing::dirac(1.0), lq, 1.0, o)
                                       : solve_riccati_iterative(kric::testing::dirac(1.0), lq, 1.0, o);
    EXPECT_NEAR(sol.gamma.slice(0).at(0, 0, 0, 0), 0.465362683213579, 1e-7) << sol.report.method;
  }
}

TEST(Solve, MatrixProblemIsSymmetricAndMonotone) {
  const MatrixProblem p = matrix_problem(6);
  RiccatiSolveOptions o;
  o.lyapunov.time_steps = 200;
  std::size_t calls = 0;
  o.on_iteration = [&](const IterationView& v) {
    EXPECT_EQ(v.index, calls);
    EXPECT_NE(v.gamma_next, nullptr);
    ++calls;
  };
  const RiccatiSolution sol = solve_riccati_iterative(p.mu, p.lq, 1.0, o);
  EXPECT_EQ(calls, sol.report.outer_iterations);
  const PropertyChecks& k = sol.report.checks;
  EXPECT_TRUE(k.all_passed());
  EXPECT_LE(k.symmetry_defect, 1e-10);
  EXPECT_GE(k.min_nhat_eigenvalue, p.lq.lambda_margin);
  EXPECT_LE(sol.report.differences.back(), sol.report.outer_tol);
  const RiccatiSolution dr = solve_riccati_direct(p.mu, p.lq, 1.0, o);
  EXPECT_LE(sup_l1_distance(sol.gamma, dr.gamma), 1e-8);
  EXPECT_EQ(dr.report.method, "direct");
}

TEST(Solve, ResidualAndEstimate) {
  const auto mu = kric::testing::fractional_measure(0.1, 20);
  RiccatiSolveOptions o;
  o.lyapunov.time_steps = 200;
  const RiccatiSolution sol = solve_riccati_iterative(mu, kric::testing::fractional_lq(), 1.0, o);
  EXPECT_LE(riccati_mild_residual(sol.gamma, kric::testing::fractional_lq(), 0.25), 1e-10);
  const double m = estimate_report(sol.gamma);
  EXPECT_DOUBLE_EQ(m, sol.report.estimate_m);
  double brute = 0.0;
  for (std::size_t s = 0; s <= sol.gamma.steps(); ++s) brute = std::max(brute, row_bound(sol.gamma.slice(s), *mu));
  EXPECT_NEAR(m, brute, 1e-12);
}

TEST(Solve, DeltaIdentityHoldsOnConsecutiveIterates) {
  const MatrixProblem p = matrix_problem(7);
  RiccatiSolveOptions o;
  o.lyapunov.time_steps = 200;
  std::vector<double> residuals;
  o.on_iteration = [&](const IterationView& v) {
    const DeltaResidual d = delta_residual(p.lq, *v.gamma, *v.gamma_next, v.theta_prev, o.lyapunov);
    EXPECT_LE(d.coupling_defect, 1e-10);
    residuals.push_back(d.residual / (1.0 + d.delta_sup_l1));
  };
  solve_riccati_iterative(p.mu, p.lq, 1.0, o);
  ASSERT_FALSE(residuals.empty());
  for (double r : residuals) EXPECT_LE(r, 1e-9);
}

TEST(Checks, DetectsBrokenFields) {
  auto mu = kric::testing::dirac(0.0);
  KernelField f(mu, TimeGrid{1.0, 4});
  f.slice(4).at(0, 0, 0, 0) = 1.0;
  EXPECT_FALSE(check_solution(f).terminal_zero);
  KernelField g(mu, TimeGrid{1.0, 4});
  g.slice(1).at(0, 0, 0, 0) = -1.0;
  const PropertyChecks k = check_solution(g);
  EXPECT_FALSE(k.psd_ok);
  EXPECT_FALSE(k.all_passed());
}
