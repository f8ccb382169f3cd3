#include <gtest/gtest.h>

#include <cmath>

#include "kric/errors.hpp"
#include "kric/lyapunov.hpp"
#include "test_util.hpp"

using namespace kric;

namespace {

Eigen::MatrixXd m11(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

std::shared_ptr<const MeasureAtoms> two_atoms() {
  return std::make_shared<const MeasureAtoms>(MeasureAtoms::scalar({0.5, 2.0}, {0.7, 0.4}));
}

double form_at_zero(const KernelField& f) {
  TestFunction phi{Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(f.n()), 1)};
  return quadratic_form(f.slice(0), f.measure(), phi);
}

}  // namespace

TEST(Lyapunov, PureSourceMatchesClosedFormIncludingZeroNode) {
  auto mu = std::make_shared<const MeasureAtoms>(MeasureAtoms::scalar({0.0, 0.7, 2.5}, {1.0, 0.5, 2.0}));
  const double q = 1.3, T = 1.0;
  const auto c = LyapunovCoefficients::constant(3, m11(q), m11(0.0), m11(0.0));
  LyapunovSolveOptions o;
  o.time_steps = 500;
  const LyapunovSolution sol = solve_lyapunov(mu, c, T, o);
  double worst = 0.0;
  for (std::size_t s = 0; s <= o.time_steps; ++s) {
    const double tau = T - sol.field.grid().time(s);
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        const double x = mu->node(j) + mu->node(k);
        const double exact = x == 0.0 ? q * tau : q * (1.0 - std::exp(-x * tau)) / x;
        worst = std::max(worst, std::abs(sol.field.slice(s).at(j, k, 0, 0) - exact));
      }
    }
  }
  EXPECT_LE(worst, 1e-10);
  EXPECT_TRUE(sol.field.slice(o.time_steps).is_zero());
}

TEST(Lyapunov, MatrixSourceClosedForm) {
  Eigen::MatrixXd w(2, 2);
  w << 1.0, 0.2, -0.3, 0.5;
  auto mu = std::make_shared<const MeasureAtoms>(MeasureAtoms({0.0, 1.0}, {w, 2.0 * w}, 2, 2));
  Eigen::MatrixXd q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  const auto c = LyapunovCoefficients::constant(2, q, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2));
  const LyapunovSolution sol = solve_lyapunov(mu, c, 2.0, {});
  const Eigen::MatrixXd got = sol.field.slice(0).block(1, 1);
  EXPECT_LT((got - q * (1.0 - std::exp(-4.0)) / 2.0).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((sol.field.slice(0).block(0, 0) - 2.0 * q).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lyapunov, SingleAtomDriftHasExponentialSolution) {
  // theta = 1.5, w = 0.8, Qt = 2, Bt = 0.3: the effective rate is 2 theta - 2 Bt w.
  auto mu = kric::testing::dirac(1.5, 0.8);
  const auto c = LyapunovCoefficients::constant(1, m11(2.0), m11(0.3), m11(0.0));
  const LyapunovSolution sol = solve_lyapunov(mu, c, 1.0, {});
  const double exact = 0.729793962897196;
  const double err = std::abs(sol.field.slice(0).at(0, 0, 0, 0) - exact);
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(err, 10.0 * sol.report.step_error_estimate);
  EXPECT_LT(sol.report.residual, 1e-12);
}

TEST(Lyapunov, TwoAtomsAgainstIndependentOde) {
  // Reference from an adaptive Dormand-Prince integration of the 2 x 2 system.
  const double reference = 0.779688621337795;
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.4), m11(0.0));
  double prev_err = 1.0;
  for (std::size_t steps : {250u, 500u, 1000u, 2000u}) {
    LyapunovSolveOptions o;
    o.time_steps = steps;
    const LyapunovSolution sol = solve_lyapunov(two_atoms(), c, 1.0, o);
    const double err = std::abs(form_at_zero(sol.field) - reference);
    EXPECT_LE(err, 10.0 * sol.report.step_error_estimate) << steps;
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1e-7);
}

TEST(Lyapunov, DiffusionTermEntersThroughU) {
  // Single atom at 0 with w = 1: psi' = -(q + (2 b + d^2) psi), psi(T) = 0.
  const double q = 1.0, b = 0.25, dd = 0.6, T = 1.0, r = 2 * b + dd * dd;
  const auto c = LyapunovCoefficients::constant(1, m11(q), m11(b), m11(dd));
  const LyapunovSolution sol = solve_lyapunov(kric::testing::dirac(0.0), c, T, {});
  EXPECT_NEAR(sol.field.slice(0).at(0, 0, 0, 0), q * (std::exp(r * T) - 1.0) / r, 1e-6);
}

TEST(Lyapunov, PicardAgreesWithExponentialIntegrator) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.4), m11(0.5));
  LyapunovSolveOptions o;
  o.time_steps = 400;
  const LyapunovSolution ei = solve_lyapunov(two_atoms(), c, 1.0, o);
  o.method = LyapunovMethod::picard_contraction;
  const LyapunovSolution pc = solve_lyapunov(two_atoms(), c, 1.0, o);
  EXPECT_EQ(pc.report.method, LyapunovMethod::picard_contraction);
  EXPECT_GT(pc.report.iterations, 1u);
  EXPECT_LE(sup_l1_distance(ei.field, pc.field), 1e-9);
}

TEST(Picard, DefaultWeightContracts) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.8), m11(0.6));
  auto mu = two_atoms();
  const TimeGrid grid{1.0, 200};
  const double lambda = default_picard_lambda(c, *mu, grid);
  // 4 kappa (1 + |Kbar|_1 + |Kbar|_2^2) with kappa = max(|Bt|, |Dt|^2).
  const double kappa = std::max(0.8, 0.36);
  EXPECT_NEAR(lambda, 4.0 * kappa * (1.0 + bar_kernel_l1(*mu, 1.0) + bar_kernel_l2_squared(*mu, 1.0)), 1e-12);
  const PicardResult r = picard_iterate(mu, c, 1.0, lambda, 1e-12, 500, 200);
  EXPECT_TRUE(r.trace.converged);
  for (double ratio : r.trace.ratios) EXPECT_LT(ratio, 1.0);
}

TEST(Picard, LambdaSweepGivesSmallerRatiosForLargerWeights) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.8), m11(0.6));
  double prev = 2.0;
  for (double lambda : {2.0, 8.0, 32.0}) {
    const PicardResult r = picard_iterate(two_atoms(), c, 1.0, lambda, 1e-12, 500, 200, false);
    ASSERT_GE(r.trace.ratios.size(), 2u);
    const double first = r.trace.ratios.front();
    EXPECT_LT(first, prev);
    prev = first;
  }
}

TEST(Picard, UnweightedNormExpandsAndReportsIt) {
  const auto c = LyapunovCoefficients::constant(1, m11(1.0), m11(3.0), m11(0.0));
  try {
    picard_iterate(kric::testing::dirac(0.0), c, 1.0, 0.0, 1e-12, 500, 100, true);
    FAIL() << "expected NonContractionError";
  } catch (const NonContractionError& e) {
    EXPECT_GT(e.suggested_lambda(), 0.0);
  }
  // Without the early abort the iteration still converges (Volterra structure).
  const PicardResult r = picard_iterate(kric::testing::dirac(0.0), c, 1.0, 0.0, 1e-12, 500, 100, false);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_GE(r.trace.ratios.front(), 1.0);
}

TEST(Picard, ExhaustedIterationsThrow) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.8), m11(0.6));
  EXPECT_THROW(picard_iterate(two_atoms(), c, 1.0, 4.0, 1e-14, 3, 100), ConvergenceError);
}

TEST(Lyapunov, ContinuityAndUPath) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), m11(0.4), m11(0.3));
  LyapunovSolveOptions o;
  o.time_steps = 100;
  const LyapunovSolution sol = solve_lyapunov(two_atoms(), c, 1.0, o);
  const auto mod = continuity_modulus(sol.field);
  ASSERT_EQ(mod.size(), 100u);
  for (double x : mod) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 0.1);
  }
  const auto u = double_integral_path(sol.field);
  ASSERT_EQ(u.size(), 101u);
  EXPECT_EQ(u.back()(0, 0), 0.0);
  EXPECT_NEAR(u.front()(0, 0), form_at_zero(sol.field), 1e-14);
  for (std::size_t s = 1; s < u.size(); ++s) EXPECT_LE(u[s](0, 0), u[s - 1](0, 0));
}

TEST(Lyapunov, ShapeMismatchIsAConfigError) {
  const auto c = LyapunovCoefficients::constant(2, m11(1.0), Eigen::MatrixXd::Ones(2, 2), m11(0.0));
  EXPECT_THROW(solve_lyapunov(two_atoms(), c, 1.0, {}), ConfigError);
  EXPECT_THROW(lyapunov_method_from_string("rk4"), ConfigError);
  EXPECT_EQ(lyapunov_method_from_string("picard"), LyapunovMethod::picard_contraction);
}

TEST(Lyapunov, TimeDependentSourceUsesCallbackTime) {
  // Qt_t = t on a single atom at 0: psi_0 = int_0^1 s ds = 1/2.
  LyapunovCoefficients c;
  c.qtilde = [](double t, KernelSlice& out) { out.at(0, 0, 0, 0) = t; };
  c.symmetric = true;
  LyapunovSolveOptions o;
  o.time_steps = 64;
  const LyapunovSolution sol = solve_lyapunov(kric::testing::dirac(0.0), c, 1.0, o);
  EXPECT_NEAR(sol.field.slice(0).at(0, 0, 0, 0), 0.5, 1e-13);
}
