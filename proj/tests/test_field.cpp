#include <gtest/gtest.h>

#include <random>

#include "kric/errors.hpp"
#include "kric/field.hpp"
#include "test_util.hpp"

using namespace kric;
using kric::testing::random_matrix;

namespace {

struct Fixture {
  MeasureAtoms mu;
  KernelSlice g;
};

// Random measure with d = 2, d' = 3 and a random (non-symmetric) slice.
Fixture random_fixture(std::uint64_t seed, std::size_t n = 4) {
  std::mt19937_64 rng(seed);
  std::vector<double> nodes;
  std::vector<Eigen::MatrixXd> w;
  for (std::size_t k = 0; k < n; ++k) {
    nodes.push_back(0.3 * static_cast<double>(k));
    w.push_back(random_matrix(rng, 2, 3));
  }
  Fixture f{MeasureAtoms(nodes, w, 2, 3), KernelSlice(n, 2)};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) f.g.set_block(j, k, random_matrix(rng, 2, 2));
  }
  return f;
}

// Gamma(j,k) = a_j a_k^T with a_j in R^{d x r}: symmetric and mu-nonnegative.
KernelSlice psd_slice(std::mt19937_64& rng, std::size_t n, Eigen::Index d) {
  std::vector<Eigen::MatrixXd> a;
  for (std::size_t k = 0; k < n; ++k) a.push_back(random_matrix(rng, d, 3));
  KernelSlice g(n, d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) g.set_block(j, k, a[j] * a[k].transpose());
  }
  return g;
}

}  // namespace

TEST(TimeGrid, EndpointsAndNearest) {
  TimeGrid g{2.0, 8};
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_EQ(g.time(8), 2.0);
  EXPECT_EQ(g.nearest_index(0.0), 0u);
  EXPECT_EQ(g.nearest_index(0.3), 1u);
  EXPECT_EQ(g.nearest_index(5.0), 8u);
  EXPECT_EQ(g.times().size(), 9u);
}

TEST(KernelSlice, BlocksRoundTripThroughPlanes) {
  KernelSlice s(3, 2);
  Eigen::MatrixXd b(2, 2);
  b << 1, 2, 3, 4;
  s.set_block(1, 2, b);
  EXPECT_EQ(s.block(1, 2), b);
  EXPECT_EQ(s.plane(0, 1)[1 * 3 + 2], 2.0);
  EXPECT_EQ(s.plane(1, 0)[1 * 3 + 2], 3.0);
  EXPECT_FALSE(s.is_zero());
  s.set_zero();
  EXPECT_TRUE(s.is_zero());
}

TEST(KernelSlice, ArithmeticAndOuter) {
  KernelSlice a = KernelSlice::constant(2, Eigen::MatrixXd::Identity(2, 2));
  KernelSlice b = a;
  b *= 3.0;
  const KernelSlice c = b - a;
  EXPECT_DOUBLE_EQ(c.at(1, 0, 1, 1), 2.0);
  EXPECT_DOUBLE_EQ(c.at(1, 0, 0, 1), 0.0);
  const std::vector<double> x{1.0, 2.0}, y{3.0, 5.0};
  KernelSlice o(2, 2);
  o.add_outer(0, 1, x, y);
  EXPECT_DOUBLE_EQ(o.at(1, 1, 0, 1), 10.0);
  EXPECT_DOUBLE_EQ(o.max_abs(), 10.0);
}

TEST(SliceIntegrals, MatchBruteForce) {
  const Fixture f = random_fixture(11);
  const std::size_t n = f.mu.size();
  const SliceIntegrals si = slice_integrals(f.g, f.mu);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t k = 0; k < n; ++k) {
    Eigen::MatrixXd col = Eigen::MatrixXd::Zero(3, 2), row = Eigen::MatrixXd::Zero(2, 3);
    for (std::size_t j = 0; j < n; ++j) {
      col += f.mu.weight(j).transpose() * f.g.block(j, k);
      row += f.g.block(k, j) * f.mu.weight(j);
      total += f.mu.weight(j).transpose() * f.g.block(j, k) * f.mu.weight(k);
    }
    EXPECT_LT((si.col.matrix(k) - col).norm(), 1e-13);
    EXPECT_LT((si.row.matrix(k) - row).norm(), 1e-13);
  }
  EXPECT_LT((si.total - total).norm(), 1e-12);
  EXPECT_LT((double_integral(f.g, f.mu) - total).norm(), 1e-12);
}

TEST(Norms, MatchBruteForce) {
  const Fixture f = random_fixture(12);
  const std::size_t n = f.mu.size();
  double l1 = 0.0, rb = 0.0, cb = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double r = 0.0, c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      l1 += f.mu.weight(j).norm() * f.g.block(j, k).norm() * f.mu.weight(k).norm();
      r += f.mu.weight(k).norm() * f.g.block(j, k).norm();
      c += f.mu.weight(k).norm() * f.g.block(k, j).norm();
    }
    rb = std::max(rb, r);
    cb = std::max(cb, c);
  }
  EXPECT_NEAR(l1_norm(f.g, f.mu), l1, 1e-12);
  EXPECT_NEAR(row_bound(f.g, f.mu), rb, 1e-12);
  EXPECT_NEAR(col_bound(f.g, f.mu), cb, 1e-12);
  KernelSlice zero(n, 2);
  EXPECT_NEAR(l1_distance(f.g, zero, f.mu), l1, 1e-12);
}

TEST(Operators, QuadraticFormIsPairingWithOperator) {
  const Fixture f = random_fixture(13);
  std::mt19937_64 rng(5);
  TestFunction phi{random_matrix(rng, 4, 3)};
  const TestFunction gphi = apply_operator(f.g, f.mu, phi);
  ASSERT_EQ(gphi.dim(), 2);
  EXPECT_NEAR(quadratic_form(f.g, f.mu, phi), dual_pairing(phi, gphi, f.mu), 1e-12);
  // Brute force of <phi, G phi>.
  double q = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      const Eigen::VectorXd pj = phi.values.row(static_cast<Eigen::Index>(j)).transpose();
      const Eigen::VectorXd pk = phi.values.row(static_cast<Eigen::Index>(k)).transpose();
      q += pj.dot(f.mu.weight(j).transpose() * f.g.block(j, k) * f.mu.weight(k) * pk);
    }
  }
  EXPECT_NEAR(quadratic_form(f.g, f.mu, phi), q, 1e-12);
  TestFunction bad{Eigen::MatrixXd::Ones(3, 3)};
  EXPECT_THROW(apply_operator(f.g, f.mu, bad), ConfigError);
}

TEST(Positivity, FactorizedKernelIsNonnegative) {
  std::mt19937_64 rng(21);
  const Fixture f = random_fixture(14, 5);
  const KernelSlice g = psd_slice(rng, 5, 2);
  EXPECT_LT(symmetric_defect(g), 1e-14);
  const PsdCheckResult r = check_symmetric_nonnegative(g, f.mu, default_psd_tolerance(g, f.mu));
  EXPECT_TRUE(r.passed);
  EXPECT_GE(r.min_eigenvalue, -1e-12);
  const Eigen::MatrixXd gram = gram_matrix(g, f.mu);
  EXPECT_EQ(gram.rows(), 15);
  EXPECT_LT((gram - gram.transpose()).norm(), 1e-14);
}

TEST(Positivity, NegativeKernelFails) {
  std::mt19937_64 rng(22);
  const Fixture f = random_fixture(15, 3);
  KernelSlice g = psd_slice(rng, 3, 2);
  g *= -1.0;
  EXPECT_FALSE(check_symmetric_nonnegative(g, f.mu, 1e-10).passed);
  const Fixture r = random_fixture(16, 3);
  EXPECT_GT(symmetric_defect(r.g), 1e-3);
  EXPECT_FALSE(check_symmetric_nonnegative(r.g, r.mu, 1e-10).passed);
}

TEST(Positivity, CauchySchwarzHoldsOnNonnegativeKernels) {
  std::mt19937_64 rng(23);
  const Fixture f = random_fixture(17, 6);
  const KernelSlice g = psd_slice(rng, 6, 2);
  const CauchySchwarzResult cs = cauchy_schwarz_check(g, f.mu, 1000, 99);
  EXPECT_EQ(cs.trials, 1000u);
  EXPECT_LE(cs.max_relative_violation, 1e-10);
  // An indefinite symmetric kernel violates it.
  KernelSlice h(6, 2);
  for (std::size_t j = 0; j < 6; ++j) h.set_block(j, j, (j % 2 ? -1.0 : 1.0) * Eigen::MatrixXd::Identity(2, 2));
  EXPECT_GT(cauchy_schwarz_check(h, f.mu, 1000, 99).max_relative_violation, 1e-3);
}

TEST(Field, OrderCompareAndDistances) {
  std::mt19937_64 rng(24);
  auto mu = std::make_shared<const MeasureAtoms>(random_fixture(18, 3).mu);
  KernelField a(mu, TimeGrid{1.0, 4}), b(mu, TimeGrid{1.0, 4});
  EXPECT_EQ(a.steps(), 4u);
  EXPECT_TRUE(a.slice(2).is_zero());
  a.slice(2) = psd_slice(rng, 3, 2);
  EXPECT_TRUE(order_compare(a, b, 2, 1e-10));
  EXPECT_FALSE(order_compare(b, a, 2, 1e-10));
  EXPECT_NEAR(sup_l1_distance(a, b), l1_norm(a, 2), 1e-12);
  KernelField c(mu, TimeGrid{1.0, 5});
  EXPECT_THROW(order_compare(a, c, 0, 1e-10), ConfigError);
}
