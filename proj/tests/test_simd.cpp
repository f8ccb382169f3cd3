#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kric/simd/kernels.hpp"

using namespace kric::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
#if defined(KRIC_HAVE_AVX2)
    if (!cpu_supports_avx2()) GTEST_SKIP() << "CPU lacks AVX2/FMA";
#else
    GTEST_SKIP() << "built without the AVX2 unit";
#endif
  }
};

}  // namespace

#if defined(KRIC_HAVE_AVX2)

TEST_P(KernelEquivalence, ExpStepMatchesScalar) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n);
  const auto decay = random_vector(rng, n), weight = random_vector(rng, n), prev = random_vector(rng, n),
             f0 = random_vector(rng, n), f1 = random_vector(rng, n);
  std::vector<double> a(n), b(n);
  scalar_kernels().exp_step(decay, weight, prev, f0, f1, a);
  avx2_kernels().exp_step(decay, weight, prev, f0, f1, b);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-14 * (1.0 + std::abs(a[i])));
}

TEST_P(KernelEquivalence, AxpyMatchesScalar) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 1);
  const auto x = random_vector(rng, n);
  auto y1 = random_vector(rng, n);
  auto y2 = y1;
  scalar_kernels().axpy(0.37, x, y1);
  avx2_kernels().axpy(0.37, x, y2);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * (1.0 + std::abs(y1[i])));
}

TEST_P(KernelEquivalence, ReductionsMatchScalar) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 2);
  const auto x = random_vector(rng, n), y = random_vector(rng, n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::abs(y[i]);
  const double tol = 1e-13 * static_cast<double>(n + 1);
  EXPECT_NEAR(scalar_kernels().dot(x, y), avx2_kernels().dot(x, y), tol);
  EXPECT_NEAR(scalar_kernels().weighted_abs_sum(w, x), avx2_kernels().weighted_abs_sum(w, x), tol);
  EXPECT_EQ(scalar_kernels().max_abs_diff(x, y), avx2_kernels().max_abs_diff(x, y));
}

TEST_P(KernelEquivalence, SquareAccumulateMatchesScalar) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 3);
  const auto x = random_vector(rng, n);
  auto acc1 = random_vector(rng, n);
  auto acc2 = acc1;
  scalar_kernels().square_accumulate(x, acc1);
  avx2_kernels().square_accumulate(x, acc2);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(acc1[i], acc2[i], 1e-15 * (1.0 + std::abs(acc1[i])));
}

#endif

// Lengths around the vector width, including the empty and remainder cases.
INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence,
                         ::testing::Values(0, 1, 3, 4, 5, 7, 8, 9, 16, 17, 1000, 1603));

TEST(Kernels, ScalarReferenceValues) {
  const std::vector<double> decay{0.5, 1.0}, weight{2.0, 4.0}, prev{1.0, -1.0}, f0{1.0, 1.0},
      f1{3.0, 0.0};
  std::vector<double> out(2);
  scalar_kernels().exp_step(decay, weight, prev, f0, f1, out);
  EXPECT_DOUBLE_EQ(out[0], 0.5 + 4.0);
  EXPECT_DOUBLE_EQ(out[1], -1.0 + 2.0);
  EXPECT_DOUBLE_EQ(scalar_kernels().dot(prev, f1), 3.0);
  EXPECT_DOUBLE_EQ(scalar_kernels().weighted_abs_sum(weight, prev), 6.0);
  EXPECT_DOUBLE_EQ(scalar_kernels().max_abs_diff(f0, f1), 2.0);
}

TEST(Dispatch, ForcingScalarIsHonoured) {
  const Isa before = active_isa();
  EXPECT_TRUE(set_isa(Isa::scalar));
  EXPECT_EQ(active_isa(), Isa::scalar);
  EXPECT_EQ(&kernels(), &scalar_kernels());
  if (cpu_supports_avx2()) {
    EXPECT_TRUE(set_isa(Isa::avx2));
    EXPECT_EQ(active_isa(), Isa::avx2);
  } else {
    EXPECT_FALSE(set_isa(Isa::avx2));
    EXPECT_EQ(active_isa(), Isa::scalar);
  }
  set_isa(before);
  EXPECT_EQ(isa_name(Isa::avx2), "avx2");
}
