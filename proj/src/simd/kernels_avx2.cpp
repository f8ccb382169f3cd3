// AVX2/FMA variants. This unit is compiled with -mavx2 -mfma and must only be
// entered after cpu_supports_avx2() returned true.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kric/simd/kernels.hpp"

namespace kric::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d vabs(__m256d v) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign, v);
}

void exp_step(std::span<const double> decay, std::span<const double> weight,
              std::span<const double> prev, std::span<const double> f0,
              std::span<const double> f1, std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_loadu_pd(&decay[i]);
    const __m256d h = _mm256_mul_pd(half, _mm256_loadu_pd(&weight[i]));
    const __m256d p = _mm256_loadu_pd(&prev[i]);
    const __m256d f = _mm256_add_pd(_mm256_loadu_pd(&f0[i]), _mm256_loadu_pd(&f1[i]));
    _mm256_storeu_pd(&out[i], _mm256_fmadd_pd(h, f, _mm256_mul_pd(e, p)));
  }
  for (; i < n; ++i) {
    out[i] = decay[i] * prev[i] + 0.5 * weight[i] * (f0[i] + f1[i]);
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(&y[i]);
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), vy));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i + 4]), _mm256_loadu_pd(&y[i + 4]), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double weighted_abs_sum(std::span<const double> w, std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(&w[i]), vabs(_mm256_loadu_pd(&x[i])), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::abs(x[i]);
  return s;
}

void square_accumulate(std::span<const double> x, std::span<double> acc) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    _mm256_storeu_pd(&acc[i], _mm256_fmadd_pd(v, v, _mm256_loadu_pd(&acc[i])));
  }
  for (; i < n; ++i) acc[i] += x[i] * x[i];
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    m = _mm256_max_pd(m, vabs(_mm256_sub_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]))));
  }
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::abs(x[i] - y[i]));
  return r;
}

constexpr KernelTable kTable{&exp_step,         &axpy,
                             &dot,              &weighted_abs_sum,
                             &square_accumulate, &max_abs_diff};

}  // namespace

const KernelTable& avx2_kernels() { return kTable; }

}  // namespace kric::simd
