#include <algorithm>
#include <cmath>

#include "kric/simd/kernels.hpp"

namespace kric::simd {
namespace {

void exp_step(std::span<const double> decay, std::span<const double> weight,
              std::span<const double> prev, std::span<const double> f0,
              std::span<const double> f1, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = decay[i] * prev[i] + 0.5 * weight[i] * (f0[i] + f1[i]);
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double weighted_abs_sum(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) s += w[i] * std::abs(x[i]);
  return s;
}

void square_accumulate(std::span<const double> x, std::span<double> acc) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

constexpr KernelTable kTable{&exp_step,         &axpy,
                             &dot,              &weighted_abs_sum,
                             &square_accumulate, &max_abs_diff};

}  // namespace

const KernelTable& scalar_kernels() { return kTable; }

}  // namespace kric::simd
