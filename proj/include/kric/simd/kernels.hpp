#pragma once

// Elementwise and reduction kernels used by the kernel-field inner loops.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled into a separate translation unit and selected at
// runtime when the CPU reports both features. Reductions in the vector
// variants use a different summation order than the scalar ones, so the two
// agree to round-off, not bitwise. Within one process the selection is fixed,
// which keeps results reproducible run to run.

#include <cstddef>
#include <span>
#include <string_view>

namespace kric::simd {

enum class Isa { scalar, avx2 };

/// Kernel table. All spans passed to one call must have equal length except
/// where noted.
struct KernelTable {
  // out = decay * prev + 0.5 * weight * (f0 + f1)
  void (*exp_step)(std::span<const double> decay, std::span<const double> weight,
                   std::span<const double> prev, std::span<const double> f0,
                   std::span<const double> f1, std::span<double> out);
  // y += a * x
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);
  // sum x_i y_i
  double (*dot)(std::span<const double> x, std::span<const double> y);
  // sum w_i |x_i|
  double (*weighted_abs_sum)(std::span<const double> w, std::span<const double> x);
  // acc += x * x
  void (*square_accumulate)(std::span<const double> x, std::span<double> acc);
  // max |x_i - y_i|
  double (*max_abs_diff)(std::span<const double> x, std::span<const double> y);
};

const KernelTable& scalar_kernels();
#if defined(KRIC_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

/// True when the running CPU can execute the AVX2 table.
bool cpu_supports_avx2();

/// The table currently used by the library.
const KernelTable& kernels();
Isa active_isa();

/// Forces a particular table. Requesting avx2 on a CPU without it, or in a
/// build without the AVX2 unit, leaves the scalar table active and returns
/// false.
bool set_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace kric::simd
