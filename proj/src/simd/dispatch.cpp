#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kric/simd/kernels.hpp"

namespace kric::simd {
namespace {

Isa detect() {
  if (const char* env = std::getenv("KRIC_ISA")) {
    if (std::string_view(env) == "scalar") return Isa::scalar;
  }
  return cpu_supports_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool cpu_supports_avx2() {
#if defined(KRIC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& kernels() {
#if defined(KRIC_HAVE_AVX2)
  if (current().load(std::memory_order_relaxed) == Isa::avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool set_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_supports_avx2()) {
    current().store(Isa::scalar);
    return false;
  }
  current().store(isa);
  return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace kric::simd
