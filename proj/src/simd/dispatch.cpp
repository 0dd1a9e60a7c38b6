#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gklab/simd/kernels.hpp"

namespace gk::simd {
namespace {

bool cpu_has_avx2() {
#if defined(GKLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("GKLAB_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &detail::scalar_table();
    if (want == "avx2" && supported(Isa::avx2)) return &table(Isa::avx2);
  }
  return supported(Isa::avx2) ? &table(Isa::avx2) : &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_choice()};
  return ptr;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out{Isa::scalar};
  if (supported(Isa::avx2)) out.push_back(Isa::avx2);
  return out;
}

const KernelTable& table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return detail::scalar_table();
    case Isa::avx2:
#if defined(GKLAB_HAVE_AVX2)
      if (supported(Isa::avx2)) return detail::avx2_table();
#endif
      break;
  }
  throw std::runtime_error("SIMD kernels not available on this CPU: " +
                           std::string(isa_name(isa)));
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace gk::simd
