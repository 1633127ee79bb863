#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kronopt/simd/kernels.hpp"

namespace kronopt::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(to_string(isa)));
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return detail::avx2_table;
#endif
#if defined(__aarch64__)
    case Isa::neon: return detail::neon_table;
#endif
    default: return detail::scalar_table;
  }
}

namespace {

Isa initial_isa() {
  const char* env = std::getenv("KRONOPT_SIMD");
  if (env == nullptr) return detect_isa();
  const std::string v(env);
  if (v == "scalar") return Isa::scalar;
  if (v == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  if (v == "neon" && isa_supported(Isa::neon)) return Isa::neon;
  return detect_isa();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{&kernels_for(initial_isa())};
  return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void select_isa(Isa isa) { active().store(&kernels_for(isa), std::memory_order_release); }

}  // namespace kronopt::simd
