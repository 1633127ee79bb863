#pragma once

// Data-parallel inner loops used by the dense matrix layer and the
// optimizers. Every kernel has a portable scalar reference; vector variants
// (AVX2+FMA on x86-64, NEON on AArch64) are picked once at runtime.
//
// The active table can be overridden with KRONOPT_SIMD=scalar|avx2|neon|auto
// or programmatically through select_isa(). Element-wise kernels are bitwise
// identical across variants; reductions and gemm differ only by summation
// order / fused rounding.

#include <cstddef>
#include <string_view>

namespace kronopt::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y <- a*y + b*x
  void (*axpby)(double* y, double a, const double* x, double b, std::size_t n);
  // d <- beta*d + (1-beta)*g*g
  void (*square_ema)(double* d, const double* g, double beta, std::size_t n);
  // u <- -g / (sqrt(d) + eps), and u = 0 wherever g == 0
  void (*adam_divide)(double* u, const double* g, const double* d, double eps, std::size_t n);
  // C(m x n) <- A(m x k) * B(k x n), all row-major and densely packed
  void (*gemm)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n);
};

bool isa_supported(Isa isa);

/// Best variant the running CPU supports.
Isa detect_isa();

/// Table for a specific variant; throws std::invalid_argument if the CPU
/// (or this build) lacks it.
const KernelTable& kernels_for(Isa isa);

/// Currently active table.
const KernelTable& kernels();

void select_isa(Isa isa);

namespace detail {
extern const KernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable avx2_table;
#endif
#if defined(__aarch64__)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace kronopt::simd
