// AArch64 only. Advanced SIMD is baseline there, so no feature probe is needed.

#include <arm_neon.h>

#include <cmath>
#include <cstring>

#include "kronopt/simd/kernels.hpp"

namespace kronopt::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

double sum_squares(const double* x, std::size_t n) { return dot(x, x, n); }

void axpby(double* y, double a, const double* x, double b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t ay = vmulq_n_f64(vld1q_f64(y + i), a);
    float64x2_t bx = vmulq_n_f64(vld1q_f64(x + i), b);
    vst1q_f64(y + i, vaddq_f64(ay, bx));
  }
  for (; i < n; ++i) {
    const double ay = a * y[i];
    const double bx = b * x[i];
    y[i] = ay + bx;
  }
}

void square_ema(double* d, const double* g, double beta, std::size_t n) {
  const double w = 1.0 - beta;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vg = vld1q_f64(g + i);
    float64x2_t sq = vmulq_f64(vg, vg);
    float64x2_t old = vmulq_n_f64(vld1q_f64(d + i), beta);
    vst1q_f64(d + i, vaddq_f64(old, vmulq_n_f64(sq, w)));
  }
  for (; i < n; ++i) {
    const double sq = g[i] * g[i];
    const double old = beta * d[i];
    const double fresh = w * sq;
    d[i] = old + fresh;
  }
}

void adam_divide(double* u, const double* g, const double* d, double eps, std::size_t n) {
  const float64x2_t veps = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vg = vld1q_f64(g + i);
    float64x2_t den = vaddq_f64(vsqrtq_f64(vld1q_f64(d + i)), veps);
    float64x2_t q = vdivq_f64(vnegq_f64(vg), den);
    uint64x2_t nz = vreinterpretq_u64_u32(vmvnq_u32(vreinterpretq_u32_u64(vceqzq_f64(vg))));
    vst1q_f64(u + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(q), nz)));
  }
  for (; i < n; ++i) {
    u[i] = g[i] == 0.0 ? 0.0 : -g[i] / (std::sqrt(d[i]) + eps);
  }
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  std::memset(c, 0, sizeof(double) * m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        vst1q_f64(crow + j, vfmaq_n_f64(vld1q_f64(crow + j), vld1q_f64(brow + j), aip));
      }
      for (; j < n; ++j) crow[j] = std::fma(aip, brow[j], crow[j]);
    }
  }
}

}  // namespace

namespace detail {
const KernelTable neon_table{Isa::neon, dot, sum_squares, axpby, square_ema, adam_divide, gemm};
}  // namespace detail

}  // namespace kronopt::simd
