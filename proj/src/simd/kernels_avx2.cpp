// Compiled with -mavx2 -mfma; only reachable through the dispatcher after a
// CPU feature check.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "kronopt/simd/kernels.hpp"

namespace kronopt::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

double sum_squares(const double* x, std::size_t n) { return dot(x, x, n); }

void axpby(double* y, double a, const double* x, double b, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ay = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
    __m256d bx = _mm256_mul_pd(vb, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(ay, bx));
  }
  for (; i < n; ++i) {
    const double ay = a * y[i];
    const double bx = b * x[i];
    y[i] = ay + bx;
  }
}

void square_ema(double* d, const double* g, double beta, std::size_t n) {
  const double w = 1.0 - beta;
  const __m256d vbeta = _mm256_set1_pd(beta);
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d sq = _mm256_mul_pd(vg, vg);
    __m256d old = _mm256_mul_pd(vbeta, _mm256_loadu_pd(d + i));
    _mm256_storeu_pd(d + i, _mm256_add_pd(old, _mm256_mul_pd(vw, sq)));
  }
  for (; i < n; ++i) {
    const double sq = g[i] * g[i];
    const double old = beta * d[i];
    const double fresh = w * sq;
    d[i] = old + fresh;
  }
}

void adam_divide(double* u, const double* g, const double* d, double eps, std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d den = _mm256_add_pd(_mm256_sqrt_pd(_mm256_loadu_pd(d + i)), veps);
    __m256d q = _mm256_div_pd(_mm256_xor_pd(vg, sign), den);
    __m256d is_zero = _mm256_cmp_pd(vg, zero, _CMP_EQ_OQ);
    _mm256_storeu_pd(u + i, _mm256_andnot_pd(is_zero, q));
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
      const __m256d va = _mm256_set1_pd(aip);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256d c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j));
        __m256d c1 =
            _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4), _mm256_loadu_pd(crow + j + 4));
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
      }
      for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
      }
      for (; j < n; ++j) crow[j] = std::fma(aip, brow[j], crow[j]);
    }
  }
}

}  // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2, dot, sum_squares, axpby, square_ema, adam_divide, gemm};
}  // namespace detail

}  // namespace kronopt::simd
