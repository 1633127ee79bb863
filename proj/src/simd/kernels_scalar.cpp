#include <cmath>
#include <cstring>

#include "kronopt/simd/kernels.hpp"

namespace kronopt::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void axpby(double* y, double a, const double* x, double b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * y[i] + b * x[i];
}

void square_ema(double* d, const double* g, double beta, std::size_t n) {
  const double w = 1.0 - beta;
  for (std::size_t i = 0; i < n; ++i) d[i] = beta * d[i] + w * (g[i] * g[i]);
}

void adam_divide(double* u, const double* g, const double* d, double eps, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
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
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar, dot, sum_squares, axpby, square_ema, adam_divide, gemm};
}  // namespace detail

}  // namespace kronopt::simd
