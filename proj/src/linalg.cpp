#include "kronopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kronopt/error.hpp"

namespace kronopt::linalg {

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (!all_finite(m)) throw Error(ErrorKind::InvalidMatrix, std::string(op) + ": non-finite entries");
}

// Householder reduction to tridiagonal form. On exit v holds the accumulated
// orthogonal transform, d the diagonal and e the sub-diagonal (e[0] unused).
void tridiagonalize(Matrix& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(v.rows());
  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;

      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e), rotating the columns of v.
void tridiagonal_ql(Matrix& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(v.rows());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) break;
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

EigPair sym_eig(const SymMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw Error(ErrorKind::DimError, "sym_eig: empty matrix");
  require_finite(m.matrix(), "sym_eig");

  Matrix v = m.matrix();
  Vector d(n), e(n);
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });

  EigPair out{Matrix(n, n), Vector(n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = d[src];
    double col_max = 0.0;
    for (std::size_t r = 0; r < n; ++r) col_max = std::max(col_max, std::abs(v(r, src)));
    double sign = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::abs(v(r, src)) > 1e-10 * col_max) {
        sign = v(r, src) < 0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t r = 0; r < n; ++r) out.basis(r, c) = sign * v(r, src);
  }
  return out;
}

Matrix reconstruct(const EigPair& e) {
  Matrix scaled = e.basis;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= e.values[j];
  return SymMatrix(matmul_nt(scaled, e.basis)).matrix();
}

QrResult qr_decompose(const Matrix& m) {
  if (!m.is_square()) throw Error(ErrorKind::DimError, "qr_decompose: matrix must be square");
  require_finite(m, "qr_decompose");
  const std::size_t n = m.rows();
  Matrix r = m;
  Matrix q = Matrix::identity(n);
  Vector v(n);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    double norm_x = 0.0;
    for (std::size_t i = k; i < n; ++i) norm_x += r(i, k) * r(i, k);
    norm_x = std::sqrt(norm_x);
    if (norm_x == 0.0) continue;
    const double alpha = r(k, k) > 0 ? -norm_x : norm_x;
    double norm_v = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = r(i, k) - (i == k ? alpha : 0.0);
      norm_v += v[i] * v[i];
    }
    if (norm_v == 0.0) continue;
    const double beta = 2.0 / norm_v;

    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * r(i, j);
      s *= beta;
      for (std::size_t i = k; i < n; ++i) r(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t p = k; p < n; ++p) s += q(i, p) * v[p];
      s *= beta;
      for (std::size_t p = k; p < n; ++p) q(i, p) -= s * v[p];
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) r(i, j) = 0.0;
    if (r(i, i) < 0) {
      for (std::size_t j = i; j < n; ++j) r(i, j) = -r(i, j);
      for (std::size_t p = 0; p < n; ++p) q(p, i) = -q(p, i);
    }
  }
  return {std::move(q), std::move(r)};
}

double offdiag_ratio(const SymMatrix& m) {
  const Matrix& a = m.matrix();
  double total = 0.0;
  double off = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double sq = a(i, j) * a(i, j);
      total += sq;
      if (i != j) off += sq;
    }
  if (total == 0.0) throw Error(ErrorKind::ZeroNorm, "offdiag_ratio of a zero matrix");
  return std::sqrt(off / total);
}

WarmQrResult warm_qr_refine(const SymMatrix& m, const Matrix& prev_basis, double tau,
                            int max_iters) {
  if (prev_basis.rows() != m.dim() || prev_basis.cols() != m.dim()) {
    throw Error(ErrorKind::DimError, "warm_qr_refine: basis does not match matrix");
  }
  require_finite(m.matrix(), "warm_qr_refine");

  SymMatrix rotated = congruence_tn(prev_basis, m);
  WarmQrResult out{prev_basis, std::move(rotated), 0, false, 0.0};
  if (frobenius_norm(m.matrix()) == 0.0) {
    out.converged = true;
    return out;
  }

  SymMatrix lambda = out.rotated;
  while (out.iterations < max_iters && offdiag_ratio(lambda) > tau) {
    QrResult f = qr_decompose(lambda.matrix());
    lambda = SymMatrix(matmul(f.r, f.q));
    out.basis = matmul(out.basis, f.q);
    ++out.iterations;
  }
  if (out.iterations > 0) out.rotated = congruence_tn(out.basis, m);
  out.criterion = offdiag_ratio(out.rotated);
  out.converged = out.criterion <= tau;
  return out;
}

Vector shifted_power(const Vector& values, double exponent, double eps) {
  if (!std::isfinite(exponent)) throw Error(ErrorKind::InvalidMatrix, "non-finite exponent");
  Vector out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double s = values[i] + eps;
    if (exponent < 0 && !(s > 0)) {
      throw Error(ErrorKind::SingularFactor, "negative power of eigenvalue " + std::to_string(s));
    }
    out[i] = exponent == 0 ? 1.0 : std::pow(std::max(s, 0.0), exponent);
  }
  return out;
}

SymMatrix mat_power(const EigPair& e, double exponent, double eps) {
  // Evaluated before the aggregate: GCC 11 leaks already-built members when a
  // later member initializer throws.
  Vector powered = shifted_power(e.values, exponent, eps);
  return SymMatrix(reconstruct({e.basis, std::move(powered)}));
}

Matrix rotate_in(const Matrix& q_left, const Matrix& g, const Matrix& q_right) {
  return matmul(matmul_tn(q_left, g), q_right);
}

Matrix rotate_out(const Matrix& q_left, const Matrix& x, const Matrix& q_right) {
  return matmul_nt(matmul(q_left, x), q_right);
}

double orthogonality_error(const Matrix& q) {
  Matrix qtq = matmul_tn(q, q);
  for (std::size_t i = 0; i < qtq.rows(); ++i) qtq(i, i) -= 1.0;
  return frobenius_norm(qtq);
}

}  // namespace kronopt::linalg
