#include "kronopt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kronopt/error.hpp"
#include "kronopt/simd/kernels.hpp"

namespace kronopt {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimError,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::DimError, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  Matrix m(values.size(), 1);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  simd::kernels().axpby(data(), 1.0, other.data(), 1.0, size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  simd::kernels().axpby(data(), 1.0, other.data(), -1.0, size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator-(Matrix a) {
  for (double& x : a.values()) x = -x;
  return a;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimError, "matmul inner dimensions " + std::to_string(a.cols()) +
                                         " vs " + std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  if (a.cols() == 0) return c;
  simd::kernels().gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) { return matmul(a.transposed(), b); }

Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul(a, b.transposed()); }

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

Matrix outer(std::span<const double> a, std::span<const double> b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorKind::DimError, "matvec");
  Vector y(a.rows());
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = k.dot(a.data() + i * a.cols(), x.data(), x.size());
  return y;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(simd::kernels().sum_squares(a.data(), a.size()));
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "frobenius_dot");
  return simd::kernels().dot(a.data(), b.data(), a.size());
}

double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

double min_entry(const Matrix& a) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : a.values()) m = std::min(m, x);
  return m;
}

double max_entry(const Matrix& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : a.values()) m = std::max(m, x);
  return m;
}

Vector diag(const Matrix& a) {
  Vector d(std::min(a.rows(), a.cols()));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a(i, i);
  return d;
}

bool all_finite(const Matrix& a) { return all_finite(a.values()); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector vec(const Matrix& g) {
  Vector v(g.size());
  for (std::size_t j = 0; j < g.cols(); ++j)
    for (std::size_t i = 0; i < g.rows(); ++i) v[i + j * g.rows()] = g(i, j);
  return v;
}

Matrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw Error(ErrorKind::DimError, "unvec");
  Matrix g(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) g(i, j) = v[i + j * rows];
  return g;
}

double norm2(std::span<const double> v) {
  return std::sqrt(simd::kernels().sum_squares(v.data(), v.size()));
}

SymMatrix::SymMatrix(const Matrix& m) : m_(m.rows(), m.cols()) {
  if (!m.is_square()) {
    throw Error(ErrorKind::DimError, "symmetric matrix must be square, got " +
                                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    m_(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m_(i, j) = v;
      m_(j, i) = v;
    }
  }
}

SymMatrix::SymMatrix(std::size_t dim) : m_(dim, dim) {}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::ema(const SymMatrix& other, double beta) const {
  if (other.dim() != dim()) {
    throw Error(ErrorKind::DimError, "ema: " + std::to_string(dim()) + " vs " +
                                         std::to_string(other.dim()));
  }
  SymMatrix out(*this);
  simd::kernels().axpby(out.m_.data(), beta, other.m_.data(), 1.0 - beta, out.m_.size());
  return out;
}

SymMatrix SymMatrix::scaled(double s) const {
  SymMatrix out(*this);
  out.m_ *= s;
  return out;
}

SymMatrix congruence_tn(const Matrix& q, const SymMatrix& m) {
  return SymMatrix(matmul(matmul_tn(q, m.matrix()), q));
}

SymMatrix congruence_nt(const Matrix& q, const SymMatrix& m) {
  return SymMatrix(matmul_nt(matmul(q, m.matrix()), q));
}

SymMatrix gram_rows(const Matrix& g) { return SymMatrix(matmul_nt(g, g)); }

SymMatrix gram_cols(const Matrix& g) { return SymMatrix(matmul_tn(g, g)); }

}  // namespace kronopt
