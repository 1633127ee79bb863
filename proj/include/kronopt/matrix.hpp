#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace kronopt {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Column vectors are n x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator-(Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);
Matrix outer(std::span<const double> a, std::span<const double> b);
Vector matvec(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& a);
double frobenius_dot(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
double max_abs(const Matrix& a);
double min_entry(const Matrix& a);
double max_entry(const Matrix& a);
Vector diag(const Matrix& a);
bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> v);

/// Column-major vectorisation, vec(G)[i + j*m] = G(i, j), so that
/// vec(L X R^T) = (R kron L) vec(X).
Vector vec(const Matrix& g);
Matrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

double norm2(std::span<const double> v);

/// Dense symmetric matrix. Construction symmetrises the input as (M + M^T)/2;
/// the stored entries are never modified afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);
  explicit SymMatrix(std::size_t dim);

  static SymMatrix identity(std::size_t n);
  static SymMatrix zeros(std::size_t n) { return SymMatrix(n); }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  /// beta * this + (1 - beta) * other
  SymMatrix ema(const SymMatrix& other, double beta) const;
  SymMatrix scaled(double s) const;

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  Matrix m_;
};

/// Symmetric Q^T M Q.
SymMatrix congruence_tn(const Matrix& q, const SymMatrix& m);
/// Symmetric Q M Q^T.
SymMatrix congruence_nt(const Matrix& q, const SymMatrix& m);

/// G G^T and G^T G, bitwise symmetric.
SymMatrix gram_rows(const Matrix& g);
SymMatrix gram_cols(const Matrix& g);

}  // namespace kronopt
