#include "kronopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kronopt/error.hpp"
#include "kronopt/linalg.hpp"

namespace kronopt::oracle {

namespace {

void guard_size(std::size_t dim, const char* op) {
  if (dim > kMaxFullDim) {
    throw Error(ErrorKind::SizeGuard, std::string(op) + ": dimension " + std::to_string(dim) +
                                          " exceeds " + std::to_string(kMaxFullDim));
  }
}

}  // namespace

FullMatrixState::FullMatrixState(std::size_t dim, AccumMode mode, double beta2)
    : c_(dim), mode_(mode), beta2_(beta2) {
  guard_size(dim, "FullMatrixState");
  if (mode == AccumMode::adam_ema && !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::ConfigError, "beta2 must lie in [0, 1)");
  }
}

void FullMatrixState::update(std::span<const double> g) {
  if (g.size() != dim()) throw Error(ErrorKind::DimError, "FullMatrixState::update");
  const SymMatrix gg(outer(g, g));
  if (mode_ == AccumMode::adam_ema) {
    c_ = c_.ema(gg, beta2_);
  } else {
    c_ = SymMatrix(c_.matrix() + gg.matrix());
  }
}

Vector optimal_correction(const SymMatrix& c, const Matrix& q) {
  if (q.rows() != c.dim() || q.cols() != c.dim()) {
    throw Error(ErrorKind::DimError, "optimal_correction: basis does not match statistic");
  }
  // Only the diagonal of Q^T C Q is needed: column-wise q_i^T C q_i.
  const Matrix cq = matmul(c.matrix(), q);
  Vector d(c.dim());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < c.dim(); ++r) s += q(r, i) * cq(r, i);
    d[i] = s;
  }
  return d;
}

SymMatrix shampoo_kron_preconditioner(const SymMatrix& l, const SymMatrix& r, bool squared,
                                      bool trace_scaled) {
  guard_size(l.dim() * r.dim(), "shampoo_kron_preconditioner");
  SymMatrix k(kron(r.matrix(), l.matrix()));
  if (!squared) {
    // Roots of the factors, not of the product: (R kron L)^{1/2} = R^{1/2} kron L^{1/2}.
    const SymMatrix lr = linalg::mat_power(linalg::sym_eig(l), 0.5, 0.0);
    const SymMatrix rr = linalg::mat_power(linalg::sym_eig(r), 0.5, 0.0);
    k = SymMatrix(kron(rr.matrix(), lr.matrix()));
  }
  if (trace_scaled) {
    const double s = trace(l.matrix());
    if (!(s > 0)) throw Error(ErrorKind::ZeroTrace, "shampoo_kron_preconditioner: tr(L) = 0");
    k = k.scaled(1.0 / s);
  }
  return k;
}

Vector precondition_vec(const SymMatrix& c, std::span<const double> g, double p, double eps) {
  if (g.size() != c.dim()) throw Error(ErrorKind::DimError, "precondition_vec");
  guard_size(c.dim(), "precondition_vec");
  const SymMatrix inv = linalg::mat_power(linalg::sym_eig(c), -p, eps);
  Vector u = matvec(inv.matrix(), g);
  for (double& x : u) x = -x;
  return u;
}

Bounds scaling_norm_bounds(const Matrix& d, const Matrix& g, double p) {
  if (d.empty()) throw Error(ErrorKind::DimError, "scaling_norm_bounds: empty scaling");
  const double lo = min_entry(d);
  const double hi = max_entry(d);
  if (!(lo > 0)) throw Error(ErrorKind::NonPositiveScale, "scaling_norm_bounds: scaling must be positive");
  const double gn = frobenius_norm(g);
  return {std::pow(hi, -p) * gn, std::pow(lo, -p) * gn};
}

Bounds extreme_eig_bounds(const SymMatrix& c, const Matrix& g, double p) {
  const linalg::EigPair e = linalg::sym_eig(c);
  const double hi = e.values.front();
  const double lo = e.values.back();
  if (!(lo > 0)) {
    throw Error(ErrorKind::SingularFactor, "extreme_eig_bounds: C is not positive definite");
  }
  const double gn = frobenius_norm(g);
  return {std::pow(hi, -p) * gn, std::pow(lo, -p) * gn};
}

Residuals frobenius_residuals(const SymMatrix& c, const SymMatrix& l, const SymMatrix& r,
                              const Matrix& q_left, const Matrix& q_right, const Matrix& d) {
  const std::size_t m = l.dim();
  const std::size_t n = r.dim();
  guard_size(m * n, "frobenius_residuals");
  if (c.dim() != m * n || q_left.rows() != m || q_right.rows() != n || d.rows() != m ||
      d.cols() != n) {
    throw Error(ErrorKind::DimError, "frobenius_residuals: incompatible shapes");
  }
  Residuals out{};
  out.shampoo = frobenius_norm(c.matrix() - shampoo_kron_preconditioner(l, r, false, false).matrix());
  out.shampoo2_trace =
      frobenius_norm(c.matrix() - shampoo_kron_preconditioner(l, r, true, true).matrix());

  const Matrix q = kron(q_right, q_left);
  const Vector dv = vec(d);
  Matrix qd = q;
  for (std::size_t i = 0; i < qd.rows(); ++i)
    for (std::size_t j = 0; j < qd.cols(); ++j) qd(i, j) *= dv[j];
  out.optimal = frobenius_norm(c.matrix() - matmul_nt(qd, q));
  return out;
}

SymMatrix partial_trace_left(const SymMatrix& c, std::size_t m, std::size_t n) {
  if (c.dim() != m * n) throw Error(ErrorKind::DimError, "partial_trace_left");
  Matrix l(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += c(i + j * m, k + j * m);
      l(i, k) = s;
    }
  return SymMatrix(l);
}

SymMatrix partial_trace_right(const SymMatrix& c, std::size_t m, std::size_t n) {
  if (c.dim() != m * n) throw Error(ErrorKind::DimError, "partial_trace_right");
  Matrix r(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += c(i + j * m, i + l * m);
      r(j, l) = s;
    }
  return SymMatrix(r);
}

}  // namespace kronopt::oracle
