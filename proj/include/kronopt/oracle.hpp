#pragma once

// Explicit mn x mn reference machinery for small problems. Everything here
// works on column-major vec(G), so the Kronecker-factored preconditioners
// take the form R kron L.

#include <cstddef>
#include <span>

#include "kronopt/matrix.hpp"

namespace kronopt::oracle {

inline constexpr std::size_t kMaxFullDim = 4096;

enum class AccumMode { adagrad_sum, adam_ema };

/// Full-matrix second-moment statistic C = sum or EMA of g g^T.
class FullMatrixState {
 public:
  FullMatrixState(std::size_t dim, AccumMode mode, double beta2 = 0.999);

  void update(std::span<const double> g);

  std::size_t dim() const noexcept { return c_.dim(); }
  AccumMode mode() const noexcept { return mode_; }
  const SymMatrix& c() const noexcept { return c_; }

 private:
  SymMatrix c_;
  AccumMode mode_;
  double beta2_;
};

/// diag(Q^T C Q): the Frobenius-optimal diagonal scaling in basis Q.
Vector optimal_correction(const SymMatrix& c, const Matrix& q);

/// (R kron L)^{1/2}, or R kron L when `squared`; divided by tr(L) when
/// `trace_scaled`. Throws SizeGuard beyond kMaxFullDim.
SymMatrix shampoo_kron_preconditioner(const SymMatrix& l, const SymMatrix& r, bool squared,
                                      bool trace_scaled);

/// -(C + eps I)^{-p} g through a full eigendecomposition of C.
Vector precondition_vec(const SymMatrix& c, std::span<const double> g, double p, double eps = 0.0);

struct Bounds {
  double lower;
  double upper;
};

/// ((max D)^{-p} |G|_F, (min D)^{-p} |G|_F). Throws NonPositiveScale if any
/// entry of D is <= 0.
Bounds scaling_norm_bounds(const Matrix& d, const Matrix& g, double p);

/// (lambda_max^{-p} |G|_F, lambda_min^{-p} |G|_F) for SPD C. Throws
/// SingularFactor if lambda_min <= 0.
Bounds extreme_eig_bounds(const SymMatrix& c, const Matrix& g, double p);

struct Residuals {
  double shampoo;         // |C - (R kron L)^{1/2}|_F
  double shampoo2_trace;  // |C - (R kron L) / tr(L)|_F
  double optimal;         // |C - (Q_R kron Q_L) diag(vec D) (Q_R kron Q_L)^T|_F
};

Residuals frobenius_residuals(const SymMatrix& c, const SymMatrix& l, const SymMatrix& r,
                              const Matrix& q_left, const Matrix& q_right, const Matrix& d);

/// Left and right partial traces of C over vec(G) with G of shape m x n:
/// the expectations of G G^T and G^T G when C = E[g g^T].
SymMatrix partial_trace_left(const SymMatrix& c, std::size_t m, std::size_t n);
SymMatrix partial_trace_right(const SymMatrix& c, std::size_t m, std::size_t n);

}  // namespace kronopt::oracle
