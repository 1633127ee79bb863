#pragma once

#include "kronopt/matrix.hpp"

namespace kronopt::linalg {

/// Spectral decomposition M = Q diag(values) Q^T with values sorted
/// descending and each eigenvector's first non-negligible entry positive.
struct EigPair {
  Matrix basis;
  Vector values;
};

/// Householder tridiagonalisation followed by implicit-shift QL sweeps.
/// Throws InvalidMatrix on non-finite input.
EigPair sym_eig(const SymMatrix& m);

Matrix reconstruct(const EigPair& e);

struct QrResult {
  Matrix q;  // orthogonal
  Matrix r;  // upper triangular, non-negative diagonal
};

/// Householder QR of a square matrix.
QrResult qr_decompose(const Matrix& m);

/// ||M - diag(M)||_F / ||M||_F. Throws ZeroNorm when ||M||_F == 0.
double offdiag_ratio(const SymMatrix& m);

struct WarmQrResult {
  Matrix basis;        // Q_prev times the accumulated per-iteration Q factors
  SymMatrix rotated;   // basis^T M basis
  int iterations = 0;
  bool converged = false;
  double criterion = 0.0;  // offdiag_ratio(rotated); 0 for a zero matrix
};

/// Unshifted QR iteration warm-started from `prev_basis`. Iterates while the
/// relative off-diagonal mass exceeds `tau`, at most `max_iters` times. A
/// basis that already satisfies the tolerance is returned untouched with
/// zero iterations.
WarmQrResult warm_qr_refine(const SymMatrix& m, const Matrix& prev_basis, double tau,
                            int max_iters);

/// Q diag((lambda_i + eps)^exponent) Q^T. Throws SingularFactor for a
/// negative exponent applied to a non-positive shifted eigenvalue.
SymMatrix mat_power(const EigPair& e, double exponent, double eps);

/// (lambda_i + eps)^exponent with the same error contract as mat_power.
Vector shifted_power(const Vector& values, double exponent, double eps);

/// Q_L^T G Q_R
Matrix rotate_in(const Matrix& q_left, const Matrix& g, const Matrix& q_right);
/// Q_L X Q_R^T
Matrix rotate_out(const Matrix& q_left, const Matrix& x, const Matrix& q_right);

/// ||Q^T Q - I||_F
double orthogonality_error(const Matrix& q);

}  // namespace kronopt::linalg
