#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kronopt/error.hpp"
#include "kronopt/linalg.hpp"
#include "test_util.hpp"

using namespace kronopt;
using namespace kronopt::linalg;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no kronopt::Error thrown";
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(SymEig, Identity) {
  const EigPair e = sym_eig(SymMatrix::identity(3));
  EXPECT_EQ(e.values, (Vector{1, 1, 1}));
  EXPECT_EQ(e.basis, Matrix::identity(3));
}

TEST(SymEig, TwoByTwo) {
  const EigPair e = sym_eig(SymMatrix(Matrix{{2, 1}, {1, 2}}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(e.basis(0, 0), s, 1e-14);
  EXPECT_NEAR(e.basis(1, 0), s, 1e-14);
}

TEST(SymEig, SeededReconstruction) {
  std::mt19937_64 rng(42);
  const SymMatrix m = kt::rand_spd(8, rng);
  const EigPair e = sym_eig(m);
  EXPECT_LE(frobenius_norm(reconstruct(e) - m.matrix()) / frobenius_norm(m.matrix()), 1e-10);
}

TEST(SymEig, MatchesEigenAcrossSizes) {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 40; n += 3) {
    const Matrix a = kt::randn(n, n, rng);
    const SymMatrix m(a);  // indefinite
    const EigPair e = sym_eig(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kt::to_eigen(m));
    Eigen::VectorXd ref = es.eigenvalues().reverse();
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(e.values[i], ref(i), 1e-12 * (1 + ref.cwiseAbs().maxCoeff()));
    EXPECT_LE(orthogonality_error(e.basis), 1e-12 * n);
    EXPECT_TRUE(std::is_sorted(e.values.rbegin(), e.values.rend()));
    // sign convention: first non-negligible entry of each eigenvector positive
    for (std::size_t j = 0; j < n; ++j) {
      double col_max = 0.0;
      for (std::size_t i = 0; i < n; ++i) col_max = std::max(col_max, std::abs(e.basis(i, j)));
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(e.basis(i, j)) > 1e-10 * col_max) {
          EXPECT_GT(e.basis(i, j), 0.0);
          break;
        }
      }
    }
  }
}

TEST(SymEig, Deterministic) {
  std::mt19937_64 rng(6);
  const SymMatrix m = kt::rand_spd(12, rng);
  const EigPair a = sym_eig(m);
  const EigPair b = sym_eig(m);
  EXPECT_EQ(a.basis, b.basis);
  EXPECT_EQ(a.values, b.values);
}

TEST(SymEig, NonFiniteThrows) {
  Matrix m = Matrix::identity(3);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { sym_eig(SymMatrix(m)); }), ErrorKind::InvalidMatrix);
}

TEST(Qr, IdentityAndDiagonal) {
  const QrResult a = qr_decompose(Matrix::identity(4));
  EXPECT_EQ(a.q, Matrix::identity(4));
  EXPECT_EQ(a.r, Matrix::identity(4));
  const Matrix d = Matrix::diagonal(Vector{2, 5, 0.5});
  const QrResult b = qr_decompose(d);
  EXPECT_LE(frobenius_norm(b.q - Matrix::identity(3)), 1e-15);
  EXPECT_LE(frobenius_norm(b.r - d), 1e-15);
}

TEST(Qr, SeededRandom) {
  std::mt19937_64 rng(7);
  const Matrix m = kt::randn(6, 6, rng);
  const QrResult r = qr_decompose(m);
  EXPECT_LE(orthogonality_error(r.q), 1e-10);
  EXPECT_LE(frobenius_norm(matmul(r.q, r.r) - m), 1e-10 * frobenius_norm(m));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_GE(r.r(i, i), 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(r.r(i, j), 0.0);
  }
}

TEST(Qr, NonFiniteThrows) {
  Matrix m = Matrix::identity(2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(kind_of([&] { qr_decompose(m); }), ErrorKind::InvalidMatrix);
}

TEST(OffdiagRatio, Examples) {
  EXPECT_EQ(offdiag_ratio(SymMatrix(Matrix::diagonal(Vector{3, -1, 2}))), 0.0);
  EXPECT_DOUBLE_EQ(offdiag_ratio(SymMatrix(Matrix{{0, 1}, {1, 0}})), 1.0);
  EXPECT_NEAR(offdiag_ratio(SymMatrix(Matrix{{1, 1}, {1, 1}})), std::sqrt(2.0) / 2.0, 1e-15);
  // off-diagonal norm sqrt(2), total norm sqrt(10)
  EXPECT_NEAR(offdiag_ratio(SymMatrix(Matrix{{2, 1}, {1, 2}})), std::sqrt(0.2), 1e-15);
}

TEST(OffdiagRatio, ZeroMatrixThrows) {
  EXPECT_EQ(kind_of([] { offdiag_ratio(SymMatrix::zeros(3)); }), ErrorKind::ZeroNorm);
}

TEST(WarmQr, DiagonalInputNeedsNoIterations) {
  const SymMatrix m(Matrix::diagonal(Vector{4, 2, 1}));
  for (double tau : {0.0, 0.1, 0.5}) {
    const WarmQrResult r = warm_qr_refine(m, Matrix::identity(3), tau, 10);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.basis, Matrix::identity(3));
  }
}

TEST(WarmQr, TwoByTwoConverges) {
  const SymMatrix m(Matrix{{2, 1}, {1, 2}});
  const WarmQrResult r = warm_qr_refine(m, Matrix::identity(2), 1e-8, 50);
  ASSERT_TRUE(r.converged);
  Vector d = diag(r.rotated.matrix());
  std::sort(d.rbegin(), d.rend());
  EXPECT_NEAR(d[0], 3.0, 1e-6);
  EXPECT_NEAR(d[1], 1.0, 1e-6);
  EXPECT_LE(r.criterion, 1e-8);
}

TEST(WarmQr, ExactBasisIsKept) {
  std::mt19937_64 rng(8);
  const SymMatrix m = kt::rand_spd(6, rng);
  const EigPair e = sym_eig(m);
  const WarmQrResult r = warm_qr_refine(m, e.basis, 0.1, 10);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.basis, e.basis);
}

TEST(WarmQr, ReportsNonConvergence) {
  // Nearly equal eigenvalues make unshifted QR iteration crawl.
  std::mt19937_64 rng(9);
  const Matrix q = qr_decompose(kt::randn(5, 5, rng)).q;
  const SymMatrix m = congruence_nt(q, SymMatrix(Matrix::diagonal(Vector{1.0, 0.999, 0.998, 0.997, 0.996})));
  const WarmQrResult r = warm_qr_refine(m, Matrix::identity(5), 1e-6, 3);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_GT(r.criterion, 1e-6);
}

TEST(WarmQr, InvariantsUnderManyIterations) {
  std::mt19937_64 rng(10);
  for (std::size_t n : {2u, 5u, 11u, 16u}) {
    const SymMatrix m = kt::rand_spd(n, rng);
    const Matrix q0 = qr_decompose(kt::randn(n, n, rng)).q;
    const WarmQrResult r = warm_qr_refine(m, q0, 0.0, 100);
    EXPECT_LE(r.iterations, 100);
    const double tr = trace(m.matrix());
    EXPECT_LE(std::abs(trace(r.rotated.matrix()) - tr), 1e-9 * (1 + std::abs(tr)));
    EXPECT_NEAR(frobenius_norm(r.rotated.matrix()), frobenius_norm(m.matrix()),
                1e-9 * frobenius_norm(m.matrix()));
    EXPECT_LE(orthogonality_error(r.basis), 1e-8 * n);
    EXPECT_LE(frobenius_norm(congruence_tn(r.basis, m).matrix() - r.rotated.matrix()),
              1e-10 * frobenius_norm(m.matrix()));
  }
}

TEST(WarmQr, AgreesWithSymEigWhenConverged) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {3u, 6u, 9u}) {
    const SymMatrix m = kt::rand_spd(n, rng);
    const WarmQrResult r = warm_qr_refine(m, Matrix::identity(n), 1e-8, 5000);
    ASSERT_TRUE(r.converged) << n;
    Vector d = diag(r.rotated.matrix());
    std::sort(d.rbegin(), d.rend());
    const Vector ev = sym_eig(m).values;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(d[i], ev[i], 1e-6 * ev[i]);
  }
}

TEST(MatPower, Examples) {
  const EigPair id = sym_eig(SymMatrix::identity(3));
  EXPECT_LE(frobenius_norm(mat_power(id, -0.25, 0.0).matrix() - Matrix::identity(3)), 1e-15);

  const EigPair d = sym_eig(SymMatrix(Matrix::diagonal(Vector{16, 81})));
  const SymMatrix p = mat_power(d, -0.25, 0.0);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p(0, 1), 0.0);
}

TEST(MatPower, HalfPowerSquaresBack) {
  std::mt19937_64 rng(12);
  const SymMatrix m = kt::rand_spd(7, rng);
  const EigPair e = sym_eig(m);
  const double eps = 0.3;
  const Matrix h = mat_power(e, 0.5, eps).matrix();
  Matrix want = m.matrix();
  for (std::size_t i = 0; i < 7; ++i) want(i, i) += eps;
  EXPECT_LE(frobenius_norm(matmul(h, h) - want) / frobenius_norm(want), 1e-9);
}

TEST(MatPower, SingularFactor) {
  const EigPair e = sym_eig(SymMatrix(Matrix::diagonal(Vector{1, 0})));
  EXPECT_EQ(kind_of([&] { mat_power(e, -0.5, 0.0); }), ErrorKind::SingularFactor);
  EXPECT_NO_THROW(mat_power(e, -0.5, 1e-6));
  EXPECT_NO_THROW(mat_power(e, 0.5, 0.0));
}

TEST(Rotate, RoundTrip) {
  std::mt19937_64 rng(13);
  const Matrix ql = qr_decompose(kt::randn(4, 4, rng)).q;
  const Matrix qr = qr_decompose(kt::randn(3, 3, rng)).q;
  const Matrix g = kt::randn(4, 3, rng);
  EXPECT_LE(frobenius_norm(rotate_out(ql, rotate_in(ql, g, qr), qr) - g), 1e-13);
}
