#include <gtest/gtest.h>

#include <cmath>

#include "kronopt/error.hpp"
#include "kronopt/factor_state.hpp"
#include "test_util.hpp"

using namespace kronopt;

namespace {

RefreshPolicy policy(RefreshMode mode, double tau = 0.1, int freq = 1, int iters = 10) {
  return {mode, tau, freq, iters};
}

}  // namespace

TEST(FactorState, EmaExamples) {
  FactorState f(3);
  f.ema_update(SymMatrix::identity(3).scaled(5.0), 0.0);
  EXPECT_EQ(f.stat(), SymMatrix::identity(3).scaled(5.0));
  f.ema_update(SymMatrix::zeros(3), 0.5);
  EXPECT_EQ(f.stat(), SymMatrix::identity(3).scaled(2.5));

  FactorState g(SymMatrix::identity(2), Matrix::identity(2));
  g.ema_update(SymMatrix::identity(2).scaled(3.0), 0.5);
  EXPECT_EQ(g.stat(), SymMatrix::identity(2).scaled(2.0));
  EXPECT_EQ(g.eig_count(), 0);
  EXPECT_EQ(g.basis(), Matrix::identity(2));
}

TEST(FactorState, EmaDimMismatch) {
  FactorState f(3);
  try {
    f.ema_update(SymMatrix::identity(2), 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimError);
  }
}

TEST(FactorState, ZeroStatIsSkippedWithIdentityBasis) {
  FactorState f(3);
  for (RefreshMode m : {RefreshMode::fixed_eigh, RefreshMode::adaptive_eigh, RefreshMode::adaptive_qr}) {
    const RefreshDecision d = f.maybe_refresh(policy(m), 1);
    EXPECT_EQ(d.kind, Decision::Skipped);
    EXPECT_EQ(f.basis(), Matrix::identity(3));
    EXPECT_EQ(f.eig_count(), 0);
  }
}

TEST(FactorState, FirstCallAlwaysDecomposes) {
  for (RefreshMode m : {RefreshMode::fixed_eigh, RefreshMode::adaptive_eigh, RefreshMode::adaptive_qr,
                        RefreshMode::frozen}) {
    FactorState f(2);
    f.ema_update(SymMatrix(Matrix{{2, 1}, {1, 2}}), 0.0);
    const RefreshDecision d = f.maybe_refresh(policy(m, 0.1, 7), 1);
    EXPECT_EQ(d.kind, Decision::Recomputed) << to_string(m);
    EXPECT_EQ(f.eig_count(), 1);
    EXPECT_TRUE(f.initialized());
  }
}

TEST(FactorState, DiagonalStatIsSkipped) {
  FactorState f(SymMatrix(Matrix::diagonal(Vector{3, 1, 2})), Matrix::identity(3));
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_eigh, 0.01), 1);
  EXPECT_EQ(d.kind, Decision::Skipped);
  ASSERT_TRUE(d.criterion);
  EXPECT_EQ(*d.criterion, 0.0);
  EXPECT_EQ(f.basis_eigenvalues(), (Vector{3, 1, 2}));
}

TEST(FactorState, OffFrequencyStepIsNoCheck) {
  FactorState f(SymMatrix(Matrix{{2, 1}, {1, 2}}), Matrix::identity(2));
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_eigh, 0.1, 5), 3);
  EXPECT_EQ(d.kind, Decision::NoCheck);
  EXPECT_FALSE(d.criterion);
  EXPECT_EQ(f.basis(), Matrix::identity(2));
  EXPECT_EQ(f.eig_count(), 0);
}

TEST(FactorState, AdaptiveRecomputesAboveTau) {
  FactorState f(SymMatrix(Matrix{{2, 1}, {1, 2}}), Matrix::identity(2));
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_eigh, 0.1), 1);
  EXPECT_EQ(d.kind, Decision::Recomputed);
  ASSERT_TRUE(d.criterion);
  // sqrt(2) / sqrt(10), checked against a direct computation
  EXPECT_NEAR(*d.criterion, std::sqrt(2.0) / std::sqrt(10.0), 1e-15);
  EXPECT_NEAR(*d.criterion, 0.4472135955, 1e-10);
  EXPECT_EQ(f.eig_count(), 1);
  EXPECT_NEAR(f.basis_eigenvalues()[0], 3.0, 1e-14);
  EXPECT_NEAR(f.basis_eigenvalues()[1], 1.0, 1e-14);
}

TEST(FactorState, AdaptiveSkipRefreshesEigenvaluesOnly) {
  FactorState f(SymMatrix(Matrix::diagonal(Vector{4, 1})), Matrix::identity(2));
  f.ema_update(SymMatrix(Matrix{{6, 0.1}, {0.1, 2}}), 0.5);
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_eigh, 0.1), 2);
  EXPECT_EQ(d.kind, Decision::Skipped);
  EXPECT_EQ(f.basis(), Matrix::identity(2));
  EXPECT_EQ(f.basis_eigenvalues(), (Vector{5, 1.5}));
}

TEST(FactorState, FixedRecomputesEveryFSteps) {
  std::mt19937_64 rng(1);
  FactorState f(4);
  int eigs = 0;
  for (std::int64_t t = 1; t <= 12; ++t) {
    f.ema_update(gram_rows(kt::randn(4, 3, rng)), 0.9);
    const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::fixed_eigh, 0.1, 4), t);
    if (t == 1 || t % 4 == 0) {
      EXPECT_EQ(d.kind, Decision::Recomputed);
      ++eigs;
    } else {
      EXPECT_EQ(d.kind, Decision::NoCheck);
    }
  }
  EXPECT_EQ(f.eig_count(), eigs);
}

TEST(FactorState, FrozenNeverRecomputesAfterFirst) {
  std::mt19937_64 rng(2);
  FactorState f(3);
  for (std::int64_t t = 1; t <= 20; ++t) {
    f.ema_update(gram_rows(kt::randn(3, 3, rng)), 0.5);
    f.maybe_refresh(policy(RefreshMode::frozen), t);
  }
  EXPECT_EQ(f.eig_count(), 1);
}

TEST(FactorState, AdaptiveQrRefinesStaleBasis) {
  std::mt19937_64 rng(3);
  const SymMatrix s = kt::rand_spd(6, rng);
  const Matrix q = linalg::sym_eig(s).basis;
  // Perturb the statistic so the cached basis is stale but close.
  const Matrix noise = kt::randn(6, 6, rng);
  const SymMatrix s2(s.matrix() + 0.05 * SymMatrix(noise).matrix());
  FactorState f(s2, q);
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_qr, 1e-3, 1, 50), 1);
  ASSERT_TRUE(d.criterion);
  EXPECT_GT(*d.criterion, 1e-3);
  EXPECT_EQ(d.kind, Decision::QRRefined);
  EXPECT_GT(d.qr_iters, 0);
  EXPECT_EQ(f.qr_iter_count(), d.qr_iters);
  EXPECT_EQ(f.eig_count(), 0);
  EXPECT_LE(linalg::offdiag_ratio(congruence_tn(f.basis(), s2)), 1e-3);
}

TEST(FactorState, AdaptiveQrFallsBackToEigh) {
  const Matrix q = linalg::qr_decompose(Matrix{{1, 2, 0}, {0, 1, 3}, {4, 0, 1}}).q;
  const SymMatrix s = congruence_nt(q, SymMatrix(Matrix::diagonal(Vector{1.0, 0.9999, 0.9998})));
  FactorState f(s, Matrix::identity(3));
  const RefreshDecision d = f.maybe_refresh(policy(RefreshMode::adaptive_qr, 1e-8, 1, 2), 1);
  EXPECT_EQ(d.kind, Decision::Recomputed);
  EXPECT_EQ(d.qr_iters, 2);
  EXPECT_EQ(f.qr_iter_count(), 2);
  EXPECT_EQ(f.eig_count(), 1);
}

TEST(FactorState, PolicyValidation) {
  EXPECT_NO_THROW(policy(RefreshMode::adaptive_eigh, 0.0).validate());
  for (const RefreshPolicy& p : {policy(RefreshMode::adaptive_eigh, 1.0), policy(RefreshMode::adaptive_eigh, -0.1),
                                 policy(RefreshMode::fixed_eigh, 0.1, 0), policy(RefreshMode::adaptive_qr, 0.1, 1, 0)}) {
    try {
      p.validate();
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
  }
  EXPECT_EQ(parse_refresh_mode("adaptive_qr"), RefreshMode::adaptive_qr);
  EXPECT_THROW(parse_refresh_mode("sometimes"), Error);
}

TEST(TransitionMatrix, Examples) {
  std::mt19937_64 rng(4);
  const Matrix a = linalg::qr_decompose(kt::randn(5, 5, rng)).q;
  const Matrix b = linalg::qr_decompose(kt::randn(5, 5, rng)).q;
  EXPECT_LE(frobenius_norm(transition_matrix(a, a) - Matrix::identity(5)), 1e-14);
  EXPECT_EQ(transition_matrix(a, Matrix::identity(5)), a.transposed());
  EXPECT_LE(linalg::orthogonality_error(transition_matrix(a, b)), 1e-10);
  EXPECT_THROW(transition_matrix(a, Matrix::identity(4)), Error);
}
