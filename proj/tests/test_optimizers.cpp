#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kronopt/error.hpp"
#include "kronopt/linalg.hpp"
#include "kronopt/optimizers.hpp"
#include "kronopt/oracle.hpp"
#include "test_util.hpp"

using namespace kronopt;

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

OptimizerConfig cfg_for(Variant v, double lr = 0.1) {
  OptimizerConfig c;
  c.variant = v;
  c.schedule.base_lr = lr;
  c.max_preconditioner_dim = 0;
  return c;
}

ParamBlock with_factors(std::size_t m, std::size_t n, const SymMatrix& l, const SymMatrix& r,
                        const OptimizerConfig& cfg) {
  ParamBlock b = ParamBlock::create(Matrix(m, n), cfg);
  b.left.emplace(l, linalg::sym_eig(l).basis);
  b.right.emplace(r, linalg::sym_eig(r).basis);
  return b;
}

Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  return linalg::qr_decompose(kt::randn(n, n, rng)).q;
}

}  // namespace

TEST(AdamUpdate, Examples) {
  const AdamResult z = adam_update(Matrix(2, 2, 1.0), Matrix(2, 2), 0.9, 1e-8);
  EXPECT_EQ(z.u, Matrix(2, 2));

  const Matrix g{{2, -0.5}, {-3, 7}};
  const AdamResult s = adam_update(Matrix(2, 2), g, 0.0, 0.0);
  EXPECT_EQ(s.u, (Matrix{{-1, 1}, {1, -1}}));

  const AdamResult h = adam_update(Matrix(1, 1), Matrix{{3}}, 0.5, 0.0);
  EXPECT_DOUBLE_EQ(h.d(0, 0), 4.5);
  EXPECT_NEAR(h.u(0, 0), -1.41421356, 1e-8);
  EXPECT_DOUBLE_EQ(h.u(0, 0), -3.0 / std::sqrt(4.5));
}

TEST(AdamUpdate, Errors) {
  EXPECT_EQ(kind_of([] { adam_update(Matrix(1, 1), Matrix{{1}}, 1.0, 0.0); }), ErrorKind::DivergentScale);
  EXPECT_EQ(kind_of([] { adam_update(Matrix(1, 2), Matrix(2, 1), 0.5, 0.0); }), ErrorKind::DimError);
}

TEST(ShampooUpdate, Examples) {
  std::mt19937_64 rng(1);
  const Matrix g = kt::randn(3, 4, rng);
  OptimizerConfig cfg = cfg_for(Variant::shampoo);
  cfg.epsilon = 0.0;

  const ParamBlock id = with_factors(3, 4, SymMatrix::identity(3), SymMatrix::identity(4), cfg);
  EXPECT_LE(frobenius_norm(shampoo_update(id, g, cfg).direction + g), 1e-15);

  const ParamBlock sc =
      with_factors(3, 4, SymMatrix::identity(3).scaled(16), SymMatrix::identity(4).scaled(81), cfg);
  EXPECT_LE(frobenius_norm(shampoo_update(sc, g, cfg).direction + (1.0 / 6.0) * g), 1e-15);
}

TEST(ShampooUpdate, UsesStaleBasisAsIs) {
  std::mt19937_64 rng(2);
  OptimizerConfig cfg = cfg_for(Variant::shampoo);
  cfg.policy.mode = RefreshMode::frozen;
  ParamBlock b = ParamBlock::create(Matrix(3, 3), cfg);
  step(b, kt::randn(3, 3, rng), cfg, 1);
  const Matrix before = b.left->basis();
  step(b, kt::randn(3, 3, rng), cfg, 2);
  EXPECT_EQ(b.left->basis(), before);
  EXPECT_EQ(b.left->eig_count(), 1);
}

TEST(ShampooUpdate, SingularFactor) {
  OptimizerConfig cfg = cfg_for(Variant::shampoo);
  cfg.epsilon = 0.0;
  const ParamBlock b =
      with_factors(2, 2, SymMatrix(Matrix::diagonal(Vector{1, 0})), SymMatrix::identity(2), cfg);
  EXPECT_EQ(kind_of([&] { shampoo_update(b, Matrix{{1, 1}, {1, 1}}, cfg); }), ErrorKind::SingularFactor);
}

TEST(GraftRescale, Examples) {
  std::mt19937_64 rng(3);
  const Matrix x = kt::randn(3, 2, rng);
  EXPECT_EQ(graft_rescale(x, x), x);

  Matrix unit = kt::randn(3, 2, rng);
  unit *= 1.0 / frobenius_norm(unit);
  const Matrix u = graft_rescale(2.0 * x, unit);
  EXPECT_LE(frobenius_norm(u - (1.0 / frobenius_norm(x)) * x), 1e-15);

  for (int k = 0; k < 20; ++k) {
    const Matrix a = kt::randn(4, 5, rng);
    const Matrix b = kt::randn(4, 5, rng);
    EXPECT_LE(std::abs(frobenius_norm(graft_rescale(a, b)) - frobenius_norm(b)), 1e-12);
  }
  EXPECT_EQ(graft_rescale(Matrix(2, 2), Matrix(2, 2, 1.0)), Matrix(2, 2));
}

TEST(Shampoo2Trace, Examples) {
  std::mt19937_64 rng(4);
  OptimizerConfig cfg = cfg_for(Variant::shampoo2_trace);
  cfg.epsilon = 0.0;
  const Matrix g = kt::randn(3, 3, rng);
  const ParamBlock b = with_factors(3, 3, SymMatrix::identity(3), SymMatrix::identity(3), cfg);
  EXPECT_LE(frobenius_norm(shampoo2_trace_update(b, g, cfg).direction + std::sqrt(3.0) * g), 1e-14);
  EXPECT_EQ(shampoo2_trace_update(b, Matrix(3, 3), cfg).direction, Matrix(3, 3));
}

TEST(Shampoo2Trace, Errors) {
  OptimizerConfig cfg = cfg_for(Variant::shampoo2_trace);
  const ParamBlock mismatch = with_factors(2, 3, SymMatrix::identity(2), SymMatrix::identity(3), cfg);
  EXPECT_EQ(kind_of([&] { shampoo2_trace_update(mismatch, Matrix(2, 3, 1.0), cfg); }),
            ErrorKind::InvalidMatrix);
  const ParamBlock zero = with_factors(2, 2, SymMatrix::zeros(2), SymMatrix::zeros(2), cfg);
  EXPECT_EQ(kind_of([&] { shampoo2_trace_update(zero, Matrix(2, 2, 1.0), cfg); }), ErrorKind::ZeroTrace);
}

TEST(Shampoo2Trace, RankOneStatisticIsExactlyKronecker) {
  std::mt19937_64 rng(5);
  const Matrix a = kt::randn(4, 1, rng);
  const Matrix bb = kt::randn(3, 1, rng);
  const Matrix g = outer(a.values(), bb.values());
  OptimizerConfig cfg = cfg_for(Variant::shampoo2_trace, 0.0);
  cfg.beta2 = 0.0;
  cfg.epsilon = 1e-3;
  ParamBlock blk = ParamBlock::create(Matrix(4, 3), cfg);
  step(blk, g, cfg, 1);
  const Eigen::VectorXd gv = kt::vec(kt::to_eigen(g));
  const Eigen::MatrixXd k = kt::kron(kt::to_eigen(blk.right->stat()), kt::to_eigen(blk.left->stat())) /
                            kt::to_eigen(blk.left->stat()).trace();
  EXPECT_LE((k - gv * gv.transpose()).norm(), 1e-10 * gv.squaredNorm());
  // The factors are rank one, so without a shift the inverse root does not exist.
  cfg.epsilon = 0.0;
  EXPECT_THROW(shampoo2_trace_update(blk, g, cfg), Error);
}

TEST(EShampoo, IdentityBasesReduceToAdam) {
  std::mt19937_64 rng(6);
  const Matrix g = kt::randn(3, 4, rng);
  Matrix d = kt::randn(3, 4, rng);
  for (double& x : d.values()) x *= x;
  OptimizerConfig cfg = cfg_for(Variant::eshampoo);
  cfg.epsilon = 1e-8;
  ParamBlock b = ParamBlock::create(Matrix(3, 4), cfg);
  b.left.emplace(SymMatrix::identity(3), Matrix::identity(3));
  b.right.emplace(SymMatrix::identity(4), Matrix::identity(4));
  b.correction = d;
  const AdamResult ref = adam_update(d, g, 0.0, 1e-8);
  b.correction = ref.d;
  EXPECT_LE(max_abs(eshampoo_update(b, g, cfg).direction - ref.u), 1e-12);
}

TEST(EShampoo, SignUpdateNormInAnyBasis) {
  std::mt19937_64 rng(7);
  OptimizerConfig cfg = cfg_for(Variant::eshampoo);
  cfg.beta3 = 0.0;
  cfg.epsilon = 0.0;
  cfg.policy.mode = RefreshMode::frozen;
  for (auto [m, n] : {std::pair{3u, 4u}, {5u, 2u}, {1u, 6u}}) {
    ParamBlock b = ParamBlock::create(Matrix(m, n), cfg);
    b.left.emplace(kt::rand_spd(m, rng), random_orthogonal(m, rng));
    b.right.emplace(kt::rand_spd(n, rng), random_orthogonal(n, rng));
    const StepReport r = step(b, kt::randn(m, n, rng), cfg, 1);
    EXPECT_NEAR(r.update_norm, std::sqrt(static_cast<double>(m * n)), 1e-12);
  }
}

TEST(EShampoo, BasisAwareMatchesSoapWhenBasisStable) {
  std::mt19937_64 rng(8);
  const Matrix g0 = kt::randn(4, 3, rng);
  OptimizerConfig soap = cfg_for(Variant::eshampoo);
  soap.beta2 = 0.0;  // factor statistic identical every step, so each recompute returns the same basis
  soap.beta3 = 0.9;
  soap.policy = {RefreshMode::fixed_eigh, 0.1, 1, 10};
  OptimizerConfig aware = soap;
  aware.correction = CorrectionMode::basis_aware;
  ParamBlock a = ParamBlock::create(Matrix(4, 3), soap);
  ParamBlock b = ParamBlock::create(Matrix(4, 3), aware);
  for (std::int64_t t = 1; t <= 10; ++t) {
    const Matrix g = (1.0 + 0.1 * static_cast<double>(t)) * g0;
    step(a, g, soap, t);
    step(b, g, aware, t);
    EXPECT_LE(frobenius_norm(a.correction - b.correction), 1e-12 * frobenius_norm(a.correction));
  }
}

TEST(EShampoo, BasisAwareRotatesCorrection) {
  std::mt19937_64 rng(9);
  OptimizerConfig cfg = cfg_for(Variant::eshampoo, 0.0);
  cfg.correction = CorrectionMode::basis_aware;
  cfg.beta2 = 0.5;
  cfg.beta3 = 0.9;
  ParamBlock b = ParamBlock::create(Matrix(3, 2), cfg);
  step(b, kt::randn(3, 2, rng), cfg, 1);
  const Matrix ql = b.left->basis(), qr = b.right->basis(), d0 = b.correction;
  const Matrix g = kt::randn(3, 2, rng);
  step(b, g, cfg, 2);
  const Matrix tl = hadamard(transition_matrix(b.left->basis(), ql), transition_matrix(b.left->basis(), ql));
  const Matrix tr = hadamard(transition_matrix(b.right->basis(), qr), transition_matrix(b.right->basis(), qr));
  const Matrix carried = matmul_nt(matmul(tl, d0), tr);
  const Matrix gt = linalg::rotate_in(b.left->basis(), g, b.right->basis());
  const Matrix want = 0.9 * carried + 0.1 * hadamard(gt, gt);
  EXPECT_LE(frobenius_norm(b.correction - want), 1e-12 * frobenius_norm(want));
}

TEST(EShampoo, OracleOptimalCorrection) {
  std::mt19937_64 rng(10);
  OptimizerConfig cfg = cfg_for(Variant::eshampoo, 0.01);
  cfg.correction = CorrectionMode::oracle_optimal;
  cfg.beta2 = 0.9;
  ParamBlock b = ParamBlock::create(Matrix(3, 2), cfg);
  ASSERT_TRUE(b.tracked);
  for (std::int64_t t = 1; t <= 5; ++t) step(b, kt::randn(3, 2, rng), cfg, t);
  const Vector want = oracle::optimal_correction(b.tracked->c(), kron(b.right->basis(), b.left->basis()));
  EXPECT_LE(frobenius_norm(Matrix::column(vec(b.correction)) - Matrix::column(want)), 1e-14);
}

TEST(Step, ZeroLearningRateStillAdvancesState) {
  std::mt19937_64 rng(11);
  for (Variant v : {Variant::adam, Variant::shampoo, Variant::eshampoo}) {
    OptimizerConfig cfg = cfg_for(v, 0.0);
    const Matrix w = kt::randn(3, 2, rng);
    ParamBlock b = ParamBlock::create(w, cfg);
    step(b, kt::randn(3, 2, rng), cfg, 1);
    EXPECT_EQ(b.weight, w);
    EXPECT_EQ(b.step_count, 1);
    if (v == Variant::adam) {
      EXPECT_GT(max_abs(b.correction), 0.0);
    } else {
      EXPECT_GT(max_abs(b.left->stat().matrix()), 0.0);
    }
  }
}

TEST(Step, AdamScalarArithmetic) {
  OptimizerConfig cfg = cfg_for(Variant::adam, 0.1);
  cfg.beta2 = 0.5;
  cfg.epsilon = 0.0;
  ParamBlock b = ParamBlock::create(Matrix{{1}}, cfg);
  EXPECT_FALSE(b.left || b.right || b.full);
  step(b, Matrix{{3}}, cfg, 1);
  EXPECT_DOUBLE_EQ(b.correction(0, 0), 4.5);
  EXPECT_DOUBLE_EQ(b.weight(0, 0), 1.0 - 0.1 * 3.0 / std::sqrt(4.5));
}

TEST(Step, GraftedNormIdentityWithWeightDecay) {
  std::mt19937_64 rng(12);
  OptimizerConfig cfg = cfg_for(Variant::shampoo_grafted, 0.05);
  cfg.weight_decay = 0.1;
  ParamBlock b = ParamBlock::create(kt::randn(4, 3, rng), cfg);
  for (std::int64_t t = 1; t <= 30; ++t) {
    const Matrix w = b.weight;
    const StepReport r = step(b, kt::randn(4, 3, rng), cfg, t);
    ASSERT_TRUE(r.graft_norm);
    // W' = (1 - lr wd) W + lr U with |U| = |U_adam|
    const Matrix u = b.weight - (1.0 - 0.05 * 0.1) * w;
    EXPECT_NEAR(frobenius_norm(u), 0.05 * *r.graft_norm, 1e-12);
    EXPECT_NEAR(r.update_norm, *r.graft_norm, 1e-12);
  }
}

TEST(Step, FullBlockLayout) {
  OptimizerConfig cfg = cfg_for(Variant::eshampoo);
  cfg.max_preconditioner_dim = 64;
  EXPECT_TRUE(ParamBlock::create(Matrix(8, 8), cfg).is_full());
  EXPECT_FALSE(ParamBlock::create(Matrix(8, 9), cfg).is_full());
  EXPECT_TRUE(ParamBlock::create(Matrix(16, 1), cfg).is_full());
  cfg.max_preconditioner_dim = 0;
  EXPECT_FALSE(ParamBlock::create(Matrix(1, 1), cfg).is_full());
}

TEST(Step, NonFiniteInputs) {
  OptimizerConfig cfg = cfg_for(Variant::shampoo);
  ParamBlock b = ParamBlock::create(Matrix(2, 2), cfg);
  EXPECT_EQ(kind_of([&] { step(b, Matrix{{NAN, 0}, {0, 0}}, cfg, 1); }), ErrorKind::InvalidMatrix);
  EXPECT_EQ(kind_of([&] { step(b, Matrix(2, 2, 1e200), cfg, 1); }), ErrorKind::NonFiniteUpdate);
  try {
    ParamBlock c = ParamBlock::create(Matrix(2, 2), cfg);
    step(c, Matrix(2, 2, 1e200), cfg, 7);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step 7"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { step(b, Matrix(3, 2), cfg, 1); }), ErrorKind::DimError);
}

TEST(Step, Deterministic) {
  std::mt19937_64 r1(13), r2(13);
  OptimizerConfig cfg = cfg_for(Variant::eshampoo);
  cfg.policy = {RefreshMode::adaptive_qr, 0.05, 2, 5};
  ParamBlock a = ParamBlock::create(Matrix(5, 4), cfg);
  ParamBlock b = ParamBlock::create(Matrix(5, 4), cfg);
  for (std::int64_t t = 1; t <= 20; ++t) {
    step(a, kt::randn(5, 4, r1), cfg, t);
    step(b, kt::randn(5, 4, r2), cfg, t);
  }
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_EQ(a.correction, b.correction);
}

// Matrix-form updates against the explicit mn x mn preconditioner, built in Eigen.
TEST(VecForm, KroneckerShampooAndEShampoo) {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = 1 + k % 4, n = 2 + k % 3;
    OptimizerConfig cfg = cfg_for(Variant::shampoo, 0.0);
    cfg.epsilon = 1e-2;
    cfg.exponent = 0.5;
    ParamBlock b = ParamBlock::create(Matrix(m, n), cfg);
    for (std::int64_t t = 1; t <= 5; ++t) step(b, kt::randn(m, n, rng), cfg, t);
    const Matrix g = kt::randn(m, n, rng);
    const Eigen::MatrixXd el = kt::to_eigen(b.left->stat()) + 1e-2 * Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd er = kt::to_eigen(b.right->stat()) + 1e-2 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd c = kt::sym_pow(kt::kron(er, el), 0.5);
    const Eigen::VectorXd want = -kt::sym_pow(c, -0.5) * kt::vec(kt::to_eigen(g));
    const Eigen::VectorXd got = kt::vec(kt::to_eigen(shampoo_update(b, g, cfg).direction));
    EXPECT_LE((got - want).norm() / want.norm(), 1e-9);

    OptimizerConfig ce = cfg;
    ce.variant = Variant::eshampoo;
    ParamBlock e = ParamBlock::create(Matrix(m, n), ce);
    for (std::int64_t t = 1; t <= 5; ++t) step(e, kt::randn(m, n, rng), ce, t);
    const Eigen::MatrixXd q = kt::kron(kt::to_eigen(e.right->basis()), kt::to_eigen(e.left->basis()));
    const Eigen::ArrayXd s = kt::vec(kt::to_eigen(e.correction)).array().sqrt() + 1e-2;
    const Eigen::VectorXd we = -q * (s.inverse().matrix().asDiagonal() * (q.transpose() * kt::vec(kt::to_eigen(g))));
    const Eigen::VectorXd ge = kt::vec(kt::to_eigen(eshampoo_update(e, g, ce).direction));
    EXPECT_LE((ge - we).norm() / we.norm(), 1e-9);
  }
}

TEST(VecForm, FullBlockShampooIsFullMatrixAdam) {
  std::mt19937_64 rng(15);
  OptimizerConfig cfg = cfg_for(Variant::shampoo, 0.0);
  cfg.max_preconditioner_dim = 64;
  cfg.epsilon = 1e-3;
  ParamBlock b = ParamBlock::create(Matrix(3, 4), cfg);
  ASSERT_TRUE(b.full);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(12, 12);
  for (std::int64_t t = 1; t <= 6; ++t) {
    const Matrix g = kt::randn(3, 4, rng);
    const Eigen::VectorXd v = kt::vec(kt::to_eigen(g));
    a = cfg.beta2 * a + (1 - cfg.beta2) * v * v.transpose();
    step(b, g, cfg, t);
  }
  const Matrix g = kt::randn(3, 4, rng);
  const Eigen::VectorXd want =
      -kt::sym_pow(a + 1e-3 * Eigen::MatrixXd::Identity(12, 12), -0.5) * kt::vec(kt::to_eigen(g));
  const Eigen::VectorXd got = kt::vec(kt::to_eigen(shampoo_update(b, g, cfg).direction));
  EXPECT_LE((got - want).norm() / want.norm(), 1e-9);
}

TEST(Idealized, AdamAndEShampooInsideExtremeEigenvalueBounds) {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 10; ++k) {
    const SymMatrix c = kt::rand_spd(12, rng);
    const Matrix g = kt::randn(3, 4, rng);
    const oracle::Bounds bounds = oracle::extreme_eig_bounds(c, g, 0.5);
    for (Variant v : {Variant::adam, Variant::eshampoo}) {
      OptimizerConfig cfg = cfg_for(v);
      cfg.epsilon = 0.0;
      ParamBlock b = ParamBlock::create(Matrix(3, 4), cfg);
      set_idealized_state(b, c, cfg);
      const double n = frobenius_norm(precondition(b, g, cfg).direction);
      EXPECT_GE(n, bounds.lower * (1 - 1e-12)) << to_string(v);
      EXPECT_LE(n, bounds.upper * (1 + 1e-12)) << to_string(v);
    }
  }
}

TEST(Idealized, ShampooIidNorm) {
  const std::size_t m = 4, n = 6;
  const double sigma = 1.3;
  std::mt19937_64 rng(17);
  const Matrix g = kt::randn(m, n, rng);
  OptimizerConfig cfg = cfg_for(Variant::shampoo);
  cfg.epsilon = 0.0;
  ParamBlock b = ParamBlock::create(Matrix(m, n), cfg);
  set_idealized_state(b, SymMatrix::identity(m * n).scaled(sigma * sigma), cfg);
  EXPECT_LE(frobenius_norm(b.left->stat().matrix() - (n * sigma * sigma) * Matrix::identity(m)), 1e-13);
  const double want = std::pow(static_cast<double>(m * n), -0.25) / sigma * frobenius_norm(g);
  EXPECT_NEAR(frobenius_norm(precondition(b, g, cfg).direction), want, 1e-12 * want);
}

TEST(Schedule, WarmupCosineClosedForm) {
  LrSchedule s;
  s.kind = LrSchedule::Kind::linear_warmup_cosine;
  s.base_lr = 0.3;
  s.warmup_steps = 10;
  s.total_steps = 110;
  for (std::int64_t t = 1; t <= 120; ++t) {
    double want;
    if (t <= 10) {
      want = 0.3 * t / 10.0;
    } else if (t >= 110) {
      want = 0.0;
    } else {
      want = 0.15 * (1 + std::cos(std::numbers::pi * (t - 10) / 100.0));
    }
    EXPECT_NEAR(s.at(t), want, 1e-12) << t;
  }
  LrSchedule c;
  c.base_lr = 0.2;
  EXPECT_EQ(c.at(1), 0.2);
  EXPECT_EQ(c.at(1000), 0.2);
}

TEST(Config, Validation) {
  auto bad = [](auto mutate) {
    OptimizerConfig c;
    mutate(c);
    return kind_of([&] { c.validate(); });
  };
  EXPECT_NO_THROW(OptimizerConfig{}.validate());
  EXPECT_EQ(bad([](OptimizerConfig& c) { c.beta2 = 1.0; }), ErrorKind::ConfigError);
  EXPECT_EQ(bad([](OptimizerConfig& c) { c.beta3 = -0.1; }), ErrorKind::ConfigError);
  EXPECT_EQ(bad([](OptimizerConfig& c) { c.epsilon = -1; }), ErrorKind::ConfigError);
  EXPECT_EQ(bad([](OptimizerConfig& c) { c.exponent = 0; }), ErrorKind::ConfigError);
  EXPECT_EQ(bad([](OptimizerConfig& c) { c.schedule.base_lr = NAN; }), ErrorKind::ConfigError);
  EXPECT_EQ(bad([](OptimizerConfig& c) {
              c.schedule.kind = LrSchedule::Kind::linear_warmup_cosine;
              c.schedule.warmup_steps = 5;
              c.schedule.total_steps = 4;
            }),
            ErrorKind::ConfigError);
  EXPECT_EQ(parse_variant("shampoo2_trace"), Variant::shampoo2_trace);
  EXPECT_EQ(parse_correction_mode("basis_aware"), CorrectionMode::basis_aware);
  EXPECT_THROW(parse_variant("sgd"), Error);
}

// Streaming statistics from iid zero-mean gradients: the equality case holds
// only statistically, so the check is at 5%.
TEST(Streaming, IidNormsNearEqualityCase) {
  const std::size_t m = 6, n = 5;
  const double sigma = 0.7;
  std::mt19937_64 rng(18);
  auto sample = [&] { return sigma * kt::randn(m, n, rng); };
  for (Variant v : {Variant::shampoo, Variant::adam, Variant::eshampoo}) {
    OptimizerConfig cfg = cfg_for(v, 0.0);
    cfg.beta2 = 0.999;
    cfg.epsilon = 0.0;
    cfg.policy = {RefreshMode::fixed_eigh, 0.1, 50, 10};
    ParamBlock b = ParamBlock::create(Matrix(m, n), cfg);
    for (std::int64_t t = 1; t <= 6000; ++t) step(b, sample(), cfg, t);
    const Matrix g = sample();
    const double want = (v == Variant::shampoo ? std::pow(static_cast<double>(m * n), -0.25) : 1.0) /
                        sigma * frobenius_norm(g);
    EXPECT_NEAR(frobenius_norm(precondition(b, g, cfg).direction), want, 0.05 * want) << to_string(v);
  }
}
