#include "kronopt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kronopt/error.hpp"
#include "kronopt/linalg.hpp"
#include "kronopt/simd/kernels.hpp"

namespace kronopt {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::adam: return "adam";
    case Variant::shampoo: return "shampoo";
    case Variant::shampoo_grafted: return "shampoo_grafted";
    case Variant::shampoo2_trace: return "shampoo2_trace";
    case Variant::eshampoo: return "eshampoo";
  }
  return "unknown";
}

std::string_view to_string(CorrectionMode c) {
  switch (c) {
    case CorrectionMode::soap_ema: return "soap_ema";
    case CorrectionMode::basis_aware: return "basis_aware";
    case CorrectionMode::oracle_optimal: return "oracle_optimal";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::adam, Variant::shampoo, Variant::shampoo_grafted,
                    Variant::shampoo2_trace, Variant::eshampoo}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorKind::ConfigError, "unknown optimizer variant '" + std::string(name) + "'");
}

CorrectionMode parse_correction_mode(std::string_view name) {
  for (CorrectionMode c :
       {CorrectionMode::soap_ema, CorrectionMode::basis_aware, CorrectionMode::oracle_optimal}) {
    if (name == to_string(c)) return c;
  }
  throw Error(ErrorKind::ConfigError, "unknown correction mode '" + std::string(name) + "'");
}

double LrSchedule::at(std::int64_t t) const {
  if (kind == Kind::constant) return base_lr;
  if (t <= 0) return 0.0;
  if (t <= warmup_steps) return base_lr * static_cast<double>(t) / static_cast<double>(warmup_steps);
  if (t >= total_steps) return 0.0;
  const double frac =
      static_cast<double>(t - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void LrSchedule::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) {
    throw Error(ErrorKind::ConfigError, "learning rate must be finite and >= 0");
  }
  if (kind == Kind::linear_warmup_cosine) {
    if (warmup_steps < 0 || total_steps < 1 || warmup_steps > total_steps) {
      throw Error(ErrorKind::ConfigError, "schedule needs 0 <= warmup_steps <= total_steps, total >= 1");
    }
  }
}

void OptimizerConfig::validate() const {
  schedule.validate();
  policy.validate();
  auto unit = [](double b) { return b >= 0.0 && b < 1.0; };
  if (!unit(beta2)) throw Error(ErrorKind::ConfigError, "beta2 must lie in [0, 1)");
  if (beta3 && !unit(*beta3)) throw Error(ErrorKind::ConfigError, "beta3 must lie in [0, 1)");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::ConfigError, "epsilon must be >= 0");
  if (!(exponent > 0.0) || !std::isfinite(exponent)) {
    throw Error(ErrorKind::ConfigError, "exponent must be > 0");
  }
  if (!(weight_decay >= 0.0)) throw Error(ErrorKind::ConfigError, "weight_decay must be >= 0");
}

ParamBlock ParamBlock::create(Matrix weight, const OptimizerConfig& cfg) {
  if (weight.empty()) throw Error(ErrorKind::DimError, "parameter block must be non-empty");
  ParamBlock b;
  const std::size_t m = weight.rows();
  const std::size_t n = weight.cols();
  b.correction = Matrix(m, n);
  if (cfg.variant != Variant::adam) {
    if (m * n <= cfg.max_preconditioner_dim) {
      b.full.emplace(m * n);
    } else {
      b.left.emplace(m);
      b.right.emplace(n);
    }
  }
  if (cfg.variant == Variant::eshampoo && cfg.correction == CorrectionMode::oracle_optimal) {
    b.tracked.emplace(m * n, oracle::AccumMode::adam_ema, cfg.effective_beta3());
  }
  b.weight = std::move(weight);
  return b;
}

AdamResult adam_update(const Matrix& d, const Matrix& g, double beta3, double eps) {
  if (d.rows() != g.rows() || d.cols() != g.cols()) throw Error(ErrorKind::DimError, "adam_update");
  const auto& k = simd::kernels();
  AdamResult out{d, Matrix(g.rows(), g.cols())};
  k.square_ema(out.d.data(), g.data(), beta3, g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.data()[i] != 0.0 && std::sqrt(out.d.data()[i]) + eps == 0.0) {
      throw Error(ErrorKind::DivergentScale, "zero second moment under a nonzero gradient");
    }
  }
  k.adam_divide(out.u.data(), g.data(), out.d.data(), eps, g.size());
  return out;
}

Matrix graft_rescale(const Matrix& u_shampoo, const Matrix& u_graft) {
  const double ns = frobenius_norm(u_shampoo);
  if (ns == 0.0) return Matrix(u_shampoo.rows(), u_shampoo.cols());
  return (frobenius_norm(u_graft) / ns) * u_shampoo;
}

namespace {

// Rotated coordinates: Q_L^T G Q_R for Kronecker blocks, unvec(Q^T vec G) for
// full blocks. Entry (i, j) of the result pairs with correction(i, j).
Matrix rotate_forward(const ParamBlock& b, const Matrix& g) {
  if (b.full) {
    return unvec(matvec(b.full->basis().transposed(), vec(g)), g.rows(), g.cols());
  }
  return linalg::rotate_in(b.left->basis(), g, b.right->basis());
}

Matrix rotate_back(const ParamBlock& b, const Matrix& x) {
  if (b.full) return unvec(matvec(b.full->basis(), vec(x)), x.rows(), x.cols());
  return linalg::rotate_out(b.left->basis(), x, b.right->basis());
}

Matrix basis_kron(const ParamBlock& b) {
  if (b.full) return b.full->basis();
  return kron(b.right->basis(), b.left->basis());
}

void require_factors(const ParamBlock& b, const char* op) {
  if (!b.full && !(b.left && b.right)) {
    throw Error(ErrorKind::ConfigError, std::string(op) + " needs Kronecker or full factors");
  }
}

UpdateResult zero_result(const Matrix& g) {
  UpdateResult r;
  r.direction = Matrix(g.rows(), g.cols());
  r.zero_update = true;
  return r;
}

bool is_zero(const Matrix& g) { return max_abs(g) == 0.0; }

UpdateResult adam_type(const Matrix& gt, const Matrix& d, double eps) {
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.data()[i] != 0.0 && std::sqrt(d.data()[i]) + eps == 0.0) {
      throw Error(ErrorKind::DivergentScale, "zero second moment under a nonzero gradient");
    }
  }
  UpdateResult r;
  r.direction = Matrix(gt.rows(), gt.cols());
  simd::kernels().adam_divide(r.direction.data(), gt.data(), d.data(), eps, gt.size());
  r.scaling = Matrix(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = std::sqrt(d.data()[i]) + eps;
    r.scaling.data()[i] = s * s;
  }
  r.scaling_exponent = 0.5;
  return r;
}

// Rotated-coordinate scaling (lambda_L,i + eps)(lambda_R,j + eps) / s, raised
// to -exponent. Full blocks use (lambda_k + eps) / s laid out in vec order.
UpdateResult kron_scaled(const ParamBlock& b, const Matrix& g, double eps, double exponent,
                         double s) {
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  UpdateResult r;
  r.scaling = Matrix(m, n);
  Matrix factor(m, n);
  if (b.full) {
    const Vector& lam = b.full->basis_eigenvalues();
    const Vector pw = linalg::shifted_power(lam, -exponent, eps);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) {
        r.scaling(i, j) = (lam[i + j * m] + eps) / s;
        factor(i, j) = pw[i + j * m] * std::pow(s, exponent);
      }
  } else {
    const Vector& ll = b.left->basis_eigenvalues();
    const Vector& lr = b.right->basis_eigenvalues();
    const Vector pl = linalg::shifted_power(ll, -exponent, eps);
    const Vector pr = linalg::shifted_power(lr, -exponent, eps);
    const double sp = std::pow(s, exponent);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        r.scaling(i, j) = (ll[i] + eps) * (lr[j] + eps) / s;
        factor(i, j) = sp * pl[i] * pr[j];
      }
  }
  r.scaling_exponent = exponent;
  r.direction = -rotate_back(b, hadamard(rotate_forward(b, g), factor));
  return r;
}

}  // namespace

UpdateResult adam_direction(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg) {
  return adam_type(g, block.correction, cfg.epsilon);
}

UpdateResult shampoo_update(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg) {
  require_factors(block, "shampoo_update");
  if (is_zero(g)) return zero_result(g);
  // Kronecker blocks take p/2 per side; a full block carries the whole power.
  const double e = block.full ? cfg.exponent : 0.5 * cfg.exponent;
  return kron_scaled(block, g, cfg.epsilon, e, 1.0);
}

UpdateResult shampoo2_trace_update(const ParamBlock& block, const Matrix& g,
                                   const OptimizerConfig& cfg) {
  require_factors(block, "shampoo2_trace_update");
  if (is_zero(g)) return zero_result(g);
  if (block.full) return kron_scaled(block, g, cfg.epsilon, cfg.exponent, 1.0);

  const double tl = trace(block.left->stat().matrix());
  const double tr = trace(block.right->stat().matrix());
  if (!(tl > 0)) throw Error(ErrorKind::ZeroTrace, "tr(L) = 0 with a nonzero gradient");
  if (std::abs(tl - tr) > 1e-8 * (1.0 + tl)) {
    throw Error(ErrorKind::InvalidMatrix,
                "factor traces disagree: " + std::to_string(tl) + " vs " + std::to_string(tr));
  }
  return kron_scaled(block, g, cfg.epsilon, cfg.exponent, tl);
}

UpdateResult eshampoo_update(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg) {
  require_factors(block, "eshampoo_update");
  if (is_zero(g)) return zero_result(g);
  UpdateResult r = adam_type(rotate_forward(block, g), block.correction, cfg.epsilon);
  r.direction = rotate_back(block, r.direction);
  return r;
}

UpdateResult precondition(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg) {
  if (g.rows() != block.rows() || g.cols() != block.cols()) {
    throw Error(ErrorKind::DimError, "gradient shape does not match parameter block");
  }
  switch (cfg.variant) {
    case Variant::adam: {
      if (is_zero(g)) return zero_result(g);
      return adam_direction(block, g, cfg);
    }
    case Variant::shampoo: return shampoo_update(block, g, cfg);
    case Variant::shampoo2_trace: return shampoo2_trace_update(block, g, cfg);
    case Variant::eshampoo: return eshampoo_update(block, g, cfg);
    case Variant::shampoo_grafted: {
      UpdateResult sh = shampoo_update(block, g, cfg);
      if (sh.zero_update) return sh;
      UpdateResult ad = adam_direction(block, g, cfg);
      const double gn = frobenius_norm(ad.direction);
      ad.direction = graft_rescale(sh.direction, ad.direction);
      ad.graft_norm = gn;
      ad.zero_update = frobenius_norm(ad.direction) == 0.0;
      return ad;
    }
  }
  throw Error(ErrorKind::ConfigError, "unhandled variant");
}

namespace {

void accumulate_factors(ParamBlock& b, const Matrix& g, double beta2) {
  if (b.full) {
    const Vector v = vec(g);
    b.full->ema_update(SymMatrix(outer(v, v)), beta2);
  } else if (b.left) {
    b.left->ema_update(gram_rows(g), beta2);
    b.right->ema_update(gram_cols(g), beta2);
  }
}

Matrix squared(const Matrix& a) { return hadamard(a, a); }

// diag(Q^T C Q) of a PSD C can round to -1e-17 or so; sqrt would turn that into NaN.
Matrix nonnegative(Matrix d) {
  for (double& x : d.values()) x = std::max(x, 0.0);
  return d;
}

void carry_correction(ParamBlock& b, const Matrix* old_full, const Matrix* old_left,
                      const Matrix* old_right) {
  if (b.full) {
    const Matrix t = squared(transition_matrix(b.full->basis(), *old_full));
    b.correction = unvec(matvec(t, vec(b.correction)), b.rows(), b.cols());
    return;
  }
  const Matrix tl = squared(transition_matrix(b.left->basis(), *old_left));
  const Matrix tr = squared(transition_matrix(b.right->basis(), *old_right));
  b.correction = matmul_nt(matmul(tl, b.correction), tr);
}

}  // namespace

StepReport step(ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg,
                std::int64_t step_index) {
  if (g.rows() != block.rows() || g.cols() != block.cols()) {
    throw Error(ErrorKind::DimError, "gradient shape does not match parameter block");
  }
  if (!all_finite(g)) throw Error(ErrorKind::InvalidMatrix, "non-finite gradient");

  accumulate_factors(block, g, cfg.beta2);
  for (const auto* f : {&block.left, &block.right, &block.full}) {
    if (*f && !all_finite((*f)->stat().matrix())) {
      throw Error(ErrorKind::NonFiniteUpdate,
                  "factor statistic overflowed at step " + std::to_string(step_index));
    }
  }

  const bool carry = cfg.variant == Variant::eshampoo && cfg.correction == CorrectionMode::basis_aware;
  std::optional<Matrix> old_full, old_left, old_right;
  if (carry) {
    if (block.full) old_full = block.full->basis();
    if (block.left) old_left = block.left->basis();
    if (block.right) old_right = block.right->basis();
  }

  StepReport report;
  bool basis_changed = false;
  auto refresh = [&](std::optional<FactorState>& f, std::string_view name) {
    if (!f) return;
    const RefreshDecision d = f->maybe_refresh(cfg.policy, step_index);
    basis_changed = basis_changed || d.basis_changed();
    report.factors.push_back({name, d, f->eig_count(), f->qr_iter_count()});
  };
  refresh(block.left, "left");
  refresh(block.right, "right");
  refresh(block.full, "full");

  const double b3 = cfg.effective_beta3();
  switch (cfg.variant) {
    case Variant::adam:
    case Variant::shampoo_grafted:
      simd::kernels().square_ema(block.correction.data(), g.data(), b3, g.size());
      break;
    case Variant::eshampoo:
      if (cfg.correction == CorrectionMode::oracle_optimal) {
        block.tracked->update(vec(g));
        block.correction = nonnegative(unvec(
            oracle::optimal_correction(block.tracked->c(), basis_kron(block)), block.rows(), block.cols()));
      } else {
        if (carry && basis_changed) {
          carry_correction(block, old_full ? &*old_full : nullptr, old_left ? &*old_left : nullptr,
                           old_right ? &*old_right : nullptr);
        }
        const Matrix gt = rotate_forward(block, g);
        simd::kernels().square_ema(block.correction.data(), gt.data(), b3, gt.size());
      }
      break;
    case Variant::shampoo:
    case Variant::shampoo2_trace:
      break;
  }

  const UpdateResult u = precondition(block, g, cfg);
  if (!all_finite(u.direction)) {
    throw Error(ErrorKind::NonFiniteUpdate, "non-finite update at step " + std::to_string(step_index));
  }

  const double lr = cfg.schedule.at(step_index);
  const Matrix before = block.weight;
  if (cfg.weight_decay > 0.0) block.weight -= (lr * cfg.weight_decay) * block.weight;
  block.weight += lr * u.direction;
  ++block.step_count;

  report.lr = lr;
  report.update_norm = frobenius_norm(u.direction);
  report.applied_norm = frobenius_norm(block.weight - before);
  report.graft_norm = u.graft_norm;
  report.zero_update = u.zero_update;
  return report;
}

void set_idealized_state(ParamBlock& block, const SymMatrix& c_full, const OptimizerConfig& cfg) {
  const std::size_t m = block.rows();
  const std::size_t n = block.cols();
  if (c_full.dim() != m * n) throw Error(ErrorKind::DimError, "idealized statistic shape");
  if (block.full) {
    block.full->set_stat(c_full);
    block.full->recompute();
  } else if (block.left) {
    block.left->set_stat(oracle::partial_trace_left(c_full, m, n));
    block.right->set_stat(oracle::partial_trace_right(c_full, m, n));
    block.left->recompute();
    block.right->recompute();
  }
  switch (cfg.variant) {
    case Variant::adam:
    case Variant::shampoo_grafted:
      block.correction = unvec(diag(c_full.matrix()), m, n);
      break;
    case Variant::eshampoo:
      block.correction = nonnegative(unvec(oracle::optimal_correction(c_full, basis_kron(block)), m, n));
      break;
    case Variant::shampoo:
    case Variant::shampoo2_trace:
      break;
  }
}

StepReport idealized_step(ParamBlock& block, const Matrix& g, const SymMatrix& c_full,
                          const OptimizerConfig& cfg, std::int64_t step_index,
                          UpdateResult* detail) {
  set_idealized_state(block, c_full, cfg);
  UpdateResult u = precondition(block, g, cfg);
  if (!all_finite(u.direction)) {
    throw Error(ErrorKind::NonFiniteUpdate, "non-finite update at step " + std::to_string(step_index));
  }
  StepReport report;
  report.lr = cfg.schedule.at(step_index);
  const Matrix before = block.weight;
  if (cfg.weight_decay > 0.0) block.weight -= (report.lr * cfg.weight_decay) * block.weight;
  block.weight += report.lr * u.direction;
  ++block.step_count;
  report.update_norm = frobenius_norm(u.direction);
  report.applied_norm = frobenius_norm(block.weight - before);
  report.graft_norm = u.graft_norm;
  report.zero_update = u.zero_update;
  if (detail) *detail = std::move(u);
  return report;
}

}  // namespace kronopt
