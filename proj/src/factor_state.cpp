#include "kronopt/factor_state.hpp"

#include <string>

#include "kronopt/error.hpp"

namespace kronopt {

std::string_view to_string(RefreshMode mode) {
  switch (mode) {
    case RefreshMode::fixed_eigh: return "fixed_eigh";
    case RefreshMode::adaptive_eigh: return "adaptive_eigh";
    case RefreshMode::adaptive_qr: return "adaptive_qr";
    case RefreshMode::frozen: return "frozen";
  }
  return "unknown";
}

RefreshMode parse_refresh_mode(std::string_view name) {
  if (name == "fixed_eigh") return RefreshMode::fixed_eigh;
  if (name == "adaptive_eigh") return RefreshMode::adaptive_eigh;
  if (name == "adaptive_qr") return RefreshMode::adaptive_qr;
  if (name == "frozen") return RefreshMode::frozen;
  throw Error(ErrorKind::ConfigError, "unknown refresh mode '" + std::string(name) + "'");
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::NoCheck: return "NoCheck";
    case Decision::Skipped: return "Skipped";
    case Decision::Recomputed: return "Recomputed";
    case Decision::QRRefined: return "QRRefined";
  }
  return "unknown";
}

void RefreshPolicy::validate() const {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorKind::ConfigError, "tau must lie in [0, 1), got " + std::to_string(tau));
  }
  if (frequency < 1) throw Error(ErrorKind::ConfigError, "frequency must be >= 1");
  if (max_qr_iters < 1) throw Error(ErrorKind::ConfigError, "max_qr_iters must be >= 1");
}

FactorState::FactorState(std::size_t dim)
    : stat_(dim), basis_(Matrix::identity(dim)), eigenvalues_(dim, 0.0) {}

FactorState::FactorState(SymMatrix stat, Matrix basis)
    : stat_(std::move(stat)), basis_(std::move(basis)), initialized_(true) {
  if (basis_.rows() != stat_.dim() || basis_.cols() != stat_.dim()) {
    throw Error(ErrorKind::DimError, "factor basis does not match statistic");
  }
  eigenvalues_ = diag(congruence_tn(basis_, stat_).matrix());
}

void FactorState::ema_update(const SymMatrix& outer, double beta2) {
  stat_ = stat_.ema(outer, beta2);
}

void FactorState::set_stat(SymMatrix stat) {
  if (stat.dim() != stat_.dim()) throw Error(ErrorKind::DimError, "set_stat dimension mismatch");
  stat_ = std::move(stat);
}

void FactorState::adopt_basis(Matrix basis) {
  basis_ = std::move(basis);
  eigenvalues_ = diag(congruence_tn(basis_, stat_).matrix());
}

void FactorState::recompute() {
  adopt_basis(linalg::sym_eig(stat_).basis);
  ++eig_count_;
  initialized_ = true;
}

RefreshDecision FactorState::maybe_refresh(const RefreshPolicy& policy, std::int64_t step) {
  if (step < 1) throw Error(ErrorKind::ConfigError, "refresh step must be >= 1");
  ++steps_since_check_;
  RefreshDecision out;

  const bool zero_stat = frobenius_norm(stat_.matrix()) == 0.0;
  if (!initialized_) {
    steps_since_check_ = 0;
    if (zero_stat) {
      out.kind = Decision::Skipped;
      return out;
    }
    recompute();
    out.kind = Decision::Recomputed;
    return out;
  }

  if (policy.mode == RefreshMode::frozen || step % policy.frequency != 0) return out;
  steps_since_check_ = 0;

  if (zero_stat) {
    out.kind = Decision::Skipped;
    return out;
  }

  switch (policy.mode) {
    case RefreshMode::fixed_eigh: {
      out.criterion = linalg::offdiag_ratio(congruence_tn(basis_, stat_));
      recompute();
      out.kind = Decision::Recomputed;
      break;
    }
    case RefreshMode::adaptive_eigh: {
      const SymMatrix rotated = congruence_tn(basis_, stat_);
      out.criterion = linalg::offdiag_ratio(rotated);
      if (*out.criterion <= policy.tau) {
        eigenvalues_ = diag(rotated.matrix());
        out.kind = Decision::Skipped;
      } else {
        recompute();
        out.kind = Decision::Recomputed;
      }
      break;
    }
    case RefreshMode::adaptive_qr: {
      out.criterion = linalg::offdiag_ratio(congruence_tn(basis_, stat_));
      linalg::WarmQrResult qr =
          linalg::warm_qr_refine(stat_, basis_, policy.tau, policy.max_qr_iters);
      qr_iter_count_ += qr.iterations;
      out.qr_iters = qr.iterations;
      if (qr.iterations == 0) {
        eigenvalues_ = diag(qr.rotated.matrix());
        out.kind = Decision::Skipped;
      } else if (qr.converged) {
        basis_ = std::move(qr.basis);
        eigenvalues_ = diag(qr.rotated.matrix());
        out.kind = Decision::QRRefined;
      } else {
        recompute();
        out.kind = Decision::Recomputed;
      }
      break;
    }
    case RefreshMode::frozen:
      break;
  }
  last_criterion_ = out.criterion;
  return out;
}

Matrix transition_matrix(const Matrix& q_new, const Matrix& q_old) {
  if (q_new.rows() != q_old.rows() || q_new.cols() != q_old.cols() || !q_new.is_square()) {
    throw Error(ErrorKind::DimError, "transition_matrix: basis shapes differ");
  }
  return matmul_tn(q_new, q_old);
}

}  // namespace kronopt
