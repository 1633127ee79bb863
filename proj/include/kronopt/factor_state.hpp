#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "kronopt/linalg.hpp"
#include "kronopt/matrix.hpp"

namespace kronopt {

enum class RefreshMode { fixed_eigh, adaptive_eigh, adaptive_qr, frozen };

std::string_view to_string(RefreshMode mode);
RefreshMode parse_refresh_mode(std::string_view name);

/// When and how a factor's eigenbasis is recomputed.
///   fixed_eigh     full eigendecomposition every `frequency` steps
///   adaptive_eigh  every `frequency` steps, recompute only if the stale
///                  basis leaves relative off-diagonal mass above `tau`
///   adaptive_qr    every `frequency` steps, warm-started QR iteration (at
///                  most `max_qr_iters`), full eigendecomposition on failure
///   frozen         eigendecomposition once, never again
struct RefreshPolicy {
  RefreshMode mode = RefreshMode::fixed_eigh;
  double tau = 0.1;
  int frequency = 1;
  int max_qr_iters = 10;

  /// Throws ConfigError unless 0 <= tau < 1, frequency >= 1, max_qr_iters >= 1.
  void validate() const;
};

enum class Decision { NoCheck, Skipped, Recomputed, QRRefined };

std::string_view to_string(Decision d);

struct RefreshDecision {
  Decision kind = Decision::NoCheck;
  std::optional<double> criterion;  // relative off-diagonal mass of the stale basis
  int qr_iters = 0;

  bool basis_changed() const { return kind == Decision::Recomputed || kind == Decision::QRRefined; }
};

/// One Kronecker factor: EMA statistic plus its cached (possibly stale)
/// eigenbasis. Owned by exactly one parameter block.
class FactorState {
 public:
  explicit FactorState(std::size_t dim);
  /// Warm state with a given statistic and basis; the basis counts as
  /// already computed, so the first-call eigendecomposition is not forced.
  FactorState(SymMatrix stat, Matrix basis);

  std::size_t dim() const noexcept { return stat_.dim(); }
  const SymMatrix& stat() const noexcept { return stat_; }
  const Matrix& basis() const noexcept { return basis_; }
  const Vector& basis_eigenvalues() const noexcept { return eigenvalues_; }
  std::int64_t eig_count() const noexcept { return eig_count_; }
  std::int64_t qr_iter_count() const noexcept { return qr_iter_count_; }
  std::int64_t steps_since_check() const noexcept { return steps_since_check_; }
  std::optional<double> last_criterion() const noexcept { return last_criterion_; }
  bool initialized() const noexcept { return initialized_; }

  /// stat <- beta2 * stat + (1 - beta2) * outer
  void ema_update(const SymMatrix& outer, double beta2);

  /// Replaces the statistic outright (idealized runs with known expectations).
  void set_stat(SymMatrix stat);

  /// Applies the refresh policy for 1-based `step`. The very first call with
  /// a non-zero statistic always performs a full eigendecomposition.
  RefreshDecision maybe_refresh(const RefreshPolicy& policy, std::int64_t step);

  /// Unconditional eigendecomposition of the current statistic.
  void recompute();

 private:
  void adopt_basis(Matrix basis);

  SymMatrix stat_;
  Matrix basis_;
  Vector eigenvalues_;
  std::int64_t steps_since_check_ = 0;
  std::int64_t eig_count_ = 0;
  std::int64_t qr_iter_count_ = 0;
  std::optional<double> last_criterion_;
  bool initialized_ = false;
};

/// Q_new^T Q_old, the change of coordinates between two eigenbases.
Matrix transition_matrix(const Matrix& q_new, const Matrix& q_old);

}  // namespace kronopt
