#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "kronopt/factor_state.hpp"
#include "kronopt/matrix.hpp"
#include "kronopt/oracle.hpp"

namespace kronopt {

enum class Variant { adam, shampoo, shampoo_grafted, shampoo2_trace, eshampoo };
enum class CorrectionMode { soap_ema, basis_aware, oracle_optimal };

std::string_view to_string(Variant v);
std::string_view to_string(CorrectionMode c);
Variant parse_variant(std::string_view name);
CorrectionMode parse_correction_mode(std::string_view name);

struct LrSchedule {
  enum class Kind { constant, linear_warmup_cosine };
  Kind kind = Kind::constant;
  double base_lr = 1e-3;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;

  /// Step size for 1-based step t. Warmup ramps linearly to base_lr at
  /// t = warmup_steps, then cosine-decays to 0 at t = total_steps.
  double at(std::int64_t t) const;
  void validate() const;
};

struct OptimizerConfig {
  Variant variant = Variant::eshampoo;
  CorrectionMode correction = CorrectionMode::soap_ema;
  LrSchedule schedule;
  double beta2 = 0.999;
  std::optional<double> beta3;  // correction / grafting EMA, defaults to beta2
  double epsilon = 1e-10;
  double exponent = 0.5;  // p; Adam-type element-wise scalings always use the square root
  double weight_decay = 0.0;
  RefreshPolicy policy;
  // Blocks with m*n at or below this get one full-matrix factor; 0 disables.
  std::size_t max_preconditioner_dim = 64;

  double effective_beta3() const { return beta3.value_or(beta2); }
  void validate() const;
};

/// One trainable matrix (vectors are n x 1) with its optimizer state.
struct ParamBlock {
  Matrix weight;
  std::optional<FactorState> left;   // m x m
  std::optional<FactorState> right;  // n x n
  std::optional<FactorState> full;   // mn x mn, exclusive with left/right
  Matrix correction;                 // m x n, entries >= 0; vec layout for full blocks
  std::optional<oracle::FullMatrixState> tracked;  // oracle_optimal only
  std::int64_t step_count = 0;

  static ParamBlock create(Matrix weight, const OptimizerConfig& cfg);

  std::size_t rows() const noexcept { return weight.rows(); }
  std::size_t cols() const noexcept { return weight.cols(); }
  bool is_full() const noexcept { return full.has_value(); }
};

struct AdamResult {
  Matrix d;
  Matrix u;
};

/// D' = beta3 D + (1 - beta3) G^2, U = -G / (sqrt(D') + eps). Throws
/// DivergentScale if a denominator is zero where G is not.
AdamResult adam_update(const Matrix& d, const Matrix& g, double beta3, double eps);

/// (|U_graft| / |U_shampoo|) U_shampoo, or zero when U_shampoo is zero.
Matrix graft_rescale(const Matrix& u_shampoo, const Matrix& u_graft);

/// Preconditioned direction plus the element-wise scaling that realises it in
/// the rotated coordinates: |U|_F is bracketed by scaling^{-scaling_exponent}.
struct UpdateResult {
  Matrix direction;
  Matrix scaling;
  double scaling_exponent = 0.5;
  std::optional<double> graft_norm;
  bool zero_update = false;
};

/// Direction from the block's current (possibly stale) state. Does not touch
/// any statistic; the step() pipeline runs accumulation and refresh first.
UpdateResult shampoo_update(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg);
UpdateResult shampoo2_trace_update(const ParamBlock& block, const Matrix& g,
                                   const OptimizerConfig& cfg);
UpdateResult eshampoo_update(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg);
/// Element-wise Adam direction with the block's current correction as D.
UpdateResult adam_direction(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg);

/// Direction for cfg.variant, with grafting applied for shampoo_grafted.
UpdateResult precondition(const ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg);

struct FactorReport {
  std::string_view name;  // "left", "right" or "full"
  RefreshDecision decision;
  std::int64_t eig_count = 0;
  std::int64_t qr_iter_count = 0;
};

struct StepReport {
  double lr = 0.0;
  double update_norm = 0.0;  // |U|_F before the step size
  double applied_norm = 0.0;  // |W' - W|_F
  std::optional<double> graft_norm;
  bool zero_update = false;
  std::vector<FactorReport> factors;
};

/// One optimizer step at 1-based `step_index`: factor EMAs, basis refresh,
/// correction accumulation, direction, decoupled weight decay, W += lr U.
/// Throws NonFiniteUpdate if the direction is not finite.
StepReport step(ParamBlock& block, const Matrix& g, const OptimizerConfig& cfg,
                std::int64_t step_index);

/// Loads the exact statistics implied by a known C = E[g g^T]: factors
/// become its partial traces with exact eigenbases, and the correction
/// becomes the Frobenius-optimal diagonal (diag C for Adam-type scalings).
void set_idealized_state(ParamBlock& block, const SymMatrix& c_full, const OptimizerConfig& cfg);

/// Direction from idealized state followed by W += lr U, without touching
/// any statistic. Returns the same report shape as step().
StepReport idealized_step(ParamBlock& block, const Matrix& g, const SymMatrix& c_full,
                          const OptimizerConfig& cfg, std::int64_t step_index,
                          UpdateResult* detail = nullptr);

}  // namespace kronopt
