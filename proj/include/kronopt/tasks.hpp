#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kronopt/matrix.hpp"

namespace kronopt::tasks {

using Params = std::vector<Matrix>;
using Shape = std::pair<std::size_t, std::size_t>;

/// splitmix64 finaliser; used to derive independent streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Standard-normal matrix from a seeded stream.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0);

/// M^T M + shift I with M standard normal.
SymMatrix random_spd(std::size_t dim, std::mt19937_64& rng, double shift = 0.1);

/// Q factor of a standard-normal matrix.
Matrix random_orthogonal(std::size_t dim, std::mt19937_64& rng);

/// Differentiable objective with minibatch stochasticity. Everything is a
/// pure function of (params, batch_seed); instances are immutable.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string_view name() const = 0;
  virtual std::vector<Shape> shapes() const = 0;
  virtual Params initial_params(std::uint64_t seed) const = 0;

  /// Deterministic full objective.
  virtual double loss(const Params& p) const = 0;
  virtual Params grad(const Params& p) const = 0;

  /// Minibatch objective and its exact gradient.
  virtual double batch_loss(const Params& p, std::uint64_t batch_seed) const = 0;
  virtual Params batch_grad(const Params& p, std::uint64_t batch_seed) const = 0;
};

/// 1/2 tr((W - W*)^T A (W - W*) B) with SPD A, B. With noise > 0 the
/// minibatch objective adds noise * <N_b, W>, N_b standard normal per batch,
/// so the stochastic gradient is A (W - W*) B + noise * N_b.
class KronQuadratic final : public Task {
 public:
  KronQuadratic(std::size_t m, std::size_t n, std::uint64_t seed, double noise = 0.0);
  /// Explicit problem data, mainly for tests.
  KronQuadratic(SymMatrix a, SymMatrix b, Matrix target, double noise = 0.0);

  std::string_view name() const override { return "kron_quadratic"; }
  std::vector<Shape> shapes() const override { return {{target_.rows(), target_.cols()}}; }
  Params initial_params(std::uint64_t seed) const override;
  double loss(const Params& p) const override;
  Params grad(const Params& p) const override;
  double batch_loss(const Params& p, std::uint64_t batch_seed) const override;
  Params batch_grad(const Params& p, std::uint64_t batch_seed) const override;

  /// E[g g^T] = gbar gbar^T + noise^2 I over vec(G).
  SymMatrix gradient_covariance(const Params& p) const;

  const SymMatrix& a() const { return a_; }
  const SymMatrix& b() const { return b_; }
  const Matrix& target() const { return target_; }
  double noise() const { return noise_; }

 private:
  Matrix noise_matrix(std::uint64_t batch_seed) const;

  SymMatrix a_;
  SymMatrix b_;
  Matrix target_;
  double noise_;
};

/// 1/2 |X W - Y|_F^2. Minibatches draw `batch` distinct rows and rescale by
/// k / batch so the minibatch objective is unbiased; batch = 0 means full.
class MatrixRegression final : public Task {
 public:
  MatrixRegression(std::size_t m, std::size_t n, std::size_t k, std::uint64_t seed,
                   std::size_t batch = 0);
  MatrixRegression(Matrix x, Matrix y, std::size_t batch = 0);

  std::string_view name() const override { return "matrix_regression"; }
  std::vector<Shape> shapes() const override { return {{x_.cols(), y_.cols()}}; }
  Params initial_params(std::uint64_t seed) const override;
  double loss(const Params& p) const override;
  Params grad(const Params& p) const override;
  double batch_loss(const Params& p, std::uint64_t batch_seed) const override;
  Params batch_grad(const Params& p, std::uint64_t batch_seed) const override;

  const Matrix& x() const { return x_; }
  const Matrix& y() const { return y_; }

 private:
  std::vector<std::size_t> rows_for(std::uint64_t batch_seed) const;
  double loss_rows(const Matrix& w, const std::vector<std::size_t>& rows) const;
  Matrix grad_rows(const Matrix& w, const std::vector<std::size_t>& rows) const;

  Matrix x_;
  Matrix y_;
  std::size_t batch_;
};

struct Dataset {
  std::vector<std::array<double, 2>> x;
  std::vector<int> label;
  int num_classes = 0;
};

/// Gaussian-mixture classification set: `classes` labels with `clusters`
/// blobs each, points assigned round-robin.
Dataset make_mixture(std::size_t points, int classes, int clusters, std::uint64_t seed);
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path);
/// Throws ConfigError on malformed input.
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Two-layer tanh MLP with softmax cross-entropy (mean over the batch).
/// Parameters: W1 (hidden x 2), b1 (hidden x 1), W2 (classes x hidden),
/// b2 (classes x 1).
class MlpToy final : public Task {
 public:
  MlpToy(std::size_t hidden, std::uint64_t seed, std::size_t batch = 64);
  MlpToy(Dataset data, std::size_t hidden, std::size_t batch = 64);

  std::string_view name() const override { return "mlp_toy"; }
  std::vector<Shape> shapes() const override;
  Params initial_params(std::uint64_t seed) const override;
  double loss(const Params& p) const override;
  Params grad(const Params& p) const override;
  double batch_loss(const Params& p, std::uint64_t batch_seed) const override;
  Params batch_grad(const Params& p, std::uint64_t batch_seed) const override;

  const Dataset& data() const { return data_; }
  double accuracy(const Params& p) const;

 private:
  std::vector<std::size_t> rows_for(std::uint64_t batch_seed) const;
  double forward_backward(const Params& p, const std::vector<std::size_t>& rows,
                          Params* grads) const;

  Dataset data_;
  std::size_t hidden_;
  std::size_t batch_;
};

struct GradCheck {
  double rel_error;  // |g_fd - g| / max(|g|, |g_fd|) over all parameters
  double grad_norm;
};

/// Central differences with h = 1e-5 (1 + |theta|) against batch_grad.
GradCheck gradient_check(const Task& task, const Params& p, std::uint64_t batch_seed);

double params_norm(const Params& p);

}  // namespace kronopt::tasks
