#include "kronopt/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kronopt/error.hpp"
#include "kronopt/linalg.hpp"

namespace kronopt::tasks {

namespace {

enum Stream : std::uint64_t {
  kProblem = 1,
  kInit = 2,
  kBatch = 3,
  kData = 4,
};

const Matrix& single(const Params& p, std::size_t rows, std::size_t cols) {
  if (p.size() != 1 || p[0].rows() != rows || p[0].cols() != cols) {
    throw Error(ErrorKind::DimError, "parameter list does not match task shapes");
  }
  return p[0];
}

// Distinct indices in [0, total): a seeded partial Fisher-Yates shuffle,
// returned sorted so the summation order is fixed.
std::vector<std::size_t> sample_rows(std::size_t total, std::size_t batch, std::uint64_t seed) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  if (batch == 0 || batch >= total) return idx;
  auto rng = make_rng(seed, kBatch);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = scale * nd(rng);
  return m;
}

SymMatrix random_spd(std::size_t dim, std::mt19937_64& rng, double shift) {
  const Matrix m = gaussian_matrix(dim, dim, rng);
  Matrix a = matmul_tn(m, m);
  for (std::size_t i = 0; i < dim; ++i) a(i, i) += shift;
  return SymMatrix(a);
}

Matrix random_orthogonal(std::size_t dim, std::mt19937_64& rng) {
  return linalg::qr_decompose(gaussian_matrix(dim, dim, rng)).q;
}

double params_norm(const Params& p) {
  double s = 0.0;
  for (const Matrix& m : p) {
    const double n = frobenius_norm(m);
    s += n * n;
  }
  return std::sqrt(s);
}

// ---- kron_quadratic -------------------------------------------------------

KronQuadratic::KronQuadratic(std::size_t m, std::size_t n, std::uint64_t seed, double noise)
    : noise_(noise) {
  if (m == 0 || n == 0) throw Error(ErrorKind::ConfigError, "kron_quadratic needs m, n >= 1");
  if (!(noise >= 0.0)) throw Error(ErrorKind::ConfigError, "noise must be >= 0");
  auto rng = make_rng(seed, kProblem);
  a_ = random_spd(m, rng);
  b_ = random_spd(n, rng);
  target_ = gaussian_matrix(m, n, rng);
}

KronQuadratic::KronQuadratic(SymMatrix a, SymMatrix b, Matrix target, double noise)
    : a_(std::move(a)), b_(std::move(b)), target_(std::move(target)), noise_(noise) {
  if (a_.dim() != target_.rows() || b_.dim() != target_.cols()) {
    throw Error(ErrorKind::DimError, "kron_quadratic: A, B and W* shapes disagree");
  }
}

Params KronQuadratic::initial_params(std::uint64_t seed) const {
  auto rng = make_rng(seed, kInit);
  return {gaussian_matrix(target_.rows(), target_.cols(), rng)};
}

double KronQuadratic::loss(const Params& p) const {
  const Matrix d = single(p, target_.rows(), target_.cols()) - target_;
  return 0.5 * frobenius_dot(d, matmul(matmul(a_.matrix(), d), b_.matrix()));
}

Params KronQuadratic::grad(const Params& p) const {
  const Matrix d = single(p, target_.rows(), target_.cols()) - target_;
  return {matmul(matmul(a_.matrix(), d), b_.matrix())};
}

Matrix KronQuadratic::noise_matrix(std::uint64_t batch_seed) const {
  auto rng = make_rng(batch_seed, kBatch);
  return gaussian_matrix(target_.rows(), target_.cols(), rng, noise_);
}

double KronQuadratic::batch_loss(const Params& p, std::uint64_t batch_seed) const {
  double l = loss(p);
  if (noise_ > 0.0) l += frobenius_dot(noise_matrix(batch_seed), p[0]);
  return l;
}

Params KronQuadratic::batch_grad(const Params& p, std::uint64_t batch_seed) const {
  Params g = grad(p);
  if (noise_ > 0.0) g[0] += noise_matrix(batch_seed);
  return g;
}

SymMatrix KronQuadratic::gradient_covariance(const Params& p) const {
  const Vector gbar = vec(grad(p)[0]);
  Matrix c = outer(gbar, gbar);
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += noise_ * noise_;
  return SymMatrix(c);
}

// ---- matrix_regression ----------------------------------------------------

MatrixRegression::MatrixRegression(std::size_t m, std::size_t n, std::size_t k,
                                   std::uint64_t seed, std::size_t batch)
    : batch_(batch) {
  if (m == 0 || n == 0 || k == 0) {
    throw Error(ErrorKind::ConfigError, "matrix_regression needs m, n, k >= 1");
  }
  auto rng = make_rng(seed, kProblem);
  x_ = gaussian_matrix(k, m, rng, 1.0 / std::sqrt(static_cast<double>(k)));
  y_ = gaussian_matrix(k, n, rng);
}

MatrixRegression::MatrixRegression(Matrix x, Matrix y, std::size_t batch)
    : x_(std::move(x)), y_(std::move(y)), batch_(batch) {
  if (x_.rows() != y_.rows()) throw Error(ErrorKind::DimError, "matrix_regression: X, Y rows differ");
}

Params MatrixRegression::initial_params(std::uint64_t) const {
  return {Matrix(x_.cols(), y_.cols())};
}

std::vector<std::size_t> MatrixRegression::rows_for(std::uint64_t batch_seed) const {
  return sample_rows(x_.rows(), batch_, batch_seed);
}

double MatrixRegression::loss_rows(const Matrix& w, const std::vector<std::size_t>& rows) const {
  const double scale = static_cast<double>(x_.rows()) / static_cast<double>(rows.size());
  double s = 0.0;
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double pred = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) pred += x_(r, i) * w(i, j);
      const double e = pred - y_(r, j);
      s += e * e;
    }
  }
  return 0.5 * scale * s;
}

Matrix MatrixRegression::grad_rows(const Matrix& w, const std::vector<std::size_t>& rows) const {
  const double scale = static_cast<double>(x_.rows()) / static_cast<double>(rows.size());
  Matrix g(w.rows(), w.cols());
  Vector resid(w.cols());
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double pred = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) pred += x_(r, i) * w(i, j);
      resid[j] = pred - y_(r, j);
    }
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) g(i, j) += x_(r, i) * resid[j];
  }
  return scale * g;
}

double MatrixRegression::loss(const Params& p) const {
  const Matrix r = matmul(x_, single(p, x_.cols(), y_.cols())) - y_;
  const double n = frobenius_norm(r);
  return 0.5 * n * n;
}

Params MatrixRegression::grad(const Params& p) const {
  const Matrix r = matmul(x_, single(p, x_.cols(), y_.cols())) - y_;
  return {matmul_tn(x_, r)};
}

double MatrixRegression::batch_loss(const Params& p, std::uint64_t batch_seed) const {
  return loss_rows(single(p, x_.cols(), y_.cols()), rows_for(batch_seed));
}

Params MatrixRegression::batch_grad(const Params& p, std::uint64_t batch_seed) const {
  return {grad_rows(single(p, x_.cols(), y_.cols()), rows_for(batch_seed))};
}

// ---- mlp_toy --------------------------------------------------------------

Dataset make_mixture(std::size_t points, int classes, int clusters, std::uint64_t seed) {
  if (points == 0 || classes < 2 || clusters < 1) {
    throw Error(ErrorKind::ConfigError, "mixture needs points >= 1, classes >= 2, clusters >= 1");
  }
  auto rng = make_rng(seed, kData);
  std::uniform_real_distribution<double> center(-3.0, 3.0);
  std::normal_distribution<double> nd(0.0, 0.6);
  std::vector<std::array<double, 2>> centers(static_cast<std::size_t>(classes * clusters));
  for (auto& c : centers) c = {center(rng), center(rng)};

  Dataset d;
  d.num_classes = classes;
  d.x.reserve(points);
  d.label.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    const int blob = static_cast<int>((i / static_cast<std::size_t>(classes)) %
                                      static_cast<std::size_t>(clusters));
    const auto& c = centers[static_cast<std::size_t>(label * clusters + blob)];
    d.x.push_back({c[0] + nd(rng), c[1] + nd(rng)});
    d.label.push_back(label);
  }
  return d;
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out.precision(17);
  out << "x1,x2,label\n";
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    out << d.x[i][0] << ',' << d.x[i][1] << ',' << d.label[i] << '\n';
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("x1,x2,label", 0) != 0) {
    throw Error(ErrorKind::ConfigError, path.string() + ": expected header x1,x2,label");
  }
  Dataset d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f1, f2, f3;
    if (!std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') || !std::getline(ss, f3)) {
      throw Error(ErrorKind::ConfigError, path.string() + ":" + std::to_string(lineno) +
                                              ": expected three fields");
    }
    try {
      std::size_t used = 0;
      const int label = std::stoi(f3, &used);
      if (label < 0) throw std::invalid_argument("negative label");
      d.x.push_back({std::stod(f1), std::stod(f2)});
      d.label.push_back(label);
      d.num_classes = std::max(d.num_classes, label + 1);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, path.string() + ":" + std::to_string(lineno) +
                                              ": malformed row '" + line + "'");
    }
  }
  if (d.x.empty()) throw Error(ErrorKind::ConfigError, path.string() + ": no data rows");
  d.num_classes = std::max(d.num_classes, 2);
  return d;
}

MlpToy::MlpToy(std::size_t hidden, std::uint64_t seed, std::size_t batch)
    : MlpToy(make_mixture(2048, 4, 3, seed), hidden, batch) {}

MlpToy::MlpToy(Dataset data, std::size_t hidden, std::size_t batch)
    : data_(std::move(data)), hidden_(hidden), batch_(batch) {
  if (hidden_ == 0) throw Error(ErrorKind::ConfigError, "mlp_toy needs hidden >= 1");
  if (data_.x.size() != data_.label.size() || data_.x.empty()) {
    throw Error(ErrorKind::ConfigError, "mlp_toy: empty or inconsistent dataset");
  }
}

std::vector<Shape> MlpToy::shapes() const {
  const auto c = static_cast<std::size_t>(data_.num_classes);
  return {{hidden_, 2}, {hidden_, 1}, {c, hidden_}, {c, 1}};
}

Params MlpToy::initial_params(std::uint64_t seed) const {
  auto rng = make_rng(seed, kInit);
  const auto c = static_cast<std::size_t>(data_.num_classes);
  return {gaussian_matrix(hidden_, 2, rng, 1.0 / std::sqrt(2.0)), Matrix(hidden_, 1),
          gaussian_matrix(c, hidden_, rng, 1.0 / std::sqrt(static_cast<double>(hidden_))),
          Matrix(c, 1)};
}

std::vector<std::size_t> MlpToy::rows_for(std::uint64_t batch_seed) const {
  return sample_rows(data_.x.size(), batch_, batch_seed);
}

double MlpToy::forward_backward(const Params& p, const std::vector<std::size_t>& rows,
                                Params* grads) const {
  const auto sh = shapes();
  if (p.size() != sh.size()) throw Error(ErrorKind::DimError, "mlp_toy expects 4 parameters");
  for (std::size_t i = 0; i < sh.size(); ++i) {
    if (p[i].rows() != sh[i].first || p[i].cols() != sh[i].second) {
      throw Error(ErrorKind::DimError, "mlp_toy parameter shape mismatch");
    }
  }
  const Matrix& w1 = p[0];
  const Matrix& b1 = p[1];
  const Matrix& w2 = p[2];
  const Matrix& b2 = p[3];
  const std::size_t h = hidden_;
  const auto c = static_cast<std::size_t>(data_.num_classes);

  if (grads) {
    grads->clear();
    for (const auto& s : sh) grads->emplace_back(s.first, s.second);
  }
  const double inv_b = 1.0 / static_cast<double>(rows.size());
  Vector act(h), logits(c), dlog(c), dact(h);
  double total = 0.0;

  for (std::size_t r : rows) {
    const auto& x = data_.x[r];
    const auto y = static_cast<std::size_t>(data_.label[r]);
    for (std::size_t i = 0; i < h; ++i) act[i] = std::tanh(w1(i, 0) * x[0] + w1(i, 1) * x[1] + b1(i, 0));
    double mx = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      double z = b2(k, 0);
      for (std::size_t i = 0; i < h; ++i) z += w2(k, i) * act[i];
      logits[k] = z;
      mx = std::max(mx, z);
    }
    double se = 0.0;
    for (std::size_t k = 0; k < c; ++k) se += std::exp(logits[k] - mx);
    const double lse = mx + std::log(se);
    total += lse - logits[y];
    if (!grads) continue;

    for (std::size_t k = 0; k < c; ++k) {
      dlog[k] = (std::exp(logits[k] - lse) - (k == y ? 1.0 : 0.0)) * inv_b;
    }
    Matrix& gw1 = (*grads)[0];
    Matrix& gb1 = (*grads)[1];
    Matrix& gw2 = (*grads)[2];
    Matrix& gb2 = (*grads)[3];
    for (std::size_t i = 0; i < h; ++i) dact[i] = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      gb2(k, 0) += dlog[k];
      for (std::size_t i = 0; i < h; ++i) {
        gw2(k, i) += dlog[k] * act[i];
        dact[i] += w2(k, i) * dlog[k];
      }
    }
    for (std::size_t i = 0; i < h; ++i) {
      const double dz = dact[i] * (1.0 - act[i] * act[i]);
      gb1(i, 0) += dz;
      gw1(i, 0) += dz * x[0];
      gw1(i, 1) += dz * x[1];
    }
  }
  return total * inv_b;
}

double MlpToy::loss(const Params& p) const {
  return forward_backward(p, sample_rows(data_.x.size(), 0, 0), nullptr);
}

Params MlpToy::grad(const Params& p) const {
  Params g;
  forward_backward(p, sample_rows(data_.x.size(), 0, 0), &g);
  return g;
}

double MlpToy::batch_loss(const Params& p, std::uint64_t batch_seed) const {
  return forward_backward(p, rows_for(batch_seed), nullptr);
}

Params MlpToy::batch_grad(const Params& p, std::uint64_t batch_seed) const {
  Params g;
  forward_backward(p, rows_for(batch_seed), &g);
  return g;
}

double MlpToy::accuracy(const Params& p) const {
  const auto c = static_cast<std::size_t>(data_.num_classes);
  std::size_t hits = 0;
  Vector act(hidden_);
  for (std::size_t r = 0; r < data_.x.size(); ++r) {
    const auto& x = data_.x[r];
    for (std::size_t i = 0; i < hidden_; ++i) {
      act[i] = std::tanh(p[0](i, 0) * x[0] + p[0](i, 1) * x[1] + p[1](i, 0));
    }
    std::size_t best = 0;
    double best_z = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      double z = p[3](k, 0);
      for (std::size_t i = 0; i < hidden_; ++i) z += p[2](k, i) * act[i];
      if (z > best_z) {
        best_z = z;
        best = k;
      }
    }
    if (static_cast<int>(best) == data_.label[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data_.x.size());
}

// ---- finite differences ---------------------------------------------------

GradCheck gradient_check(const Task& task, const Params& p, std::uint64_t batch_seed) {
  const Params g = task.batch_grad(p, batch_seed);
  Params probe = p;
  double diff2 = 0.0;
  double fd2 = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      const double theta = p[b].data()[i];
      const double h = 1e-5 * (1.0 + std::abs(theta));
      probe[b].data()[i] = theta + h;
      const double up = task.batch_loss(probe, batch_seed);
      probe[b].data()[i] = theta - h;
      const double down = task.batch_loss(probe, batch_seed);
      probe[b].data()[i] = theta;
      const double fd = (up - down) / (2.0 * h);
      const double e = fd - g[b].data()[i];
      diff2 += e * e;
      fd2 += fd * fd;
    }
  }
  const double gn = params_norm(g);
  const double denom = std::max({gn, std::sqrt(fd2), 1e-300});
  return {std::sqrt(diff2) / denom, gn};
}

}  // namespace kronopt::tasks
