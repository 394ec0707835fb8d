#include "cqa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cqa {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw std::invalid_argument("ragged matrix rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::string Matrix::shape() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Matrix::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index on empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tanh_act(double x) { return std::tanh(x); }

Vector softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("empty softmax");
  const double top = *std::max_element(scores.begin(), scores.end());
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

Vector matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols != v.size()) {
    throw std::invalid_argument("matvec dimension mismatch: matrix " + m.shape() +
                                " vs vector " + std::to_string(v.size()));
  }
  Vector out(m.rows, 0.0);
  matvec_acc(m, v, out);
  return out;
}

void matvec_acc(const Matrix& m, std::span<const double> v, std::span<double> out) {
  const double* w = m.data.data();
  const std::size_t n = m.cols;
  for (std::size_t r = 0; r < m.rows; ++r, w += n) out[r] += dot({w, n}, v);
}

void matvec_t_acc(const Matrix& m, std::span<const double> v, std::span<double> out) {
  const double* w = m.data.data();
  const std::size_t n = m.cols;
  for (std::size_t r = 0; r < m.rows; ++r, w += n) {
    const double a = v[r];
    if (a == 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) out[c] += a * w[c];
  }
}

void outer_acc(Matrix& m, std::span<const double> left, std::span<const double> right) {
  double* w = m.data.data();
  const std::size_t n = m.cols;
  for (std::size_t r = 0; r < m.rows; ++r, w += n) {
    const double a = left[r];
    if (a == 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) w[c] += a * right[c];
  }
}

void diag_acc(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows; ++i) out[i] += m(i, i) * v[i];
}

void diag_outer_acc(Matrix& m, std::span<const double> left, std::span<const double> right) {
  for (std::size_t i = 0; i < m.rows; ++i) m(i, i) += left[i] * right[i];
}

// Four independent partial sums let the compiler vectorize without
// reassociation flags; the summation order stays fixed.
double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector concat(std::initializer_list<std::span<const double>> parts) {
  std::size_t n = 0;
  for (auto p : parts) n += p.size();
  Vector out;
  out.reserve(n);
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Vector dropout_mask(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Vector mask(n, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.bernoulli(rate) ? 0.0 : keep;
  return mask;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("init_uniform: nonpositive dimensions " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!(scale > 0.0)) throw std::invalid_argument("init_uniform: scale must be positive");
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.uniform(-scale, scale);
  return m;
}

}  // namespace cqa
