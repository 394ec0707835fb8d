#pragma once

// Dense 64-bit linear algebra, activations and seeded randomness shared by
// every other part of the library.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cqa {

using Vector = std::vector<double>;

/// Row-major dense matrix. Vectors that live inside a ParamSet (biases,
/// output projections) are stored as single-column or single-row matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  std::string shape() const;
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  bool operator==(const Matrix&) const = default;
};

/// Seeded generator. Draws are derived from the raw 64-bit stream so the
/// sequence does not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

double sigmoid(double x);
double tanh_act(double x);

/// Numerically stable softmax (max-subtracted). Throws on empty input.
Vector softmax(std::span<const double> scores);

/// m · v with shape checking.
Vector matvec(const Matrix& m, std::span<const double> v);

// Unchecked kernels used on hot paths; callers guarantee shapes.
void matvec_acc(const Matrix& m, std::span<const double> v, std::span<double> out);
void matvec_t_acc(const Matrix& m, std::span<const double> v, std::span<double> out);
void outer_acc(Matrix& m, std::span<const double> left, std::span<const double> right);

/// Diagonal-only variants for the restricted peephole mode.
void diag_acc(const Matrix& m, std::span<const double> v, std::span<double> out);
void diag_outer_acc(Matrix& m, std::span<const double> left, std::span<const double> right);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Vector concat(std::initializer_list<std::span<const double>> parts);

/// Inverted-dropout mask: each entry 0 with probability `rate`, otherwise
/// 1 / (1 - rate).
Vector dropout_mask(std::size_t n, double rate, Rng& rng);

/// Entries i.i.d. uniform in [-scale, scale].
Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, Rng& rng);

}  // namespace cqa
