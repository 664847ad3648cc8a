#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace haystack {

// Error taxonomy shared by every module.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

// Eigen's vectorized kernels peel leading elements up to the next aligned
// address, so the summation order depends on where a buffer starts. Aligned
// storage keeps results bit-identical from run to run.
using Vector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

  Matrix(std::size_t rows, std::size_t cols, Vector data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw DimensionError("Matrix: dimensions must be positive");
    return rows * cols;
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

namespace detail {

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajorXd>;
using MatMap = Eigen::Map<RowMajorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

inline ConstMatMap view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
inline MatMap view(Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
inline ConstVecMap view(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}
inline VecMap view(std::span<double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded generator. The engine is std::mt19937_64, whose output sequence is
/// fixed by the C++ standard; floats are formed from the top 53 bits so the
/// stream is bit-identical across platforms (no std distributions involved).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Independent stream for (seed, stream) pairs, e.g. init vs. shuffling.
  static Rng derived(std::uint64_t seed, std::uint64_t stream) {
    return Rng(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double next_in(double lo, double hi) {
    const double r = lo + (hi - lo) * next_unit();
    return r < hi ? r : std::nextafter(hi, lo);
  }

  /// Uniform integer in [0, n), rejection sampled (no modulo bias).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ParameterError("Rng::next_below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Wx + b (b treated as zero when empty).
inline Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b = {}) {
  if (x.size() != w.cols()) {
    throw DimensionError("affine: x has length " + std::to_string(x.size()) + ", W has " +
                         std::to_string(w.cols()) + " columns");
  }
  if (!b.empty() && b.size() != w.rows()) {
    throw DimensionError("affine: b has length " + std::to_string(b.size()) + ", W has " +
                         std::to_string(w.rows()) + " rows");
  }
  Vector out(w.rows());
  auto y = detail::view(std::span<double>(out));
  y.noalias() = detail::view(w) * detail::view(x);
  if (!b.empty()) y += detail::view(b);
  return out;
}

/// `count` i.i.d. draws on [lo, hi).
inline Vector uniform(Rng& rng, double lo, double hi, std::size_t count) {
  if (!(lo < hi)) throw ParameterError("uniform: requires lo < hi");
  Vector out(count);
  for (auto& v : out) v = rng.next_in(lo, hi);
  return out;
}

struct LineFit {
  double slope;
  double intercept;
};

/// Ordinary least squares line through (xs, ys), closed form.
inline LineFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimensionError("ols_fit: xs and ys differ in length");
  const std::size_t n = xs.size();
  if (n < 2) throw SingularityError("ols_fit: need at least two points");
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) {
    throw SingularityError("ols_fit: all x values are equal");
  }
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (ys[i] - mean_y);
  }
  if (sxx == 0.0) throw SingularityError("ols_fit: degenerate x values");
  const double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace haystack
