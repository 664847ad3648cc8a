#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "haystack/core_math.hpp"

namespace haystack {

/// Separable target families: f(x) = sum_i g(x_i).
enum class TargetKind { Square, Quartic, Cosine };

inline double component(TargetKind kind, double x) {
  switch (kind) {
    case TargetKind::Square:
      return x * x;
    case TargetKind::Quartic:
      return (x * x) * (x * x);
    case TargetKind::Cosine:
      return std::cos(x);
  }
  return 0.0;
}

inline std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Square:
      return "square";
    case TargetKind::Quartic:
      return "quartic";
    case TargetKind::Cosine:
      return "cosine";
  }
  return "?";
}

inline TargetKind parse_target(std::string_view s) {
  if (s == "square") return TargetKind::Square;
  if (s == "quartic") return TargetKind::Quartic;
  if (s == "cosine") return TargetKind::Cosine;
  throw ParameterError("unknown target '" + std::string(s) + "'");
}

/// (1/d) sum_i g(x_i): the target rescaled so it stays O(1) in d.
inline double scaled_target(std::span<const double> x, TargetKind kind) {
  double s = 0.0;
  for (double v : x) s += component(kind, v);
  return s / static_cast<double>(x.size());
}

enum class LossScale { Scaled, Original };

/// Mean squared error. Original = d^2 * Scaled, i.e. the error of d * f_NN
/// against the unscaled target.
inline double mse(std::span<const double> pred, std::span<const double> y, LossScale scale,
                  std::size_t d) {
  if (pred.size() != y.size()) throw DimensionError("mse: prediction/target length mismatch");
  if (pred.empty()) throw DimensionError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - y[i];
    acc += r * r;
  }
  const double scaled = acc / static_cast<double>(pred.size());
  if (scale == LossScale::Scaled) return scaled;
  const double dd = static_cast<double>(d);
  return (dd * dd) * scaled;
}

enum class Split { Train, Val, Test };

struct SplitCounts {
  std::size_t train;
  std::size_t val;
  std::size_t test;
};

/// 64% / 16% / 20%, floored; the test split takes the remainder.
inline SplitCounts split_counts(std::size_t n_total) {
  const std::size_t train = n_total * 64 / 100;
  const std::size_t val = n_total * 16 / 100;
  return {train, val, n_total - train - val};
}

struct SplitDataset {
  std::size_t d = 0;
  Matrix x_train, x_val, x_test;
  Vector y_train, y_val, y_test;
  TargetKind target = TargetKind::Square;
  std::uint64_t seed = 0;

  const Matrix& inputs(Split s) const {
    return s == Split::Train ? x_train : s == Split::Val ? x_val : x_test;
  }
  const Vector& targets(Split s) const {
    return s == Split::Train ? y_train : s == Split::Val ? y_val : y_test;
  }
  std::size_t total_rows() const { return y_train.size() + y_val.size() + y_test.size(); }
};

/// Uniform rows on [-1,1]^d, each sorted ascending after its target is
/// computed, split contiguously in generation order.
inline SplitDataset generate(std::size_t d, std::size_t n_total, TargetKind target,
                             std::uint64_t seed) {
  if (d < 1) throw ParameterError("generate: d must be >= 1");
  const SplitCounts counts = split_counts(n_total);
  if (n_total < 10 || counts.train == 0 || counts.val == 0 || counts.test == 0) {
    throw ParameterError("generate: n_total=" + std::to_string(n_total) +
                         " leaves an empty split (need n_total >= 10)");
  }

  SplitDataset ds;
  ds.d = d;
  ds.target = target;
  ds.seed = seed;
  ds.x_train = Matrix(counts.train, d);
  ds.x_val = Matrix(counts.val, d);
  ds.x_test = Matrix(counts.test, d);
  ds.y_train.resize(counts.train);
  ds.y_val.resize(counts.val);
  ds.y_test.resize(counts.test);

  Rng rng(seed);
  Vector raw(d);
  for (std::size_t i = 0; i < n_total; ++i) {
    for (auto& v : raw) v = rng.next_in(-1.0, 1.0);
    const double y = scaled_target(raw, target);
    std::sort(raw.begin(), raw.end());

    Matrix* x = &ds.x_train;
    Vector* yy = &ds.y_train;
    std::size_t r = i;
    if (i >= counts.train + counts.val) {
      x = &ds.x_test;
      yy = &ds.y_test;
      r = i - counts.train - counts.val;
    } else if (i >= counts.train) {
      x = &ds.x_val;
      yy = &ds.y_val;
      r = i - counts.train;
    }
    std::copy(raw.begin(), raw.end(), x->row(r).begin());
    (*yy)[r] = y;
  }
  return ds;
}

// CSV export/import of one split, header x0,...,x{d-1},y.

inline void write_split_csv(std::ostream& os, const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) throw DimensionError("write_split_csv: row count mismatch");
  for (std::size_t j = 0; j < x.cols(); ++j) os << 'x' << j << ',';
  os << "y\n";
  char buf[32];
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      os << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", y[i]);
    os << buf << '\n';
  }
}

struct SplitTable {
  Matrix x;
  Vector y;
};

inline SplitTable read_split_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("read_split_csv: missing header");
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (cols == 0) throw ParameterError("read_split_csv: header has no input columns");
  Vector xs;
  Vector ys;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
      const double v = std::stod(cell);
      (k < cols ? xs : ys).push_back(v);
      ++k;
    }
    if (k != cols + 1) throw DimensionError("read_split_csv: ragged row");
  }
  if (ys.empty()) throw ParameterError("read_split_csv: no data rows");
  return {Matrix(ys.size(), cols, std::move(xs)), std::move(ys)};
}

}  // namespace haystack
