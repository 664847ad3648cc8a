#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "haystack/core_math.hpp"

namespace haystack {

// Three-layer ReLU networks of width alpha per input coordinate:
//
//   Global            dense d -> d*alpha -> d*alpha -> 1, output divided by d
//   LocallyConnected  d independent blocks 1 -> alpha -> alpha -> 1, summed / d
//   Local             one block shared by every coordinate, summed / d
//
// No output bias in any of them.

enum class ArchKind { Global, LocallyConnected, Local };

inline std::string_view to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::Global:
      return "global";
    case ArchKind::LocallyConnected:
      return "lcn";
    case ArchKind::Local:
      return "local";
  }
  return "?";
}

inline ArchKind parse_arch(std::string_view s) {
  if (s == "global" || s == "gn") return ArchKind::Global;
  if (s == "lcn" || s == "locally_connected") return ArchKind::LocallyConnected;
  if (s == "local" || s == "ln") return ArchKind::Local;
  throw ParameterError("unknown architecture '" + std::string(s) + "'");
}

struct Architecture {
  ArchKind kind = ArchKind::Global;
  std::size_t d = 1;
  std::size_t alpha = 50;

  /// Hidden width as seen by the forward pass (all blocks together).
  std::size_t width() const { return d * alpha; }
  /// Number of stored blocks: d for LCN, 1 for Local, unused for Global.
  std::size_t blocks() const { return kind == ArchKind::Local ? 1 : d; }

  void validate() const {
    if (d == 0 || alpha == 0) throw ParameterError("Architecture: d and alpha must be positive");
  }
  bool operator==(const Architecture&) const = default;
};

/// Network parameters. Shapes (rows x cols), H = d*alpha, a = alpha:
///
///            Global    LocallyConnected   Local
///   w1       H x d     d x a              1 x a
///   b1       1 x H     d x a              1 x a
///   w2       H x H     d x a*a            1 x a*a   (row-major a x a per block,
///   b2       1 x H     d x a              1 x a      row = output unit)
///   w3       1 x H     d x a              1 x a
struct Params {
  Architecture arch;
  Matrix w1, b1, w2, b2, w3;

  static constexpr std::size_t kTensorCount = 5;
  static constexpr std::array<bool, kTensorCount> kIsWeight = {true, false, true, false, true};

  static Params zeros(const Architecture& arch) {
    arch.validate();
    Params p;
    p.arch = arch;
    const std::size_t a = arch.alpha;
    if (arch.kind == ArchKind::Global) {
      const std::size_t h = arch.width();
      p.w1 = Matrix(h, arch.d);
      p.b1 = Matrix(1, h);
      p.w2 = Matrix(h, h);
      p.b2 = Matrix(1, h);
      p.w3 = Matrix(1, h);
    } else {
      const std::size_t nb = arch.blocks();
      p.w1 = Matrix(nb, a);
      p.b1 = Matrix(nb, a);
      p.w2 = Matrix(nb, a * a);
      p.b2 = Matrix(nb, a);
      p.w3 = Matrix(nb, a);
    }
    return p;
  }

  std::array<Matrix*, kTensorCount> tensors() { return {&w1, &b1, &w2, &b2, &w3}; }
  std::array<const Matrix*, kTensorCount> tensors() const { return {&w1, &b1, &w2, &b2, &w3}; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors()) n += t->size();
    return n;
  }

  bool operator==(const Params&) const = default;
};

inline void require_same_shape(const Params& a, const Params& b, const char* where) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t k = 0; k < Params::kTensorCount; ++k) {
    if (ta[k]->rows() != tb[k]->rows() || ta[k]->cols() != tb[k]->cols()) {
      throw DimensionError(std::string(where) + ": parameter shapes differ");
    }
  }
}

/// Glorot-uniform weights, zero biases. Fans are per layer for Global and per
/// block for LocallyConnected/Local.
inline Params init_glorot(const Architecture& arch, Rng& rng) {
  Params p = Params::zeros(arch);
  const double a = static_cast<double>(arch.alpha);
  double fan1_in = 1.0, fan1_out = a, fan2 = a, fan3_in = a;
  if (arch.kind == ArchKind::Global) {
    const double h = static_cast<double>(arch.width());
    fan1_in = static_cast<double>(arch.d);
    fan1_out = h;
    fan2 = h;
    fan3_in = h;
  }
  auto fill = [&rng](Matrix& m, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : m.flat()) v = rng.next_in(-limit, limit);
  };
  fill(p.w1, fan1_in, fan1_out);
  fill(p.w2, fan2, fan2);
  fill(p.w3, fan3_in, 1.0);
  return p;
}

/// Pre-activations of both hidden layers, laid out B x (d*alpha) for every
/// architecture (block i occupies columns [i*alpha, (i+1)*alpha)).
struct ForwardCache {
  Matrix input;
  Matrix pre1;
  Matrix pre2;
  Vector output;
};

namespace detail {

inline void check_input(const Params& p, const Matrix& x) {
  if (x.cols() != p.arch.d) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects d=" + std::to_string(p.arch.d));
  }
}

inline ConstMatMap block_w2(const Params& p, std::size_t block) {
  const auto a = static_cast<Eigen::Index>(p.arch.alpha);
  return {p.w2.data() + block * p.arch.alpha * p.arch.alpha, a, a};
}

inline MatMap block_w2(Params& p, std::size_t block) {
  const auto a = static_cast<Eigen::Index>(p.arch.alpha);
  return {p.w2.data() + block * p.arch.alpha * p.arch.alpha, a, a};
}

/// Fills cache.pre1/pre2/output for cache.input.
inline void run_forward(const Params& p, ForwardCache& cache) {
  const auto& arch = p.arch;
  const auto batch = static_cast<Eigen::Index>(cache.input.rows());
  const auto a = static_cast<Eigen::Index>(arch.alpha);
  const double inv_d = 1.0 / static_cast<double>(arch.d);
  cache.pre1 = Matrix(cache.input.rows(), arch.width());
  cache.pre2 = Matrix(cache.input.rows(), arch.width());
  cache.output.assign(cache.input.rows(), 0.0);

  auto x = view(cache.input);
  auto pre1 = view(cache.pre1);
  auto pre2 = view(cache.pre2);
  auto out = view(std::span<double>(cache.output));

  switch (arch.kind) {
    case ArchKind::Global: {
      pre1.noalias() = x * view(p.w1).transpose();
      pre1.rowwise() += view(p.b1).row(0);
      pre2.noalias() = pre1.cwiseMax(0.0) * view(p.w2).transpose();
      pre2.rowwise() += view(p.b2).row(0);
      out.noalias() = pre2.cwiseMax(0.0) * view(p.w3).row(0).transpose();
      out *= inv_d;
      break;
    }
    case ArchKind::LocallyConnected: {
      const auto w1 = view(p.w1);
      const auto b1 = view(p.b1);
      const auto b2 = view(p.b2);
      const auto w3 = view(p.w3);
      for (std::size_t i = 0; i < arch.d; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        auto h1 = pre1.middleCols(ii * a, a);
        auto h2 = pre2.middleCols(ii * a, a);
        h1.noalias() = x.col(ii) * w1.row(ii);
        h1.rowwise() += b1.row(ii);
        h2.noalias() = h1.cwiseMax(0.0) * block_w2(p, i).transpose();
        h2.rowwise() += b2.row(ii);
        out.noalias() += h2.cwiseMax(0.0) * w3.row(ii).transpose();
      }
      out *= inv_d;
      break;
    }
    case ArchKind::Local: {
      // Row-major B x (d*a) is the same memory as (B*d) x a: one row per
      // (sample, coordinate) pair, all sharing one block.
      const Eigen::Index rows = batch * static_cast<Eigen::Index>(arch.d);
      MatMap h1(cache.pre1.data(), rows, a);
      MatMap h2(cache.pre2.data(), rows, a);
      ConstVecMap xs(cache.input.data(), rows);
      h1.noalias() = xs * view(p.w1).row(0);
      h1.rowwise() += view(p.b1).row(0);
      h2.noalias() = h1.cwiseMax(0.0) * block_w2(p, 0).transpose();
      h2.rowwise() += view(p.b2).row(0);
      const Eigen::VectorXd g = h2.cwiseMax(0.0) * view(p.w3).row(0).transpose();
      ConstMatMap per_coord(g.data(), batch, static_cast<Eigen::Index>(arch.d));
      out.noalias() = per_coord.rowwise().sum() * inv_d;
      break;
    }
  }
}

}  // namespace detail

/// Batched forward pass with the cache needed by backward().
inline ForwardCache forward_batch(const Params& p, const Matrix& x) {
  detail::check_input(p, x);
  ForwardCache cache;
  cache.input = x;
  detail::run_forward(p, cache);
  return cache;
}

struct ForwardResult {
  double output;
  ForwardCache cache;
};

inline ForwardResult forward(const Params& p, std::span<const double> x) {
  if (x.size() != p.arch.d) throw DimensionError("forward: input length != d");
  ForwardCache cache = forward_batch(p, Matrix(1, x.size(), Vector(x.begin(), x.end())));
  const double out = cache.output[0];
  return {out, std::move(cache)};
}

/// Network outputs for every row of x, evaluated in chunks to bound memory.
inline Vector predict(const Params& p, const Matrix& x, std::size_t chunk = 1024) {
  detail::check_input(p, x);
  Vector out(x.rows());
  for (std::size_t start = 0; start < x.rows(); start += chunk) {
    const std::size_t n = std::min(chunk, x.rows() - start);
    ForwardCache cache;
    cache.input = Matrix(n, x.cols(),
                         Vector(x.row(start).begin(), x.row(start).begin() + n * x.cols()));
    detail::run_forward(p, cache);
    std::copy(cache.output.begin(), cache.output.end(), out.begin() + start);
  }
  return out;
}

/// Gradient of the batch MSE (1/B) sum (out - y)^2 with respect to every
/// parameter, from a cache produced by forward_batch. ReLU'(0) = 0.
inline Params backward(const Params& p, const ForwardCache& cache, std::span<const double> y) {
  const auto& arch = p.arch;
  const std::size_t batch_rows = cache.input.rows();
  if (y.size() != batch_rows) throw DimensionError("backward: target length != batch size");
  if (batch_rows == 0) throw DimensionError("backward: empty batch");

  using namespace detail;
  const auto batch = static_cast<Eigen::Index>(batch_rows);
  const auto a = static_cast<Eigen::Index>(arch.alpha);
  const double inv_d = 1.0 / static_cast<double>(arch.d);

  Eigen::VectorXd dout(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    dout[b] = 2.0 * (cache.output[static_cast<std::size_t>(b)] - y[static_cast<std::size_t>(b)]) /
              static_cast<double>(batch);
  }

  Params g = Params::zeros(arch);
  const auto x = view(cache.input);
  const auto pre1 = view(cache.pre1);
  const auto pre2 = view(cache.pre2);

  switch (arch.kind) {
    case ArchKind::Global: {
      const RowMajorXd a1 = pre1.cwiseMax(0.0);
      const RowMajorXd a2 = pre2.cwiseMax(0.0);
      view(g.w3).row(0).noalias() = (a2.transpose() * dout).transpose() * inv_d;
      const RowMajorXd dh2 =
          (pre2.array() > 0.0).select((dout * view(p.w3).row(0)) * inv_d, 0.0);
      view(g.w2).noalias() = dh2.transpose() * a1;
      view(g.b2).row(0).noalias() = dh2.colwise().sum();
      const RowMajorXd dh1 = (pre1.array() > 0.0).select(dh2 * view(p.w2), 0.0);
      view(g.w1).noalias() = dh1.transpose() * x;
      view(g.b1).row(0).noalias() = dh1.colwise().sum();
      break;
    }
    case ArchKind::LocallyConnected: {
      const auto w3 = view(p.w3);
      for (std::size_t i = 0; i < arch.d; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto h1 = pre1.middleCols(ii * a, a);
        const auto h2 = pre2.middleCols(ii * a, a);
        const RowMajorXd a1 = h1.cwiseMax(0.0);
        view(g.w3).row(ii).noalias() = (h2.cwiseMax(0.0).transpose() * dout).transpose() * inv_d;
        const RowMajorXd dh2 = (h2.array() > 0.0).select((dout * w3.row(ii)) * inv_d, 0.0);
        block_w2(g, i).noalias() = dh2.transpose() * a1;
        view(g.b2).row(ii).noalias() = dh2.colwise().sum();
        const RowMajorXd dh1 = (h1.array() > 0.0).select(dh2 * block_w2(p, i), 0.0);
        view(g.w1).row(ii).noalias() = (dh1.transpose() * x.col(ii)).transpose();
        view(g.b1).row(ii).noalias() = dh1.colwise().sum();
      }
      break;
    }
    case ArchKind::Local: {
      // Rows index (sample, coordinate); summing over rows accumulates the
      // shared block's gradient across all d applications.
      const auto dcount = static_cast<Eigen::Index>(arch.d);
      const Eigen::Index rows = batch * dcount;
      ConstMatMap h1(cache.pre1.data(), rows, a);
      ConstMatMap h2(cache.pre2.data(), rows, a);
      ConstVecMap xs(cache.input.data(), rows);
      Eigen::VectorXd drow(rows);
      for (Eigen::Index b = 0; b < batch; ++b) drow.segment(b * dcount, dcount).setConstant(dout[b]);
      const RowMajorXd a1 = h1.cwiseMax(0.0);
      view(g.w3).row(0).noalias() = (h2.cwiseMax(0.0).transpose() * drow).transpose() * inv_d;
      const RowMajorXd dh2 =
          (h2.array() > 0.0).select((drow * view(p.w3).row(0)) * inv_d, 0.0);
      block_w2(g, 0).noalias() = dh2.transpose() * a1;
      view(g.b2).row(0).noalias() = dh2.colwise().sum();
      const RowMajorXd dh1 = (h1.array() > 0.0).select(dh2 * block_w2(p, 0), 0.0);
      view(g.w1).row(0).noalias() = (dh1.transpose() * xs).transpose();
      view(g.b1).row(0).noalias() = dh1.colwise().sum();
      break;
    }
  }
  return g;
}

inline Params backward(const Params& p, const Matrix& x, std::span<const double> y) {
  return backward(p, forward_batch(p, x), y);
}

/// Dense Global view of a LocallyConnected/Local network: block-structured
/// W1, block-diagonal W2, concatenated w3 and biases, zeros elsewhere.
inline Params embed(const Params& p) {
  if (p.arch.kind == ArchKind::Global) return p;
  const std::size_t d = p.arch.d;
  const std::size_t a = p.arch.alpha;
  Params g = Params::zeros({ArchKind::Global, d, a});
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t blk = p.arch.kind == ArchKind::Local ? 0 : i;
    for (std::size_t u = 0; u < a; ++u) {
      const std::size_t row = i * a + u;
      g.w1(row, i) = p.w1(blk, u);
      g.b1(0, row) = p.b1(blk, u);
      g.b2(0, row) = p.b2(blk, u);
      g.w3(0, row) = p.w3(blk, u);
      for (std::size_t c = 0; c < a; ++c) g.w2(row, i * a + c) = p.w2(blk, u * a + c);
    }
  }
  return g;
}

/// (1/d) sum_{i,j,k} |W1_ji| |W2_kj| |w3_k|, as (1/d) |w3|^T |W2| |W1| 1.
/// Non-Global layouts are evaluated on their embedding.
inline double path_norm(const Params& p) {
  if (p.arch.kind != ArchKind::Global) return path_norm(embed(p));
  using namespace detail;
  const Eigen::VectorXd u = view(p.w1).cwiseAbs().rowwise().sum();
  const Eigen::VectorXd v = view(p.w2).cwiseAbs() * u;
  return view(p.w3).row(0).cwiseAbs().dot(v) / static_cast<double>(p.arch.d);
}

namespace detail {
inline double sign(double x) { return (x > 0.0) - (x < 0.0); }
}  // namespace detail

/// Path norm and its (sub)gradient, computed directly on the stored layout.
/// sign(0) = 0. For Local, the d identical block contributions cancel the
/// 1/d prefactor so the value is the shared block's own path norm.
inline std::pair<double, Params> path_norm_with_gradient(const Params& p) {
  using namespace detail;
  Params g = Params::zeros(p.arch);
  auto sgn = [](const auto& m) { return m.unaryExpr([](double x) { return sign(x); }); };

  if (p.arch.kind == ArchKind::Global) {
    const double inv_d = 1.0 / static_cast<double>(p.arch.d);
    const auto w1 = view(p.w1);
    const auto w2 = view(p.w2);
    const auto w3 = view(p.w3).row(0);
    const Eigen::VectorXd u = w1.cwiseAbs().rowwise().sum();
    const Eigen::VectorXd v = w2.cwiseAbs() * u;
    const Eigen::VectorXd back = w2.cwiseAbs().transpose() * w3.cwiseAbs().transpose();
    view(g.w1) = (back.asDiagonal() * sgn(w1)) * inv_d;
    view(g.w2) = ((w3.cwiseAbs().transpose() * u.transpose()).cwiseProduct(sgn(w2))) * inv_d;
    view(g.w3).row(0) = sgn(w3).cwiseProduct(v.transpose()) * inv_d;
    return {w3.cwiseAbs().dot(v) * inv_d, std::move(g)};
  }

  // Blocks: LCN weights each block by 1/d; Local counts its one block d times.
  const double scale =
      p.arch.kind == ArchKind::Local ? 1.0 : 1.0 / static_cast<double>(p.arch.d);
  double total = 0.0;
  for (std::size_t i = 0; i < p.arch.blocks(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto w1 = view(p.w1).row(ii);
    const auto w2 = block_w2(p, i);
    const auto w3 = view(p.w3).row(ii);
    const Eigen::VectorXd u = w1.cwiseAbs().transpose();
    const Eigen::VectorXd v = w2.cwiseAbs() * u;
    const Eigen::VectorXd back = w2.cwiseAbs().transpose() * w3.cwiseAbs().transpose();
    total += w3.cwiseAbs().dot(v);
    view(g.w1).row(ii) = sgn(w1).cwiseProduct(back.transpose()) * scale;
    block_w2(g, i) = (w3.cwiseAbs().transpose() * u.transpose()).cwiseProduct(sgn(w2)) * scale;
    view(g.w3).row(ii) = sgn(w3).cwiseProduct(v.transpose()) * scale;
  }
  return {total * scale, std::move(g)};
}

/// Adds eps * U[-1, 1] to every weight and bias entry.
inline Params perturb(const Params& p, double eps, Rng& rng) {
  if (!(eps >= 0.0)) throw ParameterError("perturb: eps must be >= 0");
  Params out = p;
  for (Matrix* t : out.tensors()) {
    for (double& v : t->flat()) v += eps * rng.next_in(-1.0, 1.0);
  }
  return out;
}

// Weight files: JSON with the architecture tag, d, alpha and the five tensors
// as flat row-major arrays. Doubles are written in shortest round-trip form.

inline nlohmann::json to_json(const Params& p) {
  auto flat = [](const Matrix& m) { return Vector(m.flat().begin(), m.flat().end()); };
  return {
      {"arch", std::string(to_string(p.arch.kind))},
      {"d", p.arch.d},
      {"alpha", p.arch.alpha},
      {"w1", flat(p.w1)},
      {"b1", flat(p.b1)},
      {"w2", flat(p.w2)},
      {"b2", flat(p.b2)},
      {"w3", flat(p.w3)},
  };
}

inline Params params_from_json(const nlohmann::json& j) {
  const Architecture arch{parse_arch(j.at("arch").get<std::string>()),
                          j.at("d").get<std::size_t>(), j.at("alpha").get<std::size_t>()};
  Params p = Params::zeros(arch);
  static constexpr std::array<const char*, Params::kTensorCount> kNames = {"w1", "b1", "w2", "b2",
                                                                           "w3"};
  const auto tensors = p.tensors();
  for (std::size_t k = 0; k < Params::kTensorCount; ++k) {
    const auto values = j.at(kNames[k]).get<Vector>();
    if (values.size() != tensors[k]->size()) {
      throw DimensionError(std::string("weights file: tensor ") + kNames[k] + " has " +
                           std::to_string(values.size()) + " entries, expected " +
                           std::to_string(tensors[k]->size()));
    }
    std::copy(values.begin(), values.end(), tensors[k]->flat().begin());
  }
  return p;
}

inline void save_params(const Params& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << to_json(p).dump() << '\n';
}

inline Params load_params(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return params_from_json(nlohmann::json::parse(is));
}

}  // namespace haystack
