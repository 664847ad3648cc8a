#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

#include "haystack/dataset.hpp"
#include "haystack/network.hpp"

namespace haystack {

enum class RegKind { None, L1, L2, PathNorm };

struct Regularizer {
  RegKind kind = RegKind::None;
  double lambda = 0.0;

  static Regularizer none() { return {}; }
  static Regularizer l1(double lambda) { return make(RegKind::L1, lambda); }
  static Regularizer l2(double lambda) { return make(RegKind::L2, lambda); }
  static Regularizer path_norm(double lambda) { return make(RegKind::PathNorm, lambda); }

  static Regularizer make(RegKind kind, double lambda) {
    if (kind == RegKind::None) return {};
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ParameterError("Regularizer: lambda must be finite and >= 0");
    }
    return {kind, lambda};
  }
};

inline std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::None:
      return "none";
    case RegKind::L1:
      return "l1";
    case RegKind::L2:
      return "l2";
    case RegKind::PathNorm:
      return "path";
  }
  return "?";
}

inline RegKind parse_reg(std::string_view s) {
  if (s == "none") return RegKind::None;
  if (s == "l1") return RegKind::L1;
  if (s == "l2") return RegKind::L2;
  if (s == "path" || s == "pathnorm") return RegKind::PathNorm;
  throw ParameterError("unknown regularizer '" + std::string(s) + "'");
}

struct Penalty {
  double value = 0.0;
  Params grad;
};

/// lambda * R(theta) and its (sub)gradient. L1/L2 act on weight matrices only,
/// never on biases; sign(0) = 0 throughout.
inline Penalty penalty_and_grad(const Params& p, const Regularizer& reg) {
  Penalty out{0.0, Params::zeros(p.arch)};
  if (reg.kind == RegKind::None) return out;

  if (reg.kind == RegKind::PathNorm) {
    auto [value, grad] = path_norm_with_gradient(p);
    out.value = reg.lambda * value;
    for (Matrix* t : grad.tensors()) {
      for (double& v : t->flat()) v *= reg.lambda;
    }
    out.grad = std::move(grad);
    return out;
  }

  const auto src = p.tensors();
  const auto dst = out.grad.tensors();
  for (std::size_t k = 0; k < Params::kTensorCount; ++k) {
    if (!Params::kIsWeight[k]) continue;
    const auto w = src[k]->flat();
    auto g = dst[k]->flat();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (reg.kind == RegKind::L1) {
        out.value += std::abs(w[i]);
        g[i] = reg.lambda * detail::sign(w[i]);
      } else {
        out.value += w[i] * w[i];
        g[i] = 2.0 * reg.lambda * w[i];
      }
    }
  }
  out.value *= reg.lambda;
  return out;
}

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  /// Inverse-time decay per step: lr_t = lr / (1 + decay * t).
  double decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  Params m;
  Params v;
  std::uint64_t t = 0;

  AdamState(const Architecture& arch, AdamOptions opts = {})
      : options(opts), m(Params::zeros(arch)), v(Params::zeros(arch)) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(AdamState& state, Params& params, const Params& grad) {
  require_same_shape(params, grad, "adam_step");
  require_same_shape(params, state.m, "adam_step");
  const AdamOptions& o = state.options;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double lr_t = o.lr / (1.0 + o.decay * t);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);

  const auto theta = params.tensors();
  const auto g = grad.tensors();
  const auto m = state.m.tensors();
  const auto v = state.v.tensors();
  for (std::size_t k = 0; k < Params::kTensorCount; ++k) {
    auto th = theta[k]->flat();
    const auto gk = g[k]->flat();
    auto mk = m[k]->flat();
    auto vk = v[k]->flat();
    for (std::size_t i = 0; i < th.size(); ++i) {
      mk[i] = o.beta1 * mk[i] + (1.0 - o.beta1) * gk[i];
      vk[i] = o.beta2 * vk[i] + (1.0 - o.beta2) * gk[i] * gk[i];
      const double m_hat = mk[i] / c1;
      const double v_hat = vk[i] / c2;
      th[i] -= lr_t * m_hat / (std::sqrt(v_hat) + o.eps_hat);
    }
  }
}

struct BatchPolicy {
  enum class Kind { FixedRatio, FixedSize };
  Kind kind = Kind::FixedRatio;
  /// Divisor for FixedRatio, batch size for FixedSize.
  std::size_t value = 100;

  static BatchPolicy fixed_ratio(std::size_t divisor = 100) { return {Kind::FixedRatio, divisor}; }
  static BatchPolicy fixed_size(std::size_t size = 80) { return {Kind::FixedSize, size}; }

  /// floor((n_train + n_val) / divisor), at least 1; or the fixed size.
  std::size_t batch_size(std::size_t n_train, std::size_t n_val) const {
    if (value == 0) throw ParameterError("BatchPolicy: value must be positive");
    if (kind == Kind::FixedSize) return value;
    return std::max<std::size_t>(1, (n_train + n_val) / value);
  }

  std::string to_string() const {
    return (kind == Kind::FixedRatio ? "ratio:" : "size:") + std::to_string(value);
  }

  static BatchPolicy parse(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw ParameterError("batch policy must be ratio:N or size:N");
    const auto head = s.substr(0, colon);
    const std::size_t n = std::stoul(std::string(s.substr(colon + 1)));
    if (n == 0) throw ParameterError("batch policy value must be positive");
    if (head == "ratio") return fixed_ratio(n);
    if (head == "size") return fixed_size(n);
    throw ParameterError("batch policy must be ratio:N or size:N");
  }

  bool operator==(const BatchPolicy&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 1000;
  BatchPolicy batch = BatchPolicy::fixed_ratio(100);
  Regularizer regularizer;
  double lr = 0.01;
  double decay = 0.0;
  std::uint64_t seed = 0;
  bool record_history = false;
  /// Also record the path norm after every epoch (costly for Global).
  bool record_path_norm = false;
};

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double train_mse;   // Scaled, full training split after the epoch
  double val_mse;     // Scaled
  double path_norm;   // NaN unless requested
};

struct TrainResult {
  Params best_params;
  /// 1-based epoch of the first validation minimum; 0 when no epoch ran.
  std::size_t best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;
  double final_path_norm = 0.0;
};

struct SplitLoss {
  double scaled;
  double original;
};

inline SplitLoss evaluate(const Params& p, const SplitDataset& ds, Split split) {
  if (p.arch.d != ds.d) throw DimensionError("evaluate: dataset dimension != network d");
  const Vector pred = predict(p, ds.inputs(split));
  const double scaled = mse(pred, ds.targets(split), LossScale::Scaled, ds.d);
  const double dd = static_cast<double>(ds.d);
  return {scaled, (dd * dd) * scaled};
}

struct StepObjective {
  double mse;
  double penalty;
  Params grad;

  double total() const { return mse + penalty; }
};

/// The quantity each optimizer step minimizes: batch Scaled MSE + penalty,
/// with its gradient.
inline StepObjective step_objective(const Params& p, const Matrix& x, std::span<const double> y,
                                    const Regularizer& reg) {
  ForwardCache cache = forward_batch(p, x);
  StepObjective out{mse(cache.output, y, LossScale::Scaled, p.arch.d), 0.0, backward(p, cache, y)};
  if (reg.kind != RegKind::None) {
    Penalty pen = penalty_and_grad(p, reg);
    out.penalty = pen.value;
    const auto dst = out.grad.tensors();
    const auto src = pen.grad.tensors();
    for (std::size_t k = 0; k < Params::kTensorCount; ++k) {
      detail::view(*dst[k]) += detail::view(*src[k]);
    }
  }
  return out;
}

namespace detail {
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;

inline void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
  }
}
}  // namespace detail

/// Minibatch Adam on Scaled MSE + penalty for `config.epochs` epochs, keeping
/// the parameters at the first epoch with minimal validation loss. Without
/// `init`, parameters are Glorot-initialized from `config.seed`.
inline TrainResult train(const SplitDataset& ds, const Architecture& arch, const TrainConfig& config,
                         std::optional<Params> init = std::nullopt) {
  arch.validate();
  if (arch.d != ds.d) throw DimensionError("train: dataset dimension != architecture d");
  const std::size_t n_train = ds.y_train.size();
  const std::size_t n_val = ds.y_val.size();
  if (n_train == 0 || n_val == 0) throw ParameterError("train: empty training or validation split");

  Params params = [&] {
    if (init) {
      if (!(init->arch == arch)) throw DimensionError("train: init params do not match architecture");
      return std::move(*init);
    }
    Rng init_rng = Rng::derived(config.seed, detail::kInitStream);
    return init_glorot(arch, init_rng);
  }();

  TrainResult result;
  result.best_params = params;
  if (config.record_history) result.history.reserve(config.epochs);

  AdamState adam(arch, {.lr = config.lr, .decay = config.decay});
  Rng shuffle_rng = Rng::derived(config.seed, detail::kShuffleStream);
  const std::size_t batch_size = std::min(config.batch.batch_size(n_train, n_val), n_train);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t d = ds.d;
  Matrix xb(batch_size, d);
  Vector yb(batch_size);
  Matrix xb_tail;
  const std::size_t tail = n_train % batch_size;
  if (tail != 0) xb_tail = Matrix(tail, d);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    detail::shuffle(order, shuffle_rng);
    for (std::size_t start = 0; start < n_train; start += batch_size) {
      const std::size_t n = std::min(batch_size, n_train - start);
      Matrix& x = n == batch_size ? xb : xb_tail;
      yb.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = order[start + r];
        const auto row = ds.x_train.row(src);
        std::copy(row.begin(), row.end(), x.row(r).begin());
        yb[r] = ds.y_train[src];
      }
      const StepObjective obj = step_objective(params, x, yb, config.regularizer);
      adam_step(adam, params, obj.grad);
    }

    const double val = evaluate(params, ds, Split::Val).scaled;
    if (val < result.best_val_mse) {
      result.best_val_mse = val;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    if (config.record_history) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      result.history.push_back({epoch, evaluate(params, ds, Split::Train).scaled, val,
                                config.record_path_norm ? path_norm(params) : nan});
    }
  }
  result.final_path_norm = path_norm(result.best_params);
  return result;
}

/// epoch,train_mse_scaled,val_mse_scaled,path_norm; path_norm cells are empty
/// when not recorded, except the last row which carries `final_path_norm`.
inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history,
                              std::optional<double> final_path_norm = std::nullopt) {
  os << "epoch,train_mse_scaled,val_mse_scaled,path_norm\n";
  char buf[128];
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", h.epoch, h.train_mse, h.val_mse);
    os << buf;
    double pn = h.path_norm;
    if (std::isnan(pn) && final_path_norm && i + 1 == history.size()) pn = *final_path_norm;
    if (!std::isnan(pn)) {
      std::snprintf(buf, sizeof buf, "%.17g", pn);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace haystack
