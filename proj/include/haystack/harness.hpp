#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "haystack/dataset.hpp"
#include "haystack/network.hpp"
#include "haystack/training.hpp"

namespace haystack {

// ---------------------------------------------------------------------------
// Run records and their CSV form

struct RunRecord {
  ArchKind arch = ArchKind::Global;
  TargetKind target = TargetKind::Square;
  std::size_t d = 0;
  std::size_t n_total = 0;
  std::uint64_t seed = 0;
  RegKind reg = RegKind::None;
  double lambda = 0.0;
  BatchPolicy batch;
  std::size_t best_epoch = 0;
  double train_mse_scaled = 0.0;
  double val_mse_scaled = 0.0;
  double test_mse_scaled = 0.0;
  double train_mse_orig = 0.0;
  double val_mse_orig = 0.0;
  double test_mse_orig = 0.0;
  double path_norm = 0.0;
  double wall_time_s = 0.0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kRunCsvHeader =
    "arch,target,d,n_total,seed,reg,lambda,batch_policy,best_epoch,train_mse_scaled,"
    "val_mse_scaled,test_mse_scaled,train_mse_orig,val_mse_orig,test_mse_orig,path_norm,"
    "wall_time_s";

inline std::string to_csv_row(const RunRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%s,%zu,%zu,%llu,%s,%.17g,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                std::string(to_string(r.arch)).c_str(), std::string(to_string(r.target)).c_str(),
                r.d, r.n_total, static_cast<unsigned long long>(r.seed),
                std::string(to_string(r.reg)).c_str(), r.lambda, r.batch.to_string().c_str(),
                r.best_epoch, r.train_mse_scaled, r.val_mse_scaled, r.test_mse_scaled,
                r.train_mse_orig, r.val_mse_orig, r.test_mse_orig, r.path_norm, r.wall_time_s);
  return buf;
}

inline RunRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 17) {
    throw ParameterError("run CSV: expected 17 fields, got " + std::to_string(f.size()));
  }
  RunRecord r;
  r.arch = parse_arch(f[0]);
  r.target = parse_target(f[1]);
  r.d = std::stoul(f[2]);
  r.n_total = std::stoul(f[3]);
  r.seed = std::stoull(f[4]);
  r.reg = parse_reg(f[5]);
  r.lambda = std::stod(f[6]);
  r.batch = BatchPolicy::parse(f[7]);
  r.best_epoch = std::stoul(f[8]);
  double* cols[] = {&r.train_mse_scaled, &r.val_mse_scaled, &r.test_mse_scaled, &r.train_mse_orig,
                    &r.val_mse_orig,     &r.test_mse_orig,  &r.path_norm,       &r.wall_time_s};
  for (std::size_t k = 0; k < 8; ++k) *cols[k] = std::stod(f[9 + k]);
  return r;
}

inline void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRunCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

inline std::vector<RunRecord> read_runs_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRunCsvHeader) {
    throw ParameterError("run CSV: missing or unexpected header");
  }
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(parse_csv_row(line));
  }
  return out;
}

inline std::vector<RunRecord> read_runs_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_runs_csv(is);
}

inline bool cell_order(const RunRecord& a, const RunRecord& b) {
  return std::tuple(a.arch, a.d, a.n_total, a.seed) < std::tuple(b.arch, b.d, b.n_total, b.seed);
}

// ---------------------------------------------------------------------------
// Sweeps

struct ExperimentSpec {
  std::vector<ArchKind> archs = {ArchKind::Global};
  TargetKind target = TargetKind::Square;
  std::vector<std::size_t> d_list = default_d_list();
  std::vector<std::size_t> n_total_list = {100000};
  std::size_t seeds_per_cell = 4;
  std::size_t alpha = 50;
  /// Template for every run; `train.seed` is the first optimizer seed.
  TrainConfig train;
  std::uint64_t data_seed = 2020;
  std::string output;
  std::size_t workers = 1;

  static std::vector<std::size_t> default_d_list() {
    std::vector<std::size_t> v;
    for (std::size_t d = 4; d <= 60; d += 4) v.push_back(d);
    return v;
  }

  std::size_t cell_count() const {
    return archs.size() * d_list.size() * n_total_list.size() * seeds_per_cell;
  }

  void validate() const {
    if (archs.empty() || d_list.empty() || n_total_list.empty()) {
      throw ParameterError("experiment: arch, d and n_total lists must be nonempty");
    }
    if (seeds_per_cell == 0) throw ParameterError("experiment: seeds_per_cell must be >= 1");
    if (alpha == 0) throw ParameterError("experiment: alpha must be >= 1");
    if (workers == 0) throw ParameterError("experiment: workers must be >= 1");
  }
};

/// Data seed for dimension d. It does not depend on n_total, so smaller
/// datasets are row prefixes of larger ones and all optimizer seeds of a cell
/// see identical data.
inline std::uint64_t data_seed_for(std::uint64_t base, std::size_t d) {
  return detail::splitmix64(base ^ detail::splitmix64(0xD1B54A32D192ED03ULL * (d + 1)));
}

struct Cell {
  ArchKind arch;
  std::size_t d;
  std::size_t n_total;
  std::uint64_t seed;
};

inline std::vector<Cell> enumerate_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  cells.reserve(spec.cell_count());
  for (ArchKind a : spec.archs) {
    for (std::size_t d : spec.d_list) {
      for (std::size_t n : spec.n_total_list) {
        for (std::size_t s = 0; s < spec.seeds_per_cell; ++s) {
          cells.push_back({a, d, n, spec.train.seed + s});
        }
      }
    }
  }
  return cells;
}

/// Trains and evaluates a single cell.
inline RunRecord run_cell(const ExperimentSpec& spec, const Cell& cell) {
  const auto start = std::chrono::steady_clock::now();
  const SplitDataset ds =
      generate(cell.d, cell.n_total, spec.target, data_seed_for(spec.data_seed, cell.d));
  TrainConfig cfg = spec.train;
  cfg.seed = cell.seed;
  const Architecture arch{cell.arch, cell.d, spec.alpha};
  const TrainResult tr = train(ds, arch, cfg);

  RunRecord r;
  r.arch = cell.arch;
  r.target = spec.target;
  r.d = cell.d;
  r.n_total = cell.n_total;
  r.seed = cell.seed;
  r.reg = cfg.regularizer.kind;
  r.lambda = cfg.regularizer.lambda;
  r.batch = cfg.batch;
  r.best_epoch = tr.best_epoch;
  const SplitLoss train_l = evaluate(tr.best_params, ds, Split::Train);
  const SplitLoss val_l = evaluate(tr.best_params, ds, Split::Val);
  const SplitLoss test_l = evaluate(tr.best_params, ds, Split::Test);
  r.train_mse_scaled = train_l.scaled;
  r.val_mse_scaled = val_l.scaled;
  r.test_mse_scaled = test_l.scaled;
  r.train_mse_orig = train_l.original;
  r.val_mse_orig = val_l.original;
  r.test_mse_orig = test_l.original;
  r.path_norm = tr.final_path_norm;
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

using ProgressFn = std::function<void(const RunRecord&, std::size_t done, std::size_t total)>;

/// Runs every (arch, d, n_total, seed) cell. When `spec.output` is set, rows
/// are appended as cells complete and the file is finally rewritten sorted by
/// (arch, d, n_total, seed). The returned records are in that same order.
inline std::vector<RunRecord> run_sweep(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  spec.validate();
  const std::vector<Cell> cells = enumerate_cells(spec);

  std::ofstream out;
  if (!spec.output.empty()) {
    out.open(spec.output, std::ios::trunc);
    if (!out) throw std::runtime_error("sweep: cannot open '" + spec.output + "' for writing");
    out << kRunCsvHeader << '\n' << std::flush;
  }

  std::vector<RunRecord> records;
  records.reserve(cells.size());
  std::mutex mu;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};

  auto describe = [](const Cell& c) {
    return "cell arch=" + std::string(to_string(c.arch)) + " d=" + std::to_string(c.d) +
           " n_total=" + std::to_string(c.n_total) + " seed=" + std::to_string(c.seed);
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        RunRecord r = run_cell(spec, cells[i]);
        std::lock_guard lock(mu);
        if (out.is_open()) {
          out << to_csv_row(r) << '\n' << std::flush;
          if (!out) throw std::runtime_error("write failed for '" + spec.output + "'");
        }
        records.push_back(r);
        if (progress) progress(r, records.size(), cells.size());
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failure) {
          failure = std::make_exception_ptr(std::runtime_error(describe(cells[i]) + ": " + e.what()));
        }
        return;
      }
    }
  };

  const std::size_t n_workers = std::min(spec.workers, cells.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(records.begin(), records.end(), cell_order);
  if (out.is_open()) {
    out.close();
    std::ofstream sorted(spec.output, std::ios::trunc);
    if (!sorted) throw std::runtime_error("sweep: cannot rewrite '" + spec.output + "'");
    write_runs_csv(sorted, records);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Power-law fits

enum class XAxis { Dimension, SampleCount };

enum class LossColumn {
  TrainScaled,
  ValScaled,
  TestScaled,
  TrainOriginal,
  ValOriginal,
  TestOriginal,
  PathNorm,
};

inline double column_value(const RunRecord& r, LossColumn c) {
  switch (c) {
    case LossColumn::TrainScaled:
      return r.train_mse_scaled;
    case LossColumn::ValScaled:
      return r.val_mse_scaled;
    case LossColumn::TestScaled:
      return r.test_mse_scaled;
    case LossColumn::TrainOriginal:
      return r.train_mse_orig;
    case LossColumn::ValOriginal:
      return r.val_mse_orig;
    case LossColumn::TestOriginal:
      return r.test_mse_orig;
    case LossColumn::PathNorm:
      return r.path_norm;
  }
  return 0.0;
}

inline LossColumn parse_column(std::string_view s) {
  static const std::map<std::string_view, LossColumn> kNames = {
      {"train_mse_scaled", LossColumn::TrainScaled}, {"val_mse_scaled", LossColumn::ValScaled},
      {"test_mse_scaled", LossColumn::TestScaled},   {"train_mse_orig", LossColumn::TrainOriginal},
      {"val_mse_orig", LossColumn::ValOriginal},     {"test_mse_orig", LossColumn::TestOriginal},
      {"path_norm", LossColumn::PathNorm},
  };
  const auto it = kNames.find(s);
  if (it == kNames.end()) throw ParameterError("unknown column '" + std::string(s) + "'");
  return it->second;
}

/// How seeds at one x value are combined before the log-log fit.
enum class Aggregation { Geometric, Arithmetic };

struct FitOptions {
  XAxis x_axis = XAxis::Dimension;
  LossColumn column = LossColumn::TestOriginal;
  Aggregation aggregation = Aggregation::Geometric;
  std::function<bool(const RunRecord&)> filter;
  /// Keep only x values whose geometric-mean test/train ratio reaches this
  /// threshold (the segment with a visible generalization gap).
  std::optional<double> gap_threshold;
};

struct FitPoint {
  double x;
  std::size_t count;
  double geometric_mean;
  double arithmetic_mean;
  double gap_ratio;  // geometric-mean test / train (Original scale)
};

struct ScalingFit {
  double slope;
  double intercept;
  std::vector<FitPoint> points;  // points that entered the fit
};

inline ScalingFit fit_scaling(const std::vector<RunRecord>& records, const FitOptions& opt) {
  struct Acc {
    std::size_t count = 0;
    double sum_log = 0.0;
    double sum = 0.0;
    double sum_log_test = 0.0;
    double sum_log_train = 0.0;
  };
  std::map<double, Acc> groups;
  for (const auto& r : records) {
    if (opt.filter && !opt.filter(r)) continue;
    const double v = column_value(r, opt.column);
    if (!(v > 0.0)) throw ParameterError("fit_scaling: nonpositive value cannot be log-transformed");
    const double x = static_cast<double>(opt.x_axis == XAxis::Dimension ? r.d : r.n_total);
    Acc& a = groups[x];
    a.count += 1;
    a.sum_log += std::log(v);
    a.sum += v;
    a.sum_log_test += std::log(std::max(r.test_mse_orig, std::numeric_limits<double>::min()));
    a.sum_log_train += std::log(std::max(r.train_mse_orig, std::numeric_limits<double>::min()));
  }

  ScalingFit fit{0.0, 0.0, {}};
  Vector xs;
  Vector ys;
  for (const auto& [x, a] : groups) {
    const double n = static_cast<double>(a.count);
    FitPoint pt{x, a.count, std::exp(a.sum_log / n), a.sum / n,
                std::exp((a.sum_log_test - a.sum_log_train) / n)};
    if (opt.gap_threshold && pt.gap_ratio < *opt.gap_threshold) continue;
    xs.push_back(std::log(x));
    ys.push_back(opt.aggregation == Aggregation::Geometric ? a.sum_log / n : std::log(a.sum / n));
    fit.points.push_back(pt);
  }
  if (xs.size() < 2) {
    throw SingularityError("fit_scaling: need at least two distinct x values after filtering, have " +
                           std::to_string(xs.size()));
  }
  const LineFit line = ols_fit(xs, ys);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

// ---------------------------------------------------------------------------
// Local -> Global weight transfer

struct TransferResult {
  std::vector<EpochRecord> local_history;   // phase A, Local
  std::vector<EpochRecord> global_history;  // phase A, Global from scratch
  std::vector<EpochRecord> loaded_history;  // phase B, Global initialized by embedding
  double local_best_train_mse;              // Scaled, phase-A Local kept params
  double loaded_initial_train_mse;          // Scaled, embedded params before phase B
  SplitLoss local_test;
  SplitLoss global_test;
  SplitLoss loaded_test;
  Params local_best;
  Params global_best;
  Params loaded_best;
};

/// Phase A trains Local and Global independently; phase B embeds the kept
/// Local parameters into a Global network and trains it again with a fresh
/// optimizer. Histories are always recorded.
inline TransferResult transfer_experiment(const SplitDataset& ds, std::size_t alpha,
                                          TrainConfig config) {
  config.record_history = true;
  const Architecture local{ArchKind::Local, ds.d, alpha};
  const Architecture global{ArchKind::Global, ds.d, alpha};

  TrainResult ln = train(ds, local, config);
  TrainResult gn = train(ds, global, config);
  Params loaded_init = embed(ln.best_params);
  const double loaded_initial = evaluate(loaded_init, ds, Split::Train).scaled;
  TrainResult loaded = train(ds, global, config, std::move(loaded_init));

  TransferResult r{std::move(ln.history),
                   std::move(gn.history),
                   std::move(loaded.history),
                   evaluate(ln.best_params, ds, Split::Train).scaled,
                   loaded_initial,
                   evaluate(ln.best_params, ds, Split::Test),
                   evaluate(gn.best_params, ds, Split::Test),
                   evaluate(loaded.best_params, ds, Split::Test),
                   std::move(ln.best_params),
                   std::move(gn.best_params),
                   std::move(loaded.best_params)};
  return r;
}

/// phase,epoch,arch,train_mse_scaled,val_mse_scaled with phase-B epochs
/// continuing the phase-A count.
inline void write_transfer_csv(std::ostream& os, const TransferResult& r) {
  os << "phase,epoch,arch,train_mse_scaled,val_mse_scaled\n";
  char buf[160];
  auto emit = [&](const char* phase, const char* arch, const std::vector<EpochRecord>& h,
                  std::size_t offset) {
    for (const auto& e : h) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.17g,%.17g\n", phase, e.epoch + offset, arch,
                    e.train_mse, e.val_mse);
      os << buf;
    }
  };
  emit("A", "local", r.local_history, 0);
  emit("A", "global", r.global_history, 0);
  emit("B", "global_loaded", r.loaded_history, r.local_history.size());
}

// ---------------------------------------------------------------------------
// Residual correlation of a Local network

/// Empirical second moments C_ij = mean(z_i z_j) of the per-coordinate
/// residuals z_i = g(x_i) - block(x_i), over fresh uniform (unsorted) probes.
inline Matrix residual_correlation(const Params& p, std::size_t n_probe, Rng& rng,
                                   TargetKind target = TargetKind::Square) {
  if (p.arch.kind != ArchKind::Local) throw ParameterError("residual_correlation: Local network required");
  if (n_probe == 0) throw ParameterError("residual_correlation: n_probe must be positive");
  const std::size_t d = p.arch.d;

  // The shared block alone is a Local network with d = 1.
  Params block = p;
  block.arch.d = 1;

  const Vector xs = uniform(rng, -1.0, 1.0, n_probe * d);
  const Vector g = predict(block, Matrix(n_probe * d, 1, xs), 4096);
  Matrix z(n_probe, d);
  for (std::size_t k = 0; k < xs.size(); ++k) z.flat()[k] = component(target, xs[k]) - g[k];

  Matrix c(d, d);
  detail::view(c).noalias() = detail::view(z).transpose() * detail::view(z);
  detail::view(c) /= static_cast<double>(n_probe);
  return c;
}

// ---------------------------------------------------------------------------
// Sparsity maps of the first weight matrix

/// Max |W1| over consecutive groups of `pool` rows, per column.
inline Matrix sparsity_map(const Matrix& w1, std::size_t pool = 10) {
  if (pool == 0) throw ParameterError("sparsity_map: pool must be >= 1");
  const std::size_t out_rows = (w1.rows() + pool - 1) / pool;
  Matrix m(out_rows, w1.cols());
  for (std::size_t r = 0; r < w1.rows(); ++r) {
    for (std::size_t c = 0; c < w1.cols(); ++c) {
      double& cell = m(r / pool, c);
      cell = std::max(cell, std::abs(w1(r, c)));
    }
  }
  return m;
}

inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
}

/// Plain-text PGM (P2), values rescaled linearly from [min, max] to [0, 255].
inline void write_pgm(std::ostream& os, const Matrix& m) {
  const auto [lo_it, hi_it] = std::minmax_element(m.flat().begin(), m.flat().end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  os << "P2\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const int level = span > 0.0 ? static_cast<int>(std::lround((m(r, c) - lo) / span * 255.0)) : 0;
      os << (c ? " " : "") << level;
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiment config files: flat `key = value` lines, '#' comments, [section]
// headers ignored.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    // lo:hi:step ranges, inclusive
    if (std::count(item.begin(), item.end(), ':') == 2) {
      const auto parts = [&] {
        std::vector<std::size_t> v;
        std::stringstream ss(item);
        std::string p;
        while (std::getline(ss, p, ':')) v.push_back(static_cast<std::size_t>(std::stod(p)));
        return v;
      }();
      if (parts[2] == 0) throw ParameterError("range step must be positive");
      for (std::size_t v = parts[0]; v <= parts[1]; v += parts[2]) out.push_back(v);
    } else {
      out.push_back(static_cast<std::size_t>(std::stod(item)));
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentSpec parse_experiment_config(std::istream& is) {
  ExperimentSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::unquote(detail::trim(line.substr(eq + 1)));
    try {
      if (key == "archs" || key == "arch") {
        spec.archs.clear();
        for (const auto& a : detail::split_list(value)) spec.archs.push_back(parse_arch(a));
      } else if (key == "target") {
        spec.target = parse_target(value);
      } else if (key == "d_list" || key == "d") {
        spec.d_list = detail::parse_sizes(value);
      } else if (key == "n_total_list" || key == "n_total") {
        spec.n_total_list = detail::parse_sizes(value);
      } else if (key == "seeds_per_cell" || key == "seeds") {
        spec.seeds_per_cell = std::stoul(value);
      } else if (key == "alpha") {
        spec.alpha = std::stoul(value);
      } else if (key == "epochs") {
        spec.train.epochs = std::stoul(value);
      } else if (key == "batch" || key == "batch_policy") {
        spec.train.batch = BatchPolicy::parse(value);
      } else if (key == "reg" || key == "regularizer") {
        spec.train.regularizer = Regularizer::make(parse_reg(value), spec.train.regularizer.lambda);
      } else if (key == "lambda") {
        spec.train.regularizer.lambda = std::stod(value);
        spec.train.regularizer = Regularizer::make(spec.train.regularizer.kind, spec.train.regularizer.lambda);
      } else if (key == "lr") {
        spec.train.lr = std::stod(value);
      } else if (key == "decay") {
        spec.train.decay = std::stod(value);
      } else if (key == "seed" || key == "seed_base") {
        spec.train.seed = std::stoull(value);
      } else if (key == "data_seed") {
        spec.data_seed = std::stoull(value);
      } else if (key == "output") {
        spec.output = value;
      } else if (key == "workers") {
        spec.workers = std::stoul(value);
      } else {
        throw ParameterError("unknown key '" + key + "'");
      }
    } catch (const ParameterError& e) {
      throw ParameterError("config line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw ParameterError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

inline ExperimentSpec load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_experiment_config(is);
}

}  // namespace haystack
