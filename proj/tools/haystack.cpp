// Command-line front end: train, sweep, fit, transfer, sparsity, residual, bounds.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "haystack/haystack.hpp"

using namespace haystack;

namespace {

struct TrainArgs {
  std::string reg = "none";
  double lambda = 0.0;
  std::size_t epochs = 1000;
  std::string batch = "ratio:100";
  double lr = 0.01;
  double decay = 0.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--reg", reg, "none | l1 | l2 | path")->capture_default_str();
    app->add_option("--lambda", lambda, "Regularization weight")->capture_default_str();
    app->add_option("--batch", batch, "ratio:K or size:N")->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--decay", decay, "Learning-rate decay")->capture_default_str();
    app->add_option("--seed", seed, "Optimizer seed")->capture_default_str();
  }

  TrainConfig config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch = BatchPolicy::parse(batch);
    c.regularizer = Regularizer::make(parse_reg(reg), lambda);
    c.lr = lr;
    c.decay = decay;
    c.seed = seed;
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

void print_kv(const char* key, double v) { std::printf("%s=%.10g\n", key, v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train small ReLU networks on separable targets and measure how their error scales."};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one network and save its weights");
  std::string arch_name = "global";
  std::string target_name = "square";
  std::size_t d = 8, n_total = 100000, alpha = 50;
  std::uint64_t data_seed = 2020;
  std::string weights_path, history_path;
  TrainArgs targs;
  train_cmd->add_option("--arch", arch_name, "global | lcn | local")->capture_default_str();
  train_cmd->add_option("--target", target_name, "square | quartic | cosine")->capture_default_str();
  train_cmd->add_option("--d", d, "Input dimension")->capture_default_str();
  train_cmd->add_option("--n", n_total, "Total samples before splitting")->capture_default_str();
  train_cmd->add_option("--alpha", alpha, "Per-coordinate width")->capture_default_str();
  train_cmd->add_option("--data-seed", data_seed, "Dataset seed")->capture_default_str();
  train_cmd->add_option("--weights", weights_path, "Write kept weights as JSON");
  train_cmd->add_option("--history", history_path, "Write per-epoch losses as CSV");
  targs.add(train_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment grid from a config file");
  std::string config_path;
  std::string sweep_out;
  std::size_t workers = 0;
  sweep_cmd->add_option("--config", config_path, "key = value config file")->required();
  sweep_cmd->add_option("--output", sweep_out, "Override the output CSV");
  sweep_cmd->add_option("--workers", workers, "Override the worker count");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit log loss against log d or log n");
  std::string csv_path, x_name = "dim", column_name = "test_mse_orig", filter_name = "none",
                        agg_name = "geometric", fit_arch;
  double gap_threshold = 2.0;
  fit_cmd->add_option("--csv", csv_path, "Sweep CSV")->required();
  fit_cmd->add_option("--x", x_name, "dim | samples")->capture_default_str();
  fit_cmd->add_option("--column", column_name, "Loss column to fit")->capture_default_str();
  fit_cmd->add_option("--filter", filter_name, "none | gap")->capture_default_str();
  fit_cmd->add_option("--gap-threshold", gap_threshold, "Minimum test/train ratio for --filter gap")
      ->capture_default_str();
  fit_cmd->add_option("--aggregate", agg_name, "geometric | arithmetic")->capture_default_str();
  fit_cmd->add_option("--arch", fit_arch, "Only rows with this architecture");

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "Train Local, then continue it as a Global network");
  std::string transfer_out;
  transfer_cmd->add_option("--d", d, "Input dimension")->capture_default_str();
  transfer_cmd->add_option("--n", n_total, "Total samples")->capture_default_str();
  transfer_cmd->add_option("--alpha", alpha, "Per-coordinate width")->capture_default_str();
  transfer_cmd->add_option("--target", target_name, "square | quartic | cosine")->capture_default_str();
  transfer_cmd->add_option("--data-seed", data_seed, "Dataset seed")->capture_default_str();
  transfer_cmd->add_option("--output", transfer_out, "Write loss curves as CSV");
  TrainArgs transfer_args;
  transfer_args.add(transfer_cmd);

  // sparsity
  auto* sparsity_cmd = app.add_subcommand("sparsity", "Max-pooled |W1| map of a saved network");
  std::string sp_weights, sp_format = "csv", sp_out;
  std::size_t pool = 10;
  sparsity_cmd->add_option("--weights", sp_weights, "Weights JSON")->required();
  sparsity_cmd->add_option("--pool", pool, "Rows pooled per output row")->capture_default_str();
  sparsity_cmd->add_option("--format", sp_format, "csv | pgm")->capture_default_str()
      ->check(CLI::IsMember({"csv", "pgm"}));
  sparsity_cmd->add_option("--output", sp_out, "Output file (stdout if omitted)");

  // residual
  auto* residual_cmd = app.add_subcommand("residual", "Residual correlation matrix of a Local network");
  std::string res_weights, res_target = "square";
  std::size_t n_probe = 100000;
  std::uint64_t probe_seed = 1;
  residual_cmd->add_option("--weights", res_weights, "Weights JSON of a Local network")->required();
  residual_cmd->add_option("--target", res_target, "Target the network was trained on")->capture_default_str();
  residual_cmd->add_option("--probes", n_probe, "Number of probe points")->capture_default_str();
  residual_cmd->add_option("--seed", probe_seed, "Probe seed")->capture_default_str();

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the path-norm generalization bounds");
  bounds::Inputs bin;
  bounds_cmd->add_option("--path-norm", bin.path_norm, "Path norm of the trained network")->required();
  bounds_cmd->add_option("--d", bin.d, "Input dimension")->required();
  bounds_cmd->add_option("--n", bin.n, "Training samples")->required();
  bounds_cmd->add_option("--delta", bin.delta, "Failure probability")->capture_default_str();
  bounds_cmd->add_option("--barron", bin.barron, "Barron norm estimate")->capture_default_str();
  bounds_cmd->add_option("--m", bin.m, "Hidden width")->capture_default_str();
  bounds_cmd->add_option("--lambda", bin.lambda, "Path-norm penalty")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const SplitDataset ds = generate(d, n_total, parse_target(target_name), data_seed);
      TrainConfig cfg = targs.config();
      cfg.record_history = !history_path.empty();
      const TrainResult r = train(ds, {parse_arch(arch_name), d, alpha}, cfg);
      const SplitLoss tr = evaluate(r.best_params, ds, Split::Train);
      const SplitLoss te = evaluate(r.best_params, ds, Split::Test);
      std::printf("best_epoch=%zu\n", r.best_epoch);
      print_kv("train_mse_scaled", tr.scaled);
      print_kv("test_mse_scaled", te.scaled);
      print_kv("train_mse_orig", tr.original);
      print_kv("test_mse_orig", te.original);
      print_kv("path_norm", r.final_path_norm);
      if (!weights_path.empty()) save_params(r.best_params, weights_path);
      if (!history_path.empty()) {
        auto os = open_out(history_path);
        write_history_csv(os, r.history, r.final_path_norm);
      }
    } else if (*sweep_cmd) {
      ExperimentSpec spec = load_experiment_config(config_path);
      if (!sweep_out.empty()) spec.output = sweep_out;
      if (workers > 0) spec.workers = workers;
      const auto records = run_sweep(spec, [](const RunRecord& r, std::size_t done, std::size_t total) {
        std::fprintf(stderr, "[%zu/%zu] %s d=%zu n=%zu seed=%llu test=%.4g (%.1fs)\n", done, total,
                     std::string(to_string(r.arch)).c_str(), r.d, r.n_total, static_cast<unsigned long long>(r.seed),
                     r.test_mse_orig, r.wall_time_s);
      });
      if (spec.output.empty()) write_runs_csv(std::cout, records);
    } else if (*fit_cmd) {
      FitOptions opt;
      if (x_name == "dim" || x_name == "d") {
        opt.x_axis = XAxis::Dimension;
      } else if (x_name == "samples" || x_name == "n") {
        opt.x_axis = XAxis::SampleCount;
      } else {
        throw ParameterError("--x must be dim or samples");
      }
      opt.column = parse_column(column_name);
      if (agg_name == "arithmetic") {
        opt.aggregation = Aggregation::Arithmetic;
      } else if (agg_name != "geometric") {
        throw ParameterError("--aggregate must be geometric or arithmetic");
      }
      if (filter_name == "gap") {
        opt.gap_threshold = gap_threshold;
      } else if (filter_name != "none") {
        throw ParameterError("--filter must be none or gap");
      }
      if (!fit_arch.empty()) {
        const ArchKind a = parse_arch(fit_arch);
        opt.filter = [a](const RunRecord& r) { return r.arch == a; };
      }
      const ScalingFit f = fit_scaling(read_runs_csv(csv_path), opt);
      for (const auto& p : f.points) {
        std::printf("x=%g count=%zu mean=%.6g gap_ratio=%.4g\n", p.x, p.count,
                    opt.aggregation == Aggregation::Geometric ? p.geometric_mean : p.arithmetic_mean,
                    p.gap_ratio);
      }
      print_kv("slope", f.slope);
      print_kv("intercept", f.intercept);
    } else if (*transfer_cmd) {
      const SplitDataset ds = generate(d, n_total, parse_target(target_name), data_seed);
      const TransferResult r = transfer_experiment(ds, alpha, transfer_args.config());
      print_kv("local_test_mse_scaled", r.local_test.scaled);
      print_kv("global_test_mse_scaled", r.global_test.scaled);
      print_kv("loaded_test_mse_scaled", r.loaded_test.scaled);
      print_kv("local_best_train_mse_scaled", r.local_best_train_mse);
      print_kv("loaded_initial_train_mse_scaled", r.loaded_initial_train_mse);
      if (!transfer_out.empty()) {
        auto os = open_out(transfer_out);
        write_transfer_csv(os, r);
      }
    } else if (*sparsity_cmd) {
      const Params p = load_params(sp_weights);
      const Matrix m = sparsity_map(p.w1, pool);
      std::ofstream file;
      if (!sp_out.empty()) file = open_out(sp_out);
      std::ostream& os = sp_out.empty() ? std::cout : file;
      if (sp_format == "pgm") {
        write_pgm(os, m);
      } else {
        write_matrix_csv(os, m);
      }
    } else if (*residual_cmd) {
      const Params p = load_params(res_weights);
      Rng rng(probe_seed);
      write_matrix_csv(std::cout, residual_correlation(p, n_probe, rng, parse_target(res_target)));
    } else if (*bounds_cmd) {
      const bounds::Report r = bounds::evaluate_all(bin);
      std::printf("# values hold up to a universal constant (set to 1)\n");
      print_kv("aposteriori_gap", r.aposteriori_gap);
      print_kv("leading_gap", r.leading_gap);
      print_kv("lambda_threshold", r.lambda_threshold);
      if (bin.lambda > 0.0) {
        print_kv("apriori_loss", r.apriori_loss);
        print_kv("apriori_pathnorm", r.apriori_pathnorm);
      }
      if (r.lambda_below_threshold) {
        std::fprintf(stderr, "warning: lambda=%g is below the threshold %g; the a priori estimate does not apply\n",
                     bin.lambda, r.lambda_threshold);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
