#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "haystack/training.hpp"
#include "test_support.hpp"

namespace haystack {
namespace {

using testing::central_difference;
using testing::random_params;
using testing::random_sorted_inputs;

Params filled(const Architecture& arch, double value) {
  Params p = Params::zeros(arch);
  for (Matrix* t : p.tensors()) {
    for (double& v : t->flat()) v = value;
  }
  return p;
}

const Architecture kScalar{ArchKind::Local, 1, 1};

TEST(AdamStep, ZeroGradientLeavesParamsUnchanged) {
  Rng rng(1);
  Params p = random_params({ArchKind::Global, 3, 2}, rng);
  const Params before = p;
  AdamState s(p.arch);
  adam_step(s, p, Params::zeros(p.arch));
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.t, 1u);
}

TEST(AdamStep, FirstStepHandValues) {
  // m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps_hat).
  {
    Params p = Params::zeros(kScalar);
    AdamState s(kScalar);
    adam_step(s, p, filled(kScalar, 1.0));
    EXPECT_NEAR(p.w1(0, 0), -0.01 / (1.0 + 1e-8), 1e-17);
    EXPECT_NEAR(p.w1(0, 0), -0.0099999999, 1e-13);
  }
  {
    Params p = Params::zeros(kScalar);
    AdamState s(kScalar);
    adam_step(s, p, filled(kScalar, -2.0));
    EXPECT_NEAR(p.b2(0, 0), 0.01 * 2.0 / (2.0 + 1e-8), 1e-17);
  }
}

TEST(AdamStep, InverseTimeDecay) {
  Params p = Params::zeros(kScalar);
  AdamState s(kScalar, {.lr = 0.01, .decay = 0.03});
  adam_step(s, p, filled(kScalar, 1.0));
  EXPECT_NEAR(p.w3(0, 0), -(0.01 / 1.03) / (1.0 + 1e-8), 1e-17);
}

TEST(AdamStep, StepIsBoundedByLearningRate) {
  for (double g : {1e-3, 0.7, -5.0, 123.0}) {
    Params p = Params::zeros(kScalar);
    AdamState s(kScalar);
    const Params grad = filled(kScalar, g);
    for (int t = 0; t < 1000; ++t) {
      const double before = p.w1(0, 0);
      adam_step(s, p, grad);
      EXPECT_LE(std::abs(p.w1(0, 0) - before), 0.01 * (1 + 1e-6));
    }
  }
}

TEST(AdamStep, ShapeMismatch) {
  Params p = Params::zeros(kScalar);
  AdamState s(kScalar);
  EXPECT_THROW(adam_step(s, p, Params::zeros({ArchKind::Local, 1, 2})), DimensionError);
}

/// Local d=1, alpha=1 with weights {1, -2, 3} and bias b1 = 7.
Params hand_regularizer_params() {
  Params p = Params::zeros(kScalar);
  p.w1(0, 0) = 1;
  p.w2(0, 0) = -2;
  p.w3(0, 0) = 3;
  p.b1(0, 0) = 7;
  return p;
}

TEST(Penalty, NoneIsZero) {
  const Penalty pen = penalty_and_grad(hand_regularizer_params(), Regularizer::none());
  EXPECT_EQ(pen.value, 0.0);
  EXPECT_EQ(pen.grad, Params::zeros(kScalar));
}

TEST(Penalty, L1AndL2HandValuesExcludeBiases) {
  const Params p = hand_regularizer_params();
  const Penalty l1 = penalty_and_grad(p, Regularizer::l1(0.1));
  const Penalty l2 = penalty_and_grad(p, Regularizer::l2(0.1));
  EXPECT_NEAR(l1.value, 0.6, 1e-15);
  EXPECT_NEAR(l2.value, 1.4, 1e-15);
  EXPECT_DOUBLE_EQ(l1.grad.w2(0, 0), -0.1);
  EXPECT_DOUBLE_EQ(l2.grad.w3(0, 0), 0.6);
  EXPECT_EQ(l1.grad.b1(0, 0), 0.0);
  EXPECT_EQ(l2.grad.b1(0, 0), 0.0);
}

TEST(Penalty, SignOfZeroIsZero) {
  Params p = hand_regularizer_params();
  p.w1(0, 0) = 0.0;
  EXPECT_EQ(penalty_and_grad(p, Regularizer::l1(1.0)).grad.w1(0, 0), 0.0);
  EXPECT_EQ(penalty_and_grad(p, Regularizer::path_norm(1.0)).grad.w2(0, 0), 0.0);
}

TEST(Penalty, BiasPerturbationDoesNotChangeWeightPenalties) {
  Rng rng(2);
  const Params p = random_params({ArchKind::Global, 3, 3}, rng);
  for (Regularizer reg : {Regularizer::l1(0.3), Regularizer::l2(0.3)}) {
    const double base = penalty_and_grad(p, reg).value;
    Params q = p;
    q.b1(0, 4) += 0.5;
    q.b2(0, 1) -= 2.0;
    EXPECT_EQ(penalty_and_grad(q, reg).value, base);
  }
}

TEST(Penalty, PathNormHandGradient) {
  Params p = Params::zeros({ArchKind::Global, 1, 1});
  p.w1(0, 0) = 2;
  p.w2(0, 0) = 3;
  p.w3(0, 0) = 0.5;
  const Regularizer reg = Regularizer::path_norm(1.0);
  const Penalty pen = penalty_and_grad(p, reg);
  EXPECT_DOUBLE_EQ(pen.value, 3.0);
  EXPECT_DOUBLE_EQ(pen.grad.w1(0, 0), 1.5);
  const double fd = central_difference(p, 0, 0, 1e-6, [&](const Params& q) {
    return penalty_and_grad(q, reg).value;
  });
  EXPECT_NEAR(pen.grad.w1(0, 0), fd, 1e-6);
}

TEST(Penalty, GradientsMatchFiniteDifferencesOnEveryLayout) {
  Rng rng(3);
  for (ArchKind k : {ArchKind::Global, ArchKind::LocallyConnected, ArchKind::Local}) {
    const Params p = random_params({k, 3, 2}, rng);
    for (Regularizer reg : {Regularizer::l1(0.2), Regularizer::l2(0.2), Regularizer::path_norm(0.2)}) {
      const Penalty pen = penalty_and_grad(p, reg);
      for (std::size_t t = 0; t < Params::kTensorCount; ++t) {
        const auto g = pen.grad.tensors()[t]->flat();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double fd = central_difference(
              p, t, i, 1e-6, [&](const Params& q) { return penalty_and_grad(q, reg).value; });
          EXPECT_NEAR(g[i], fd, 1e-7) << to_string(k) << " " << to_string(reg.kind);
        }
      }
    }
  }
}

TEST(Regularizer, RejectsNegativeLambda) {
  EXPECT_THROW(Regularizer::l1(-1.0), ParameterError);
  EXPECT_THROW(Regularizer::path_norm(std::nan("")), ParameterError);
}

TEST(BatchPolicy, Sizes) {
  EXPECT_EQ(BatchPolicy::fixed_ratio(100).batch_size(12800, 3200), 160u);
  EXPECT_EQ(BatchPolicy::fixed_ratio(100).batch_size(64, 16), 1u);
  EXPECT_EQ(BatchPolicy::fixed_ratio(100).batch_size(6, 1), 1u);
  EXPECT_EQ(BatchPolicy::fixed_size(80).batch_size(640, 160), 80u);
  EXPECT_EQ(BatchPolicy::parse("ratio:100"), BatchPolicy::fixed_ratio(100));
  EXPECT_EQ(BatchPolicy::parse("size:80").to_string(), "size:80");
  EXPECT_THROW(BatchPolicy::parse("80"), ParameterError);
}

TEST(StepObjective, MatchesIndependentRecomputation) {
  Rng rng(4);
  for (ArchKind k : {ArchKind::Global, ArchKind::LocallyConnected, ArchKind::Local}) {
    const Params p = random_params({k, 4, 3}, rng);
    const Matrix x = random_sorted_inputs(16, 4, rng);
    const Vector y = uniform(rng, 0, 1, 16);
    for (Regularizer reg : {Regularizer::none(), Regularizer::l2(1e-3), Regularizer::path_norm(1e-2)}) {
      const StepObjective obj = step_objective(p, x, y, reg);
      const Vector pred = predict(p, x);
      double sq = 0;
      for (std::size_t i = 0; i < y.size(); ++i) sq += (pred[i] - y[i]) * (pred[i] - y[i]);
      double expected = sq / y.size();
      if (reg.kind == RegKind::PathNorm) expected += reg.lambda * path_norm(p);
      if (reg.kind == RegKind::L2) {
        double s = 0;
        for (const Matrix* w : {&p.w1, &p.w2, &p.w3}) {
          for (double v : w->flat()) s += v * v;
        }
        expected += reg.lambda * s;
      }
      EXPECT_NEAR(obj.total(), expected, 1e-12);
    }
  }
}

TEST(Evaluate, BothScalesAndDeterminism) {
  const SplitDataset ds = generate(5, 200, TargetKind::Square, 3);
  Rng rng(5);
  const Params p = random_params({ArchKind::Global, 5, 3}, rng);
  const SplitLoss a = evaluate(p, ds, Split::Test);
  const SplitLoss b = evaluate(p, ds, Split::Test);
  EXPECT_EQ(a.scaled, b.scaled);
  EXPECT_EQ(a.original, 25.0 * a.scaled);
  EXPECT_THROW(evaluate(Params::zeros({ArchKind::Global, 4, 3}), ds, Split::Test), DimensionError);
}

TEST(Evaluate, PerfectParamsScoreZero) {
  // Square target with d = 1: relu(x) + relu(-x) squared is not exact, but a
  // zero network on a dataset whose targets are replaced by zero is.
  SplitDataset ds = generate(3, 50, TargetKind::Square, 1);
  std::fill(ds.y_test.begin(), ds.y_test.end(), 0.0);
  const SplitLoss l = evaluate(Params::zeros({ArchKind::Local, 3, 2}), ds, Split::Test);
  EXPECT_EQ(l.scaled, 0.0);
  EXPECT_EQ(l.original, 0.0);
}

TEST(Train, BestEpochIsFirstValidationMinimum) {
  const SplitDataset ds = generate(3, 400, TargetKind::Square, 7);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.record_history = true;
  cfg.seed = 3;
  const TrainResult r = train(ds, {ArchKind::Global, 3, 4}, cfg);
  ASSERT_EQ(r.history.size(), 40u);
  const auto it = std::min_element(r.history.begin(), r.history.end(),
                                    [](const auto& a, const auto& b) { return a.val_mse < b.val_mse; });
  EXPECT_EQ(r.best_epoch, it->epoch);
  EXPECT_EQ(r.best_val_mse, it->val_mse);
  EXPECT_EQ(evaluate(r.best_params, ds, Split::Val).scaled, r.best_val_mse);
  EXPECT_DOUBLE_EQ(r.final_path_norm, path_norm(r.best_params));
}

TEST(Train, LocalNetworkLearnsSquare) {
  const SplitDataset ds = generate(2, 2000, TargetKind::Square, 11);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 1;
  const Architecture arch{ArchKind::Local, 2, 20};
  Rng init_rng = Rng::derived(cfg.seed, detail::kInitStream);
  const Params init = init_glorot(arch, init_rng);
  const double initial = evaluate(init, ds, Split::Train).scaled;
  const TrainResult r = train(ds, arch, cfg);
  const double final_loss = evaluate(r.best_params, ds, Split::Train).scaled;
  EXPECT_LT(final_loss * 10.0, initial) << initial << " -> " << final_loss;
}

TEST(Train, DeterministicForSameInputs) {
  const SplitDataset ds = generate(4, 300, TargetKind::Cosine, 2);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 9;
  cfg.record_history = true;
  cfg.regularizer = Regularizer::path_norm(1e-4);
  for (ArchKind k : {ArchKind::Global, ArchKind::LocallyConnected, ArchKind::Local}) {
    const TrainResult a = train(ds, {k, 4, 3}, cfg);
    const TrainResult b = train(ds, {k, 4, 3}, cfg);
    EXPECT_EQ(a.best_params, b.best_params);
    EXPECT_EQ(a.best_epoch, b.best_epoch);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_EQ(a.history[i].train_mse, b.history[i].train_mse);
      EXPECT_EQ(a.history[i].val_mse, b.history[i].val_mse);
    }
  }
}

TEST(Train, SeedChangesTrajectory) {
  const SplitDataset ds = generate(3, 200, TargetKind::Square, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 1;
  const TrainResult a = train(ds, {ArchKind::Global, 3, 3}, cfg);
  cfg.seed = 2;
  const TrainResult b = train(ds, {ArchKind::Global, 3, 3}, cfg);
  EXPECT_NE(a.best_params, b.best_params);
}

TEST(Train, ZeroEpochsReturnsInit) {
  const SplitDataset ds = generate(3, 200, TargetKind::Square, 4);
  TrainConfig cfg;
  cfg.epochs = 30;
  const TrainResult ln = train(ds, {ArchKind::Local, 3, 4}, cfg);
  const Params init = embed(ln.best_params);
  cfg.epochs = 0;
  const TrainResult gn = train(ds, {ArchKind::Global, 3, 4}, cfg, init);
  EXPECT_EQ(gn.best_params, init);
  EXPECT_EQ(gn.best_epoch, 0u);
  EXPECT_TRUE(gn.history.empty());
}

TEST(Train, RejectsMismatchedInputs) {
  const SplitDataset ds = generate(3, 100, TargetKind::Square, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(ds, {ArchKind::Global, 4, 2}, cfg), DimensionError);
  EXPECT_THROW(train(ds, {ArchKind::Global, 3, 2}, cfg, Params::zeros({ArchKind::Local, 3, 2})),
               DimensionError);
  SplitDataset broken = ds;
  broken.y_val.clear();
  EXPECT_THROW(train(broken, {ArchKind::Global, 3, 2}, cfg), ParameterError);
}

TEST(HistoryCsv, Format) {
  std::vector<EpochRecord> h = {{1, 0.5, 0.25, std::nan("")}, {2, 0.125, 0.0625, std::nan("")}};
  std::stringstream ss;
  write_history_csv(ss, h, 3.5);
  EXPECT_EQ(ss.str(), "epoch,train_mse_scaled,val_mse_scaled,path_norm\n1,0.5,0.25,\n2,0.125,0.0625,3.5\n");
}

}  // namespace
}  // namespace haystack
