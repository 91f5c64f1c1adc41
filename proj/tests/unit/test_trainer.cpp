// Copyright 2026 The gazekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "gazekit/error.hpp"
#include "gazekit/evaluation.hpp"
#include "gazekit/synthetic.hpp"
#include "gazekit/trainer.hpp"
#include "support.hpp"

namespace gk = gazekit;

namespace {

gk::EncoderSpec small_spec() {
  gk::EncoderSpec s;
  s.hidden_size = 16;
  s.layers = 1;
  s.ffn_size = 32;
  s.vocab_size = 512;
  return s;
}

struct Data {
  gk::FeatureDataset train, val;
};

Data small_data(std::uint64_t seed, int n_train = 24) {
  std::mt19937_64 rng(seed);
  return {gk::testing::random_dataset(rng, n_train), gk::testing::random_dataset(rng, 6)};
}

std::vector<gk::Matrix> values(gk::TokenRegressor& m) {
  std::vector<gk::Matrix> out;
  for (auto* p : m.parameters()) out.push_back(p->value());
  return out;
}

}  // namespace

TEST(TrainConfig, DefaultsAndValidation) {
  gk::TrainConfig c;
  EXPECT_EQ(c.learning_rate, 5e-5);
  EXPECT_EQ(c.weight_decay, 0.01);
  EXPECT_EQ(c.max_epochs, 100);
  EXPECT_EQ(c.patience, 7);
  EXPECT_EQ(c.grad_clip, 1.0);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{12, 79, 237, 549, 886}));
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(gk::TrainConfig&)>>{
           [](auto& x) { x.learning_rate = 0; }, [](auto& x) { x.weight_decay = -1; },
           [](auto& x) { x.max_epochs = 0; }, [](auto& x) { x.patience = 100; }, [](auto& x) { x.grad_clip = 0; },
           [](auto& x) { x.batch_size = 0; }, [](auto& x) { x.seeds.clear(); }}) {
    gk::TrainConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), gk::UsageError);
  }
}

TEST(LinearDecaySchedule, MatchesFormulaAtEveryStep) {
  for (std::int64_t T : {1, 7, 1000}) {
    const gk::LinearDecaySchedule s(5e-5, T);
    for (std::int64_t t = 0; t < T; ++t) {
      ASSERT_NEAR(s.at(t), 5e-5 * (1.0 - static_cast<double>(t) / static_cast<double>(T)), 1e-12);
    }
    EXPECT_GT(s.at(T - 1), 0.0);
  }
  EXPECT_THROW(gk::LinearDecaySchedule(1e-3, 0), gk::UsageError);
}

TEST(ClipGlobalNorm, BoundsNormAndKeepsDirection) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 10);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<gk::ad::Parameter> ps;
    for (int i = 0; i < 3; ++i) {
      ps.push_back({"p", gk::ad::leaf(gk::Matrix::Zero(2, 3), true), true});
      ps.back().var->grad = gk::Matrix::NullaryExpr(2, 3, [&]() { return n(rng); });
    }
    std::vector<gk::ad::Parameter*> ptrs;
    for (auto& p : ps) ptrs.push_back(&p);
    const gk::Matrix before = ps[0].var->grad;
    const double norm = gk::clip_global_norm(ptrs, 1.0);
    const double after = gk::global_grad_norm(ptrs);
    ASSERT_LE(after, 1.0 + 1e-6);
    if (norm <= 1.0) {
      ASSERT_EQ(ps[0].var->grad, before);
    } else {
      ASSERT_NEAR((ps[0].var->grad - before * (after / norm)).cwiseAbs().maxCoeff(), 0.0, 1e-9);
    }
  }
}

TEST(AdamW, DecayOnlyOnFlaggedParameters) {
  gk::ad::Parameter w{"w", gk::ad::leaf(gk::Matrix::Constant(2, 2, 3.0), true), true};
  gk::ad::Parameter b{"b", gk::ad::leaf(gk::Matrix::Constant(1, 2, 3.0), true), false};
  w.var->grad = gk::Matrix::Zero(2, 2);
  b.var->grad = gk::Matrix::Zero(1, 2);
  gk::AdamW opt({&w, &b}, 0.9, 0.999, 1e-8, 0.01);
  opt.step(0.1);
  EXPECT_DOUBLE_EQ(w.value()(0, 0), 3.0 * (1.0 - 0.1 * 0.01));
  EXPECT_DOUBLE_EQ(b.value()(0, 0), 3.0);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  gk::ad::Parameter p{"p", gk::ad::leaf(gk::Matrix::Constant(1, 3, 1.0), true), false};
  p.var->grad = (gk::Matrix(1, 3) << 2.0, -0.5, 0.0).finished();
  gk::AdamW opt({&p}, 0.9, 0.999, 1e-8, 0.0);
  opt.step(0.01);
  EXPECT_NEAR(p.value()(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value()(0, 1), 1.0 + 0.01, 1e-9);
  EXPECT_EQ(p.value()(0, 2), 1.0);
}

TEST(EarlyStopper, TiesDoNotResetPatience) {
  gk::EarlyStopper s(3);
  EXPECT_FALSE(s.update(1, 50));
  EXPECT_FALSE(s.update(2, 50));
  EXPECT_FALSE(s.update(3, 49));
  EXPECT_TRUE(s.update(4, 50));
  EXPECT_EQ(s.best_epoch(), 1);
  gk::EarlyStopper t(2);
  EXPECT_FALSE(t.update(1, 1));
  EXPECT_FALSE(t.update(2, 0));
  EXPECT_FALSE(t.update(3, 2));
  EXPECT_TRUE(t.improved());
  EXPECT_FALSE(t.update(4, 2));
  EXPECT_TRUE(t.update(5, 1));
}

TEST(Train, StopsAfterPatienceEpochsWithoutImprovement) {
  auto d = small_data(1);
  gk::TrainConfig cfg;
  cfg.max_epochs = 30;
  auto model = gk::build_regressor(small_spec(), 1);
  const auto h = gk::train(model, d.train, d.val, cfg, 1, [](const gk::TokenRegressor&, int) { return 70.0; });
  EXPECT_EQ(h.epochs.size(), static_cast<std::size_t>(cfg.patience + 1));
  EXPECT_TRUE(h.stopped_early);
  EXPECT_EQ(h.best_epoch, 1);
}

TEST(Train, RestoresBestEpoch) {
  auto d = small_data(2);
  gk::TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.patience = 3;
  cfg.learning_rate = 1e-3;
  auto model = gk::build_regressor(small_spec(), 2);
  std::vector<gk::Matrix> at_best;
  const auto h = gk::train(model, d.train, d.val, cfg, 2, [&](const gk::TokenRegressor& m, int epoch) {
    if (epoch == 2) {
      for (const auto* p : m.parameters()) at_best.push_back(p->value());
    }
    return epoch == 2 ? 90.0 : 80.0 - epoch;
  });
  EXPECT_EQ(h.best_epoch, 2);
  EXPECT_EQ(h.epochs.size(), 5u);
  EXPECT_EQ(values(model), at_best);
}

TEST(Train, StepScheduleAndClippingAreRecorded) {
  auto d = small_data(3, 40);
  gk::TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 3;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.record_steps = true;
  auto model = gk::build_regressor(small_spec(), 3);
  const auto h = gk::train(model, d.train, d.val, cfg, 3, [](const gk::TokenRegressor&, int e) { return double(e); });
  const std::int64_t T = 5 * 4;
  ASSERT_EQ(h.steps.size(), static_cast<std::size_t>(T));
  for (const auto& s : h.steps) {
    EXPECT_NEAR(s.lr, cfg.learning_rate * (1.0 - static_cast<double>(s.step) / static_cast<double>(T)), 1e-12);
    EXPECT_LE(s.clipped_norm, 1.0 + 1e-6);
    EXPECT_LE(s.clipped_norm, s.grad_norm + 1e-12);
  }
}

TEST(Train, FrozenLeavesParametersBitIdentical) {
  auto d = small_data(4);
  auto spec = small_spec();
  spec.trainable = false;
  auto model = gk::build_regressor(spec, 4);
  const auto before = values(model);
  const auto h = gk::train(model, d.train, d.val, {}, 4);
  EXPECT_EQ(values(model), before);
  ASSERT_EQ(h.epochs.size(), 1u);
  EXPECT_EQ(h.epochs[0].epoch, 0);
}

TEST(Train, SetsOutputNormalizerFromTrainingTargets) {
  auto d = small_data(5);
  auto model = gk::build_regressor(small_spec(), 5);
  gk::TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 1;
  gk::train(model, d.train, d.val, cfg, 5);
  const auto rows = d.train.valid_rows();
  const gk::RowVector mean = rows.colwise().mean();
  EXPECT_LE((model.output_shift() - mean).cwiseAbs().maxCoeff(), 1e-9);
  const double sd0 = std::sqrt((rows.col(0).array() - mean(0)).square().mean());
  EXPECT_NEAR(model.output_scale()(0), sd0, 1e-9);
}

TEST(Train, SameSeedSameResult) {
  auto d = small_data(6);
  gk::TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 2;
  cfg.learning_rate = 1e-3;
  auto a = gk::build_regressor(small_spec(), 9);
  auto b = gk::build_regressor(small_spec(), 9);
  const auto ha = gk::train(a, d.train, d.val, cfg, 9);
  const auto hb = gk::train(b, d.train, d.val, cfg, 9);
  EXPECT_EQ(ha.to_csv(), hb.to_csv());
  EXPECT_EQ(values(a), values(b));
}

TEST(Train, LowersTrainingLoss) {
  auto d = small_data(7);
  gk::TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.patience = 14;
  cfg.learning_rate = 1e-3;
  auto model = gk::build_regressor(small_spec(), 7);
  const auto h = gk::train(model, d.train, d.val, cfg, 7, [](const gk::TokenRegressor&, int e) { return double(e); });
  EXPECT_LT(h.epochs.back().train_loss, h.epochs.front().train_loss);
}

TEST(Train, EmptyInputsAreDataErrors) {
  auto d = small_data(8);
  auto model = gk::build_regressor(small_spec(), 1);
  gk::FeatureDataset empty;
  EXPECT_THROW(gk::train(model, empty, d.val, {}, 1), gk::DataError);
  EXPECT_THROW(gk::train(model, d.train, empty, {}, 1), gk::DataError);
}

TEST(BatchLoss, MeanOverValidCellsOnly) {
  std::mt19937_64 rng(9);
  auto d = gk::testing::random_dataset(rng, 2, 5);
  d.sentences[1].mask.setConstant(false);
  auto model = gk::build_regressor(small_spec(), 1);
  const std::vector<std::size_t> both = {0, 1}, first = {0}, second = {1};
  EXPECT_DOUBLE_EQ(gk::batch_loss(model, d, both)->value(0, 0), gk::batch_loss(model, d, first)->value(0, 0));
  EXPECT_EQ(gk::batch_loss(model, d, second), nullptr);
  const auto pred = model.predict(d)[0].values;
  const double mse = (pred - d.sentences[0].values).array().square().mean();
  EXPECT_NEAR(gk::batch_loss(model, d, first)->value(0, 0), mse, 1e-9);
}

TEST(TrainingHistory, CsvHeader) {
  gk::TrainingHistory h;
  h.epochs.push_back({1, 0.5, 80.0, 1e-5});
  EXPECT_EQ(h.to_csv().substr(0, 32), "epoch,train_loss,val_accuracy,lr");
}
