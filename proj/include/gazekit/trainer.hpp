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

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazekit/features.hpp"
#include "gazekit/regressor.hpp"

namespace gazekit {

struct TrainConfig {
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  int max_epochs = 100;
  int patience = 7;
  double grad_clip = 1.0;  ///< maximum global gradient norm
  int batch_size = 16;
  std::vector<std::uint64_t> seeds = {12, 79, 237, 549, 886};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Keep per-step learning rate and gradient norms in the history.
  bool record_steps = false;

  /// Throws UsageError when an invariant does not hold.
  void validate() const;
};

/// Learning rate lr * (1 - t / total) at step t.
class LinearDecaySchedule {
 public:
  LinearDecaySchedule(double base_lr, std::int64_t total_steps);
  double at(std::int64_t step) const;
  std::int64_t total_steps() const { return total_; }

 private:
  double base_;
  std::int64_t total_;
};

/// Global L2 norm over every parameter gradient.
double global_grad_norm(std::span<ad::Parameter* const> params);
/// Rescales gradients so their global norm is at most max_norm. Returns the
/// norm before clipping.
double clip_global_norm(std::span<ad::Parameter* const> params, double max_norm);

/// Adam with decoupled weight decay. Decay applies to parameters flagged
/// `decay` only.
class AdamW {
 public:
  AdamW(std::vector<ad::Parameter*> params, double beta1, double beta2, double eps, double weight_decay);
  void step(double lr);

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<Matrix> m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  std::int64_t t_ = 0;
};

/// Tracks validation accuracy and decides when to stop. Only a strict
/// improvement resets the patience counter.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  /// Records one epoch; returns true when training should stop.
  bool update(int epoch, double val_accuracy);
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_accuracy() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_ = -std::numeric_limits<double>::infinity();
  int since_best_ = 0;
  bool improved_ = false;
};

struct EpochRecord {
  int epoch = 0;  ///< 1-based; 0 is the evaluation of an untrained model
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;  ///< learning rate at the last step of the epoch
};

struct StepRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double grad_norm = 0.0;
  double clipped_norm = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;

  /// CSV with header epoch,train_loss,val_accuracy,lr.
  std::string to_csv() const;
};

/// Validation accuracy of the current model; defaults to 100 - MAE on the
/// validation set.
using ValidationFn = std::function<double(const TokenRegressor&, int epoch)>;

/// Mean squared error over valid words and all features of a batch, as a
/// graph node. Words the encoder truncated are excluded.
ad::Var batch_loss(const TokenRegressor& model, const FeatureDataset& d, std::span<const std::size_t> batch);

/// Fine-tunes `model` on standardized datasets and restores the parameters of
/// the best validation epoch. With a frozen encoder spec (trainable = false)
/// nothing is updated and the history holds a single evaluation.
TrainingHistory train(TokenRegressor& model, const FeatureDataset& train, const FeatureDataset& val,
                      const TrainConfig& cfg, std::uint64_t seed, const ValidationFn& validation = {});

}  // namespace gazekit
