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

#include "gazekit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gazekit/error.hpp"
#include "gazekit/evaluation.hpp"

namespace gazekit {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (weight_decay < 0.0) throw UsageError("weight_decay must be non-negative");
  if (max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  if (patience < 1 || patience >= max_epochs) throw UsageError("patience must be in [1, max_epochs)");
  if (!(grad_clip > 0.0)) throw UsageError("grad_clip must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  if (seeds.empty()) throw UsageError("seed list is empty");
}

LinearDecaySchedule::LinearDecaySchedule(double base_lr, std::int64_t total_steps)
    : base_(base_lr), total_(total_steps) {
  if (total_steps < 1) throw UsageError("schedule needs at least one step");
}

double LinearDecaySchedule::at(std::int64_t step) const {
  return base_ * (1.0 - static_cast<double>(step) / static_cast<double>(total_));
}

double global_grad_norm(std::span<ad::Parameter* const> params) {
  double sq = 0.0;
  for (const auto* p : params) {
    if (p->var->grad.size() != 0) sq += p->var->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_global_norm(std::span<ad::Parameter* const> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / (norm + 1e-6);
    for (auto* p : params) {
      if (p->var->grad.size() != 0) p->var->grad *= factor;
    }
  }
  return norm;
}

AdamW::AdamW(std::vector<ad::Parameter*> params, double beta1, double beta2, double eps, double weight_decay)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
    v_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    if (!p->var->requires_grad) continue;
    const Matrix& g = p->var->grad;
    if (g.size() == 0) {
      m_[i] *= beta1_;
      v_[i] *= beta2_;
    } else {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    }
    if (p->decay && weight_decay_ > 0.0) p->value() *= (1.0 - lr * weight_decay_);
    p->value().array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

bool EarlyStopper::update(int epoch, double val_accuracy) {
  if (val_accuracy > best_) {
    best_ = val_accuracy;
    best_epoch_ = epoch;
    since_best_ = 0;
    improved_ = true;
  } else {
    ++since_best_;
    improved_ = false;
  }
  return since_best_ >= patience_;
}

std::string TrainingHistory::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_accuracy,lr\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_accuracy << ',' << e.lr << '\n';
  return os.str();
}

ad::Var batch_loss(const TokenRegressor& model, const FeatureDataset& d, std::span<const std::size_t> batch) {
  std::vector<ad::Var> parts;
  Eigen::Index n_valid = 0;
  for (std::size_t idx : batch) {
    const auto& s = d.sentences.at(idx);
    const auto f = model.forward(s.tokens);
    const Mask mask = s.mask.head(f.n_words_kept);
    const Eigen::Index valid = mask.count();
    if (valid == 0) continue;
    n_valid += valid;
    parts.push_back(ad::masked_sse(f.predictions, s.values.topRows(f.n_words_kept), mask));
  }
  if (n_valid == 0) return nullptr;
  return ad::scale(ad::sum(parts), 1.0 / static_cast<double>(n_valid * kNumFeatures));
}

namespace {

std::vector<Matrix> snapshot(const std::vector<ad::Parameter*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value());
  return out;
}

void restore(const std::vector<ad::Parameter*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value() = values[i];
}

double mean_loss(const TokenRegressor& model, const FeatureDataset& d, const std::vector<std::size_t>& idx,
                 int batch_size) {
  double total = 0.0;
  int n = 0;
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(idx.size(), at + static_cast<std::size_t>(batch_size));
    const auto loss = batch_loss(model, d, std::span(idx).subspan(at, end - at));
    if (!loss) continue;
    total += loss->value(0, 0);
    ++n;
  }
  return n == 0 ? 0.0 : total / n;
}

}  // namespace

TrainingHistory train(TokenRegressor& model, const FeatureDataset& train, const FeatureDataset& val,
                      const TrainConfig& cfg, std::uint64_t seed, const ValidationFn& validation) {
  cfg.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.sentences.size(); ++i) {
    if (train.sentences[i].mask.any()) usable.push_back(i);
  }
  if (usable.empty()) throw DataError("train: training set '" + train.corpus + "' is empty");
  if (!validation && val.empty()) throw DataError("train: validation set '" + val.corpus + "' is empty");

  // Fixed output normalizer from training targets.
  const FeatureMatrix targets = train.valid_rows();
  const RowVector mean = targets.colwise().mean();
  RowVector sd = ((targets.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (!(sd(i) > 1e-6)) sd(i) = 1.0;
  }
  model.set_output_normalizer(mean, sd);

  auto val_accuracy = [&](int epoch) {
    if (validation) return validation(model, epoch);
    EvalOptions eo;
    eo.batch_size = cfg.batch_size;
    return 100.0 - evaluate_run(model, val, eo).overall_mae;
  };

  TrainingHistory hist;
  auto params = model.parameters();
  const bool trainable = model.spec().trainable;
  if (!trainable) {
    model.set_requires_grad(false, false);
    EpochRecord rec;
    rec.epoch = 0;
    rec.train_loss = mean_loss(model, train, usable, cfg.batch_size);
    rec.val_accuracy = val_accuracy(0);
    hist.epochs.push_back(rec);
    hist.best_epoch = 0;
    hist.best_val_accuracy = rec.val_accuracy;
    return hist;
  }
  model.set_requires_grad(true, true);

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((usable.size() + batch - 1) / batch);
  const LinearDecaySchedule schedule(cfg.learning_rate, steps_per_epoch * cfg.max_epochs);
  AdamW opt(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);
  EarlyStopper stopper(cfg.patience);
  std::mt19937_64 rng(seed);
  std::vector<Matrix> best = snapshot(params);
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int n_batches = 0;
    double lr = 0.0;
    for (std::size_t at = 0; at < order.size(); at += batch) {
      const auto end = std::min(order.size(), at + batch);
      for (auto* p : params) p->var->zero_grad();
      const ad::Var loss = batch_loss(model, train, std::span(order).subspan(at, end - at));
      if (!loss) continue;
      const double value = loss->value(0, 0);
      if (!std::isfinite(value)) {
        throw RuntimeFailure("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step));
      }
      ad::backward(loss);
      const double norm = clip_global_norm(params, cfg.grad_clip);
      lr = schedule.at(step);
      if (cfg.record_steps) hist.steps.push_back({step, lr, norm, global_grad_norm(params)});
      opt.step(lr);
      ++step;
      loss_sum += value;
      ++n_batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = n_batches == 0 ? 0.0 : loss_sum / n_batches;
    rec.val_accuracy = val_accuracy(epoch);
    rec.lr = lr;
    hist.epochs.push_back(rec);
    const bool stop = stopper.update(epoch, rec.val_accuracy);
    if (stopper.improved()) best = snapshot(params);
    if (stop) {
      hist.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  for (auto* p : params) p->var->zero_grad();
  restore(params, best);
  hist.best_epoch = stopper.best_epoch();
  hist.best_val_accuracy = stopper.best_accuracy();
  return hist;
}

}  // namespace gazekit
