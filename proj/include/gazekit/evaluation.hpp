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

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gazekit/corpus.hpp"
#include "gazekit/error.hpp"
#include "gazekit/features.hpp"
#include "gazekit/prediction.hpp"
#include "gazekit/regressor.hpp"
#include "gazekit/trainer.hpp"

namespace gazekit {

// ---------------------------------------------------------------------------
// Batch metrics
// ---------------------------------------------------------------------------

/// Whether padded cells of a batch enter the MAE denominator (as zero
/// error) or are excluded.
enum class PaddingMode { kExclude, kInclude };

/// B sentences padded to length L, G = kNumFeatures features per word.
/// Row b * L + l of `predictions` and `targets` holds word l of sentence b.
template <typename Scalar>
struct BatchTensors {
  Eigen::Index batch = 0;
  Eigen::Index length = 0;
  FeatureMatrixT<Scalar> predictions;
  FeatureMatrixT<Scalar> targets;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask;  ///< B x L

  BatchTensors() = default;
  BatchTensors(Eigen::Index b, Eigen::Index l)
      : batch(b),
        length(l),
        predictions(FeatureMatrixT<Scalar>::Zero(b * l, kNumFeatures)),
        targets(FeatureMatrixT<Scalar>::Zero(b * l, kNumFeatures)),
        mask(decltype(mask)::Constant(b, l, false)) {}

  bool valid(Eigen::Index b, Eigen::Index l) const { return mask(b, l); }
  Eigen::Index row(Eigen::Index b, Eigen::Index l) const { return b * length + l; }

  void check() const {
    if (predictions.rows() != batch * length || targets.rows() != batch * length || mask.rows() != batch ||
        mask.cols() != length) {
      throw UsageError("BatchTensors: shape disagreement");
    }
  }
};

/// Per-feature sums of absolute error over valid cells, plus the number of
/// positions that enter the denominator.
template <typename Scalar>
std::pair<FeatureRow<Scalar>, Eigen::Index> absolute_error_sums(const BatchTensors<Scalar>& b, PaddingMode mode) {
  b.check();
  FeatureRow<Scalar> sums = FeatureRow<Scalar>::Zero();
  Eigen::Index n_valid = 0;
  for (Eigen::Index i = 0; i < b.batch; ++i) {
    for (Eigen::Index l = 0; l < b.length; ++l) {
      if (!b.mask(i, l)) continue;
      ++n_valid;
      sums += (b.predictions.row(b.row(i, l)) - b.targets.row(b.row(i, l))).cwiseAbs();
    }
  }
  if (n_valid == 0) throw DataError("MAE: batch has no valid positions");
  const Eigen::Index positions = mode == PaddingMode::kInclude ? b.batch * b.length : n_valid;
  return {sums, positions};
}

/// Mean absolute error over all B*L*G (valid position, feature) cells.
template <typename Scalar>
Scalar mae_overall(const BatchTensors<Scalar>& b, PaddingMode mode = PaddingMode::kExclude) {
  const auto [sums, positions] = absolute_error_sums(b, mode);
  return sums.sum() / static_cast<Scalar>(positions * kNumFeatures);
}

/// Mean absolute error of each feature over the B*L valid positions.
template <typename Scalar>
FeatureRow<Scalar> mae_per_feature(const BatchTensors<Scalar>& b, PaddingMode mode = PaddingMode::kExclude) {
  const auto [sums, positions] = absolute_error_sums(b, mode);
  return sums / static_cast<Scalar>(positions);
}

template <typename Scalar>
constexpr Scalar accuracy_from_mae(Scalar mae) {
  return Scalar(100) - mae;
}

/// Packs sentences `indices` of a dataset with their predictions into a
/// padded batch. The mask is the dataset mask and the prediction mask.
BatchTensors<double> make_batch(const FeatureDataset& d, const std::vector<SentencePrediction>& predictions,
                                std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// Runs and reports
// ---------------------------------------------------------------------------

struct EvalOptions {
  int batch_size = 16;
  PaddingMode padding = PaddingMode::kExclude;
};

/// Metrics of one model on one dataset, averaged over batches.
struct RunMetrics {
  double overall_mae = 0.0;
  FeatureVector per_feature_mae = FeatureVector::Zero();
  std::size_t n_batches = 0;

  double overall_accuracy() const { return accuracy_from_mae(overall_mae); }
};

/// Predicts `d`, batches it by sentence length and averages batch MAEs.
RunMetrics evaluate_predictions(const FeatureDataset& d, const std::vector<SentencePrediction>& predictions,
                                const EvalOptions& opts = {});
RunMetrics evaluate_run(const Predictor& model, const FeatureDataset& d, const EvalOptions& opts = {});

/// Constant predictor emitting the per-feature training mean.
class MeanBaseline final : public Predictor {
 public:
  explicit MeanBaseline(FeatureVector means) : means_(means) {}
  const FeatureVector& means() const { return means_; }
  std::string name() const override { return "mean-baseline"; }
  std::vector<SentencePrediction> predict(const FeatureDataset& d) const override;

 private:
  FeatureVector means_;
};

MeanBaseline mean_baseline(const FeatureDataset& train);

enum class StdKind { kPopulation, kSample };

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

Stat aggregate(std::span<const double> values, StdKind kind = StdKind::kPopulation);

struct EvaluationReport {
  std::string model;
  std::string dataset;
  std::vector<std::string> feature_order{kFeatureNames.begin(), kFeatureNames.end()};
  Stat overall;  ///< accuracy
  std::array<Stat, kNumFeatures> per_feature{};  ///< accuracy per feature
  std::size_t n_seeds = 0;
  std::vector<RunMetrics> runs;

  std::string to_json() const;
  static EvaluationReport from_json(const std::string& text);
};

/// Aggregates per-seed metrics into mean and std of accuracy.
EvaluationReport make_report(std::string model, std::string dataset, std::vector<RunMetrics> runs,
                             StdKind kind = StdKind::kPopulation);

/// Evaluates every seed run on `test` and aggregates.
EvaluationReport evaluate(std::span<const Predictor* const> seed_runs, const FeatureDataset& test,
                          const EvalOptions& opts = {}, StdKind kind = StdKind::kPopulation);

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

struct CrossMatrix {
  std::vector<std::string> labels;  ///< row = fine-tuning set, column = test set
  Matrix error;                     ///< mean overall MAE over seed runs
  Matrix delta;                     ///< error(A, B) - error(B, B)

  /// source,target,error,delta
  std::string to_csv() const;
};

/// Models and tests are keyed by dataset; the key sets must agree.
CrossMatrix cross_matrix(const std::map<std::string, std::vector<const Predictor*>>& runs,
                         const std::map<std::string, FeatureDataset>& tests, const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

struct ExperimentSetup {
  EncoderSpec encoder;
  TrainConfig train;
  SplitRatios ratios;
  std::uint64_t split_seed = 42;
  FeatureOptions features;
  bool standardizer_on_full = false;  ///< fit the scaler on the whole corpus instead of the train split
  EvalOptions eval;
  StdKind std_kind = StdKind::kPopulation;
};

/// Split, extracted and standardized data of one corpus.
struct PreparedData {
  CorpusSplits splits;
  Standardizer standardizer;
  FeatureDataset train;
  FeatureDataset val;
  FeatureDataset test;
};

PreparedData prepare_data(const Corpus& c, const ExperimentSetup& setup);

struct TrainedRun {
  std::uint64_t seed = 0;
  std::unique_ptr<TokenRegressor> model;
  TrainingHistory history;
  RunMetrics test;
};

/// Builds a regressor for `seed`, trains it on `train` (or data.train) and
/// evaluates it on data.test.
TrainedRun train_and_evaluate(const PreparedData& data, const ExperimentSetup& setup, std::uint64_t seed,
                              const FeatureDataset* train = nullptr);

/// Seeded nested subsets: sizes ceil(f * n), every subset contains the
/// smaller ones. Indices are returned in ascending order.
std::vector<std::vector<std::size_t>> nested_subsamples(std::size_t n, std::span<const double> fractions,
                                                        std::uint64_t seed);

struct AblationPoint {
  double fraction = 0.0;
  std::size_t n_sentences = 0;
  Stat accuracy;
  std::vector<double> run_accuracies;
};

struct AblationCurve {
  std::vector<AblationPoint> points;
  Stat pretrained_reference;  ///< frozen encoder accuracy on the same test split
  std::vector<std::vector<std::size_t>> subsets;  ///< train sentence indices per fraction

  /// fraction,n_sentences,mean,std,pretrained_mean,pretrained_std
  std::string to_csv() const;
};

AblationCurve ablation_run(const Corpus& c, std::span<const double> fractions, const ExperimentSetup& setup);
AblationCurve ablation_run(const PreparedData& data, std::span<const double> fractions, const ExperimentSetup& setup);

}  // namespace gazekit
