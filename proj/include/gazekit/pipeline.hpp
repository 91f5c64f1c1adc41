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
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gazekit/evaluation.hpp"
#include "gazekit/manifest.hpp"

namespace gazekit {

/// Resolves a short name or checkpoint id; UsageError when unknown.
EncoderSpec resolve_encoder(const std::string& id);

/// Model label used in reports: the checkpoint id, suffixed "-frozen" for
/// encoders evaluated without fine-tuning.
std::string model_label(const EncoderSpec& spec);

nlohmann::ordered_json setup_to_json(const ExperimentSetup& s);

/// Applies the keys present in `j` on top of `base`. Unknown keys are a
/// UsageError. "encoder" may be an id string or an object; when the batch
/// size is not given it follows the encoder's default.
ExperimentSetup setup_from_json(const nlohmann::json& j, ExperimentSetup base = {});

/// Everything needed to reproduce one seed's training run.
struct RunConfig {
  std::filesystem::path corpus;
  std::string format = "unified-jsonl";
  ExperimentSetup setup;
  std::uint64_t seed = 12;
  std::optional<double> train_fraction;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// The seeded nested subset of the train split used for a fraction < 1.
FeatureDataset training_subset(const PreparedData& data, double fraction, std::uint64_t split_seed);

struct RunArtifacts {
  RunConfig config;
  std::string dataset;  ///< corpus name
  PreparedData data;
  std::unique_ptr<TokenRegressor> model;
  TrainingHistory history;
};

/// Trains one seed and writes config.json, standardizer.json, history.csv,
/// model.bin and manifest.json into `out`.
RunArtifacts train_run(const RunConfig& cfg, const std::filesystem::path& out, const std::string& command);

/// Reloads a run directory, recomputing its data splits. Throws DataError
/// when the corpus no longer matches the recorded hash.
RunArtifacts load_run(const std::filesystem::path& dir);

/// Evaluation of one model family on a test split, optionally with the
/// mean baseline and the frozen (no fine-tuning) encoder alongside.
struct EvaluationBundle {
  EvaluationReport model;
  std::optional<EvaluationReport> baseline;
  std::optional<EvaluationReport> pretrained;
  std::vector<std::uint64_t> seeds;
};

/// `models[i]` was trained with `seeds[i]`.
EvaluationBundle evaluate_models(const PreparedData& data, std::span<const TokenRegressor* const> models,
                                 std::span<const std::uint64_t> seeds, const ExperimentSetup& setup,
                                 const std::string& dataset, bool with_baselines);

/// Frozen encoder plus head for `seed`, with the output normalizer fitted
/// to data.train.
TokenRegressor frozen_regressor(const PreparedData& data, const ExperimentSetup& setup, std::uint64_t seed);

/// seed,overall_mae,overall_accuracy,<feature>_mae...
std::string metrics_csv(const EvaluationBundle& b);

/// Writes report.json, metrics.csv, per_feature.csv and, when present,
/// baseline.json and pretrained.json. Returns the relative paths.
std::vector<std::string> write_evaluation(const EvaluationBundle& b, const std::filesystem::path& out);

/// Stages in execution order.
inline constexpr std::array<std::string_view, 7> kStages = {"validate", "extract", "train", "evaluate",
                                                             "ablate",   "analyze", "report"};

/// JSON experiment file: corpus, stages, the ExperimentSetup keys, plus
/// "fractions", "analysis_feature" and an optional "tags" TSV.
struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path corpus;
  std::string format = "unified-jsonl";
  std::vector<std::string> stages;
  ExperimentSetup setup;
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.5, 1.0};
  std::string analysis_feature = "fProp";
  std::optional<std::filesystem::path> tags;

  nlohmann::ordered_json to_json() const;
  /// Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Runs the requested stages into `out`. A failing stage rethrows with the
/// stage named in the message; outputs written so far are kept and the
/// manifest records the failure.
void run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out, const std::string& command);

}  // namespace gazekit
