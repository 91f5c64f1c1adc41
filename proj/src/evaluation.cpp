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

#include "gazekit/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gazekit {

BatchTensors<double> make_batch(const FeatureDataset& d, const std::vector<SentencePrediction>& predictions,
                                std::span<const std::size_t> indices) {
  Eigen::Index length = 0;
  for (std::size_t i : indices) length = std::max<Eigen::Index>(length, d.sentences.at(i).values.rows());
  BatchTensors<double> b(static_cast<Eigen::Index>(indices.size()), length);
  for (Eigen::Index k = 0; k < b.batch; ++k) {
    const std::size_t i = indices[static_cast<std::size_t>(k)];
    const auto& s = d.sentences[i];
    const auto& p = predictions.at(i);
    const Eigen::Index n = s.values.rows();
    if (p.values.rows() != n || p.mask.size() != n) throw UsageError("make_batch: prediction shape mismatch");
    b.targets.middleRows(b.row(k, 0), n) = s.values;
    b.predictions.middleRows(b.row(k, 0), n) = p.values;
    b.mask.row(k).head(n) = (s.mask && p.mask).transpose();
  }
  return b;
}

RunMetrics evaluate_predictions(const FeatureDataset& d, const std::vector<SentencePrediction>& predictions,
                                const EvalOptions& opts) {
  if (opts.batch_size < 1) throw UsageError("evaluation batch size must be positive");
  if (predictions.size() != d.sentences.size()) throw UsageError("evaluate: prediction count mismatch");
  std::vector<std::size_t> order(d.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.sentences[a].size() < d.sentences[b].size();
  });

  RunMetrics m;
  const auto bs = static_cast<std::size_t>(opts.batch_size);
  for (std::size_t at = 0; at < order.size(); at += bs) {
    const auto idx = std::span(order).subspan(at, std::min(bs, order.size() - at));
    const auto batch = make_batch(d, predictions, idx);
    if (!batch.mask.any()) continue;
    m.overall_mae += mae_overall(batch, opts.padding);
    m.per_feature_mae += mae_per_feature(batch, opts.padding);
    ++m.n_batches;
  }
  if (m.n_batches == 0) throw DataError("evaluate: dataset '" + d.corpus + "' has no valid tokens");
  m.overall_mae /= static_cast<double>(m.n_batches);
  m.per_feature_mae /= static_cast<double>(m.n_batches);
  return m;
}

RunMetrics evaluate_run(const Predictor& model, const FeatureDataset& d, const EvalOptions& opts) {
  if (d.empty()) throw DataError("evaluate: dataset '" + d.corpus + "' is empty");
  return evaluate_predictions(d, model.predict(d), opts);
}

std::vector<SentencePrediction> MeanBaseline::predict(const FeatureDataset& d) const {
  std::vector<SentencePrediction> out;
  out.reserve(d.sentences.size());
  for (const auto& s : d.sentences) {
    const auto n = static_cast<Eigen::Index>(s.size());
    out.push_back({means_.replicate(n, 1), Mask::Constant(n, true)});
  }
  return out;
}

MeanBaseline mean_baseline(const FeatureDataset& train) {
  const FeatureMatrix rows = train.valid_rows();
  if (rows.rows() == 0) throw DataError("mean_baseline: training set '" + train.corpus + "' is empty");
  return MeanBaseline(rows.colwise().mean());
}

Stat aggregate(std::span<const double> values, StdKind kind) {
  if (values.empty()) throw UsageError("aggregate: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double denom = kind == StdKind::kSample ? n - 1.0 : n;
  return {mean, denom > 0.0 ? std::sqrt(ss / denom) : 0.0};
}

EvaluationReport make_report(std::string model, std::string dataset, std::vector<RunMetrics> runs, StdKind kind) {
  if (runs.empty()) throw UsageError("make_report: no runs");
  EvaluationReport r;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.n_seeds = runs.size();
  std::vector<double> mae;
  for (const auto& run : runs) mae.push_back(run.overall_mae);
  const Stat s = aggregate(mae, kind);
  r.overall = {accuracy_from_mae(s.mean), s.std};
  for (int f = 0; f < kNumFeatures; ++f) {
    std::vector<double> fm;
    for (const auto& run : runs) fm.push_back(run.per_feature_mae(f));
    const Stat sf = aggregate(fm, kind);
    r.per_feature[static_cast<std::size_t>(f)] = {accuracy_from_mae(sf.mean), sf.std};
  }
  r.runs = std::move(runs);
  return r;
}

EvaluationReport evaluate(std::span<const Predictor* const> seed_runs, const FeatureDataset& test,
                          const EvalOptions& opts, StdKind kind) {
  if (seed_runs.empty()) throw UsageError("evaluate: no model runs supplied");
  std::vector<RunMetrics> runs;
  for (const auto* p : seed_runs) runs.push_back(evaluate_run(*p, test, opts));
  return make_report(seed_runs.front()->name(), test.corpus, std::move(runs), kind);
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["dataset"] = dataset;
  j["feature_order"] = feature_order;
  j["overall"] = {{"mean", overall.mean}, {"std", overall.std}};
  nlohmann::ordered_json pf;
  for (int f = 0; f < kNumFeatures; ++f) {
    const auto& s = per_feature[static_cast<std::size_t>(f)];
    pf[std::string(kFeatureNames[static_cast<std::size_t>(f)])] = {{"mean", s.mean}, {"std", s.std}};
  }
  j["per_feature"] = pf;
  j["n_seeds"] = n_seeds;
  std::vector<double> acc;
  for (const auto& r : runs) acc.push_back(r.overall_accuracy());
  j["run_accuracies"] = acc;
  return j.dump(2);
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
  EvaluationReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.model = j.at("model").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    if (r.feature_order.size() != static_cast<std::size_t>(kNumFeatures)) {
      throw DataError("report: feature_order must list 8 features");
    }
    for (const auto& name : r.feature_order) {
      if (!parse_feature(name)) throw DataError("report: unknown feature '" + name + "' in feature_order");
    }
    r.overall = {j.at("overall").at("mean").get<double>(), j.at("overall").at("std").get<double>()};
    const auto& pf = j.at("per_feature");
    if (pf.size() != static_cast<std::size_t>(kNumFeatures)) throw DataError("report: expected 8 per-feature entries");
    for (int f = 0; f < kNumFeatures; ++f) {
      const auto& e = pf.at(std::string(kFeatureNames[static_cast<std::size_t>(f)]));
      r.per_feature[static_cast<std::size_t>(f)] = {e.at("mean").get<double>(), e.at("std").get<double>()};
    }
    r.n_seeds = j.value("n_seeds", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report JSON: ") + e.what());
  }
  return r;
}

std::string CrossMatrix::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "source,target,error,delta\n";
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t b = 0; b < labels.size(); ++b) {
      const auto i = static_cast<Eigen::Index>(a);
      const auto k = static_cast<Eigen::Index>(b);
      os << labels[a] << ',' << labels[b] << ',' << error(i, k) << ',' << delta(i, k) << '\n';
    }
  }
  return os.str();
}

CrossMatrix cross_matrix(const std::map<std::string, std::vector<const Predictor*>>& runs,
                         const std::map<std::string, FeatureDataset>& tests, const EvalOptions& opts) {
  CrossMatrix m;
  for (const auto& [name, models] : runs) {
    if (!tests.contains(name)) throw DataError("cross_matrix: no test split for '" + name + "'");
    if (models.empty()) throw DataError("cross_matrix: no model runs for '" + name + "'");
    m.labels.push_back(name);
  }
  for (const auto& [name, t] : tests) {
    if (!runs.contains(name)) throw DataError("cross_matrix: no model for '" + name + "'");
  }
  const auto n = static_cast<Eigen::Index>(m.labels.size());
  m.error = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& models = runs.at(m.labels[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& test = tests.at(m.labels[static_cast<std::size_t>(b)]);
      double sum = 0.0;
      for (const auto* p : models) sum += evaluate_run(*p, test, opts).overall_mae;
      m.error(a, b) = sum / static_cast<double>(models.size());
    }
  }
  m.delta = m.error.rowwise() - m.error.diagonal().transpose();
  return m;
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

PreparedData prepare_data(const Corpus& c, const ExperimentSetup& setup) {
  PreparedData p;
  p.splits = split_dataset(c, setup.ratios, setup.split_seed);
  FeatureDataset train = extract_features(p.splits.train, setup.features);
  FeatureDataset val = extract_features(p.splits.val, setup.features);
  FeatureDataset test = extract_features(p.splits.test, setup.features);
  train.split = "train";
  val.split = "val";
  test.split = "test";
  p.standardizer = setup.standardizer_on_full ? Standardizer::fit(extract_features(c, setup.features))
                                              : Standardizer::fit(train);
  p.train = standardize(p.standardizer, train);
  p.val = standardize(p.standardizer, val);
  p.test = standardize(p.standardizer, test);
  return p;
}

TrainedRun train_and_evaluate(const PreparedData& data, const ExperimentSetup& setup, std::uint64_t seed,
                              const FeatureDataset* train) {
  TrainedRun run;
  run.seed = seed;
  run.model = std::make_unique<TokenRegressor>(build_regressor(setup.encoder, seed));
  run.history = gazekit::train(*run.model, train ? *train : data.train, data.val, setup.train, seed);
  run.test = evaluate_run(*run.model, data.test, setup.eval);
  return run;
}

std::vector<std::vector<std::size_t>> nested_subsamples(std::size_t n, std::span<const double> fractions,
                                                        std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("ablation fractions must lie in (0, 1]");
    const auto k = static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9));
    if (k == 0) throw DataError("ablation fraction " + std::to_string(f) + " yields zero sentences");
    std::vector<std::size_t> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

std::string AblationCurve::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "fraction,n_sentences,mean,std,pretrained_mean,pretrained_std\n";
  for (const auto& p : points) {
    os << p.fraction << ',' << p.n_sentences << ',' << p.accuracy.mean << ',' << p.accuracy.std << ','
       << pretrained_reference.mean << ',' << pretrained_reference.std << '\n';
  }
  return os.str();
}

AblationCurve ablation_run(const PreparedData& data, std::span<const double> fractions,
                           const ExperimentSetup& setup) {
  std::vector<double> sorted(fractions.begin(), fractions.end());
  if (sorted.empty()) throw UsageError("ablation: no fractions given");
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i] > sorted[i - 1])) throw UsageError("ablation fractions must be strictly increasing");
  }
  AblationCurve curve;
  curve.subsets = nested_subsamples(data.train.sentences.size(), sorted, setup.split_seed + 1);

  for (std::size_t k = 0; k < sorted.size(); ++k) {
    FeatureDataset subset;
    subset.corpus = data.train.corpus;
    subset.split = "train";
    for (std::size_t i : curve.subsets[k]) subset.sentences.push_back(data.train.sentences[i]);
    AblationPoint point;
    point.fraction = sorted[k];
    point.n_sentences = subset.sentences.size();
    for (auto seed : setup.train.seeds) {
      point.run_accuracies.push_back(train_and_evaluate(data, setup, seed, &subset).test.overall_accuracy());
    }
    point.accuracy = aggregate(point.run_accuracies, setup.std_kind);
    curve.points.push_back(std::move(point));
  }

  ExperimentSetup frozen = setup;
  frozen.encoder.trainable = false;
  std::vector<double> ref;
  for (auto seed : setup.train.seeds) ref.push_back(train_and_evaluate(data, frozen, seed).test.overall_accuracy());
  curve.pretrained_reference = aggregate(ref, setup.std_kind);
  return curve;
}

AblationCurve ablation_run(const Corpus& c, std::span<const double> fractions, const ExperimentSetup& setup) {
  return ablation_run(prepare_data(c, setup), fractions, setup);
}

}  // namespace gazekit
