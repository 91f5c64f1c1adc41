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

#include "gazekit/pipeline.hpp"

#include <algorithm>
#include <initializer_list>
#include <sstream>

#include "gazekit/analysis.hpp"
#include "gazekit/error.hpp"
#include "gazekit/report.hpp"

namespace gazekit {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw UsageError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
bool take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return false;
  out = j.at(key).get<T>();
  return true;
}

ojson encoder_to_json(const EncoderSpec& e) {
  return {{"checkpoint_id", e.checkpoint_id}, {"hidden_size", e.hidden_size}, {"backend", e.backend},
          {"trainable", e.trainable},         {"layers", e.layers},           {"heads", e.heads},
          {"ffn_size", e.ffn_size},           {"vocab_size", e.vocab_size},   {"max_positions", e.max_positions}};
}

EncoderSpec encoder_from_json(const json& j) {
  if (j.is_string()) return resolve_encoder(j.get<std::string>());
  check_keys(j,
             {"checkpoint_id", "hidden_size", "backend", "trainable", "layers", "heads", "ffn_size", "vocab_size",
              "max_positions"},
             "encoder");
  EncoderSpec e;
  if (j.contains("checkpoint_id")) {
    const auto id = j.at("checkpoint_id").get<std::string>();
    if (auto known = known_encoder(id)) {
      e = *known;
    } else {
      e.checkpoint_id = id;
    }
  }
  take(j, "hidden_size", e.hidden_size);
  take(j, "backend", e.backend);
  take(j, "trainable", e.trainable);
  take(j, "layers", e.layers);
  take(j, "heads", e.heads);
  take(j, "ffn_size", e.ffn_size);
  take(j, "vocab_size", e.vocab_size);
  take(j, "max_positions", e.max_positions);
  return e;
}

FeatureDataset subset_of(const FeatureDataset& d, const std::vector<std::size_t>& idx) {
  FeatureDataset out;
  out.corpus = d.corpus;
  out.split = d.split;
  for (std::size_t i : idx) out.sentences.push_back(d.sentences[i]);
  return out;
}

RunArtifacts train_prepared(const RunConfig& cfg, PreparedData data, std::string dataset,
                            const std::filesystem::path& out, RunManifest manifest) {
  if (cfg.train_fraction && !(*cfg.train_fraction > 0.0 && *cfg.train_fraction <= 1.0)) {
    throw UsageError("train fraction must lie in (0, 1]");
  }
  RunArtifacts a;
  a.config = cfg;
  a.dataset = std::move(dataset);
  a.data = std::move(data);
  const FeatureDataset train = cfg.train_fraction
                                   ? training_subset(a.data, *cfg.train_fraction, cfg.setup.split_seed)
                                   : a.data.train;
  a.model = std::make_unique<TokenRegressor>(build_regressor(cfg.setup.encoder, cfg.seed));
  a.history = gazekit::train(*a.model, train, a.data.val, cfg.setup.train, cfg.seed);

  write_text(out / "config.json", manifest.config.dump(2) + "\n");
  write_text(out / "standardizer.json", a.data.standardizer.to_json() + "\n");
  write_text(out / "history.csv", a.history.to_csv());
  a.model->save(out / "model.bin");
  manifest.outputs = {"config.json", "standardizer.json", "history.csv", "model.bin"};
  manifest.finished_at = utc_now();
  manifest.write(out);
  return a;
}

RunManifest start_manifest(const std::string& command, ojson config, std::vector<std::uint64_t> seeds) {
  RunManifest m;
  m.command = command;
  m.config = std::move(config);
  m.seeds = std::move(seeds);
  m.started_at = utc_now();
  return m;
}

Corpus load_checked(const std::filesystem::path& path, const std::string& format) { return load_corpus(path, format); }

std::string curve_rows(const std::vector<PosGroup>& groups) {
  std::ostringstream os;
  os.precision(17);
  os << "tag,mean_mfd,count,accuracy\n";
  for (const auto& g : groups) {
    os << g.tag << ',' << g.mean_mfd << ',' << g.count << ',';
    if (g.accuracy) os << *g.accuracy;
    os << '\n';
  }
  return os.str();
}

}  // namespace

EncoderSpec resolve_encoder(const std::string& id) {
  if (auto spec = known_encoder(id)) return *spec;
  std::string names;
  for (const auto& n : known_encoder_names()) names += (names.empty() ? "" : ", ") + n;
  throw UsageError("unknown encoder '" + id + "' (known: " + names + ")");
}

std::string model_label(const EncoderSpec& spec) {
  return spec.trainable ? spec.checkpoint_id : spec.checkpoint_id + "-frozen";
}

ojson setup_to_json(const ExperimentSetup& s) {
  ojson j;
  j["encoder"] = encoder_to_json(s.encoder);
  const auto& t = s.train;
  j["train"] = {{"learning_rate", t.learning_rate}, {"weight_decay", t.weight_decay}, {"max_epochs", t.max_epochs},
                {"patience", t.patience},           {"grad_clip", t.grad_clip},       {"batch_size", t.batch_size},
                {"seeds", t.seeds},                 {"adam_beta1", t.adam_beta1},     {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps}};
  j["split"] = {{"seed", s.split_seed}, {"train", s.ratios.train}, {"val", s.ratios.val}, {"test", s.ratios.test}};
  j["features"] = {{"avg_fixating_only", s.features.avg_fixating_only}};
  j["standardizer_on_full"] = s.standardizer_on_full;
  j["eval"] = {{"batch_size", s.eval.batch_size}, {"include_padding", s.eval.padding == PaddingMode::kInclude}};
  j["std"] = s.std_kind == StdKind::kPopulation ? "population" : "sample";
  return j;
}

ExperimentSetup setup_from_json(const json& j, ExperimentSetup s) {
  try {
    check_keys(j, {"encoder", "train", "split", "features", "standardizer_on_full", "eval", "std"}, "config");
    bool train_batch = false;
    bool eval_batch = false;
    if (j.contains("encoder")) s.encoder = encoder_from_json(j.at("encoder"));
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t,
                 {"learning_rate", "weight_decay", "max_epochs", "patience", "grad_clip", "batch_size", "seeds",
                  "adam_beta1", "adam_beta2", "adam_eps"},
                 "config.train");
      take(t, "learning_rate", s.train.learning_rate);
      take(t, "weight_decay", s.train.weight_decay);
      take(t, "max_epochs", s.train.max_epochs);
      take(t, "patience", s.train.patience);
      take(t, "grad_clip", s.train.grad_clip);
      train_batch = take(t, "batch_size", s.train.batch_size);
      take(t, "seeds", s.train.seeds);
      take(t, "adam_beta1", s.train.adam_beta1);
      take(t, "adam_beta2", s.train.adam_beta2);
      take(t, "adam_eps", s.train.adam_eps);
    }
    if (j.contains("split")) {
      const auto& sp = j.at("split");
      check_keys(sp, {"seed", "train", "val", "test"}, "config.split");
      take(sp, "seed", s.split_seed);
      take(sp, "train", s.ratios.train);
      take(sp, "val", s.ratios.val);
      take(sp, "test", s.ratios.test);
    }
    if (j.contains("features")) {
      check_keys(j.at("features"), {"avg_fixating_only"}, "config.features");
      take(j.at("features"), "avg_fixating_only", s.features.avg_fixating_only);
    }
    take(j, "standardizer_on_full", s.standardizer_on_full);
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, {"batch_size", "include_padding"}, "config.eval");
      eval_batch = take(e, "batch_size", s.eval.batch_size);
      bool pad = s.eval.padding == PaddingMode::kInclude;
      take(e, "include_padding", pad);
      s.eval.padding = pad ? PaddingMode::kInclude : PaddingMode::kExclude;
    }
    if (j.contains("std")) {
      const auto kind = j.at("std").get<std::string>();
      if (kind != "population" && kind != "sample") throw UsageError("config.std must be population or sample");
      s.std_kind = kind == "population" ? StdKind::kPopulation : StdKind::kSample;
    }
    if (j.contains("encoder")) {
      if (!train_batch) s.train.batch_size = default_batch_size(s.encoder);
      if (!eval_batch) s.eval.batch_size = s.train.batch_size;
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  s.train.validate();
  if (s.eval.batch_size < 1) throw UsageError("config.eval.batch_size must be positive");
  return s;
}

ojson run_config_to_json(const RunConfig& c) {
  ojson j;
  j["corpus"] = c.corpus.string();
  j["format"] = c.format;
  j["seed"] = c.seed;
  j["train_fraction"] = c.train_fraction ? json(*c.train_fraction) : json(nullptr);
  j["setup"] = setup_to_json(c.setup);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j, {"corpus", "format", "seed", "train_fraction", "setup"}, "run config");
    c.corpus = j.at("corpus").get<std::string>();
    take(j, "format", c.format);
    take(j, "seed", c.seed);
    if (j.contains("train_fraction") && !j.at("train_fraction").is_null()) {
      c.train_fraction = j.at("train_fraction").get<double>();
    }
    if (j.contains("setup")) {
      // Explicit batch sizes are kept as recorded.
      json setup = j.at("setup");
      ExperimentSetup s = setup_from_json(setup);
      if (setup.contains("train") && setup["train"].contains("batch_size")) {
        s.train.batch_size = setup["train"]["batch_size"].get<int>();
      }
      if (setup.contains("eval") && setup["eval"].contains("batch_size")) {
        s.eval.batch_size = setup["eval"]["batch_size"].get<int>();
      }
      c.setup = s;
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("run config: ") + e.what());
  }
  return c;
}

FeatureDataset training_subset(const PreparedData& data, double fraction, std::uint64_t split_seed) {
  const double f[] = {fraction};
  return subset_of(data.train, nested_subsamples(data.train.sentences.size(), f, split_seed + 1).front());
}

RunArtifacts train_run(const RunConfig& cfg, const std::filesystem::path& out, const std::string& command) {
  RunConfig c = cfg;
  c.corpus = std::filesystem::absolute(cfg.corpus);
  RunManifest m = start_manifest(command, run_config_to_json(c), {c.seed});
  const Corpus corpus = load_checked(c.corpus, c.format);
  m.add_input(c.corpus);
  return train_prepared(c, prepare_data(corpus, c.setup), corpus.name, out, std::move(m));
}

RunArtifacts load_run(const std::filesystem::path& dir) {
  const auto manifest = RunManifest::read(dir);
  RunArtifacts a;
  try {
    a.config = run_config_from_json(json::parse(read_text(dir / "config.json")));
  } catch (const json::parse_error& e) {
    throw DataError((dir / "config.json").string() + ": " + e.what());
  }
  const auto key = a.config.corpus.string();
  const auto it = manifest.input_hashes.find(key);
  if (it != manifest.input_hashes.end() && it->second != hash_file(a.config.corpus)) {
    throw DataError(dir.string() + ": corpus " + key + " changed since the run was trained");
  }
  const Corpus corpus = load_checked(a.config.corpus, a.config.format);
  a.dataset = corpus.name;
  a.data = prepare_data(corpus, a.config.setup);
  a.model = std::make_unique<TokenRegressor>(build_regressor(a.config.setup.encoder, a.config.seed));
  a.model->load(dir / "model.bin");
  return a;
}

TokenRegressor frozen_regressor(const PreparedData& data, const ExperimentSetup& setup, std::uint64_t seed) {
  ExperimentSetup frozen = setup;
  frozen.encoder.trainable = false;
  TokenRegressor model = build_regressor(frozen.encoder, seed);
  gazekit::train(model, data.train, data.val, frozen.train, seed);
  return model;
}

EvaluationBundle evaluate_models(const PreparedData& data, std::span<const TokenRegressor* const> models,
                                 std::span<const std::uint64_t> seeds, const ExperimentSetup& setup,
                                 const std::string& dataset, bool with_baselines) {
  if (models.empty() || models.size() != seeds.size()) throw UsageError("evaluate: one seed per model is required");
  EvaluationBundle b;
  b.seeds.assign(seeds.begin(), seeds.end());
  std::vector<const Predictor*> ptrs(models.begin(), models.end());
  b.model = evaluate(ptrs, data.test, setup.eval, setup.std_kind);
  b.model.model = model_label(models.front()->spec());
  b.model.dataset = dataset;
  if (with_baselines) {
    const MeanBaseline base = mean_baseline(data.train);
    b.baseline = make_report(base.name(), dataset, {evaluate_run(base, data.test, setup.eval)}, setup.std_kind);
    std::vector<RunMetrics> frozen_runs;
    for (auto seed : seeds) frozen_runs.push_back(evaluate_run(frozen_regressor(data, setup, seed), data.test, setup.eval));
    EncoderSpec frozen = models.front()->spec();
    frozen.trainable = false;
    b.pretrained = make_report(model_label(frozen), dataset, std::move(frozen_runs), setup.std_kind);
  }
  return b;
}

std::string metrics_csv(const EvaluationBundle& b) {
  std::ostringstream os;
  os.precision(17);
  os << "seed,overall_mae,overall_accuracy";
  for (auto name : kFeatureNames) os << ',' << name << "_mae";
  os << '\n';
  for (std::size_t i = 0; i < b.model.runs.size(); ++i) {
    const auto& r = b.model.runs[i];
    os << b.seeds.at(i) << ',' << r.overall_mae << ',' << r.overall_accuracy();
    for (int f = 0; f < kNumFeatures; ++f) os << ',' << r.per_feature_mae(f);
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> write_evaluation(const EvaluationBundle& b, const std::filesystem::path& out) {
  std::vector<std::string> written = {"report.json", "metrics.csv", "per_feature.csv"};
  write_text(out / "report.json", b.model.to_json() + "\n");
  write_text(out / "metrics.csv", metrics_csv(b));
  write_text(out / "per_feature.csv", per_feature_csv(b.model));
  if (b.baseline) {
    write_text(out / "baseline.json", b.baseline->to_json() + "\n");
    written.push_back("baseline.json");
  }
  if (b.pretrained) {
    write_text(out / "pretrained.json", b.pretrained->to_json() + "\n");
    written.push_back("pretrained.json");
  }
  return written;
}

ojson ExperimentConfig::to_json() const {
  ojson j;
  j["name"] = name;
  j["corpus"] = corpus.string();
  j["format"] = format;
  j["stages"] = stages;
  j["fractions"] = fractions;
  j["analysis_feature"] = analysis_feature;
  j["tags"] = tags ? json(tags->string()) : json(nullptr);
  const ojson s = setup_to_json(setup);
  for (auto it = s.begin(); it != s.end(); ++it) j[it.key()] = it.value();
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  if (!j.is_object()) throw UsageError("experiment config: expected a JSON object");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  json setup = json::object();
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "name") {
        c.name = v.get<std::string>();
      } else if (k == "corpus") {
        c.corpus = resolve(v.get<std::string>());
      } else if (k == "format") {
        c.format = v.get<std::string>();
      } else if (k == "stages") {
        c.stages = v.get<std::vector<std::string>>();
      } else if (k == "fractions") {
        c.fractions = v.get<std::vector<double>>();
      } else if (k == "analysis_feature") {
        c.analysis_feature = v.get<std::string>();
      } else if (k == "tags") {
        if (!v.is_null()) c.tags = resolve(v.get<std::string>());
      } else {
        setup[k] = v;
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  }
  if (c.corpus.empty()) throw UsageError("experiment config: 'corpus' is required");
  if (c.stages.empty()) throw UsageError("experiment config: 'stages' must list at least one stage");
  for (const auto& s : c.stages) {
    if (std::find(kStages.begin(), kStages.end(), s) == kStages.end()) {
      throw UsageError("experiment config: unknown stage '" + s + "'");
    }
    if (std::count(c.stages.begin(), c.stages.end(), s) > 1) {
      throw UsageError("experiment config: stage '" + s + "' listed twice");
    }
  }
  if (!parse_feature(c.analysis_feature)) {
    throw UsageError("experiment config: unknown analysis_feature '" + c.analysis_feature + "'");
  }
  c.setup = setup_from_json(setup);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out, const std::string& command) {
  auto requested = [&](std::string_view s) {
    return std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end();
  };
  RunManifest m = start_manifest(command, cfg.to_json(), cfg.setup.train.seeds);
  write_text(out / "config.json", m.config.dump(2) + "\n");
  m.outputs.push_back("config.json");

  std::optional<Corpus> corpus;
  std::optional<PreparedData> data;
  std::vector<std::unique_ptr<TokenRegressor>> models;

  auto need_corpus = [&]() -> const Corpus& {
    if (!corpus) {
      corpus = parse_corpus_file(cfg.corpus, cfg.format);
      m.add_input(cfg.corpus);
    }
    return *corpus;
  };
  auto need_data = [&]() -> const PreparedData& {
    if (!data) {
      const auto report = validate_corpus(need_corpus());
      if (!report.clean()) {
        const auto& v = report.violations.front();
        throw DataError(cfg.corpus.string() + ": " + v.entity + ": " + v.rule + ": " + v.message);
      }
      data = prepare_data(*corpus, cfg.setup);
    }
    return *data;
  };
  auto seed_dir = [&](std::uint64_t seed) { return out / "runs" / ("seed-" + std::to_string(seed)); };
  auto need_models = [&]() -> const std::vector<std::unique_ptr<TokenRegressor>>& {
    if (models.empty()) {
      for (auto seed : cfg.setup.train.seeds) {
        const auto path = seed_dir(seed) / "model.bin";
        if (!std::filesystem::exists(path)) throw UsageError("no trained model at " + path.string() + "; add the train stage");
        auto model = std::make_unique<TokenRegressor>(build_regressor(cfg.setup.encoder, seed));
        model->load(path);
        models.push_back(std::move(model));
      }
    }
    return models;
  };

  auto fail = [&](std::string_view stage, const std::exception& e) {
    m.status = "failed: stage " + std::string(stage) + ": " + e.what();
    m.finished_at = utc_now();
    m.write(out);
    return "stage '" + std::string(stage) + "': " + e.what();
  };

  for (auto stage : kStages) {
    if (!requested(stage)) continue;
    try {
      if (stage == "validate") {
        const auto report = validate_corpus(need_corpus());
        ojson j;
        j["corpus"] = corpus->name;
        j["violations"] = json::array();
        for (const auto& v : report.violations) {
          j["violations"].push_back({{"entity", v.entity}, {"rule", v.rule}, {"message", v.message}});
        }
        write_text(out / "validation.json", j.dump(2) + "\n");
        m.outputs.push_back("validation.json");
        if (!report.clean()) {
          throw DataError(std::to_string(report.violations.size()) + " violation(s), first: " +
                          report.violations.front().entity + ": " + report.violations.front().message);
        }
      } else if (stage == "extract") {
        const auto& d = need_data();
        write_text(out / "standardizer.json", d.standardizer.to_json() + "\n");
        m.outputs.push_back("standardizer.json");
        for (const auto* split : {&d.train, &d.val, &d.test}) {
          std::ostringstream os;
          write_features_tsv(*split, os);
          const std::string rel = "features/" + split->split + ".tsv";
          write_text(out / rel, os.str());
          m.outputs.push_back(rel);
        }
      } else if (stage == "train") {
        models.clear();
        for (auto seed : cfg.setup.train.seeds) {
          RunConfig rc;
          rc.corpus = std::filesystem::absolute(cfg.corpus);
          rc.format = cfg.format;
          rc.setup = cfg.setup;
          rc.seed = seed;
          RunManifest rm = start_manifest(command + " [train seed " + std::to_string(seed) + "]",
                                          run_config_to_json(rc), {seed});
          rm.add_input(rc.corpus);
          auto run = train_prepared(rc, need_data(), corpus->name, seed_dir(seed), std::move(rm));
          models.push_back(std::move(run.model));
          m.outputs.push_back("runs/seed-" + std::to_string(seed));
        }
      } else if (stage == "evaluate") {
        std::vector<const TokenRegressor*> ptrs;
        for (const auto& p : need_models()) ptrs.push_back(p.get());
        const auto bundle = evaluate_models(need_data(), ptrs, cfg.setup.train.seeds, cfg.setup, corpus->name, true);
        const auto written = write_evaluation(bundle, out);
        m.outputs.insert(m.outputs.end(), written.begin(), written.end());
      } else if (stage == "ablate") {
        const auto curve = ablation_run(need_data(), cfg.fractions, cfg.setup);
        write_text(out / "ablation.csv", curve.to_csv());
        m.outputs.push_back("ablation.csv");
      } else if (stage == "analyze") {
        const auto& d = need_data();
        const auto& model = *need_models().front();
        const auto predicted = model.predict(d.test);
        const auto pretrained = frozen_regressor(d, cfg.setup, cfg.setup.train.seeds.front()).predict(d.test);
        write_text(out / "wordlen.csv",
                   curves_to_csv(word_length_curve(d.test, cfg.analysis_feature, &predicted, &pretrained)));
        write_text(out / "readability.csv", curves_to_csv({readability_accuracy_curve(d.test, predicted, "nFix")}));
        m.outputs.push_back("wordlen.csv");
        m.outputs.push_back("readability.csv");
        if (cfg.tags) {
          std::istringstream in(read_text(*cfg.tags));
          m.add_input(*cfg.tags);
          write_text(out / "pos.csv", curve_rows(pos_aggregation(d.test, read_tags_tsv(in), &predicted)));
          m.outputs.push_back("pos.csv");
        }
      } else if (stage == "report") {
        const auto written = write_report(load_reports({out}), out);
        m.outputs.insert(m.outputs.end(), written.begin(), written.end());
      }
    } catch (const UsageError& e) {
      throw UsageError(fail(stage, e));
    } catch (const DataError& e) {
      throw DataError(fail(stage, e));
    } catch (const std::exception& e) {
      throw RuntimeFailure(fail(stage, e));
    }
  }
  m.finished_at = utc_now();
  m.write(out);
}

}  // namespace gazekit
