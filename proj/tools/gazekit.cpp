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

// gazekit command-line tool. Every command maps library errors onto exit
// codes: 0 success, 1 usage, 2 data validation, 3 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gazekit/analysis.hpp"
#include "gazekit/corpus.hpp"
#include "gazekit/error.hpp"
#include "gazekit/evaluation.hpp"
#include "gazekit/features.hpp"
#include "gazekit/manifest.hpp"
#include "gazekit/pipeline.hpp"
#include "gazekit/report.hpp"
#include "gazekit/synthetic.hpp"

namespace gk = gazekit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool json = false;
  bool avg_fixating_only = false;
  bool include_padding = false;
  std::string command;
};

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw gk::UsageError("--out is required for this command");
  return g.out;
}

// Setup keys of a config file; experiment-only keys are ignored here.
json config_json(const Globals& g) {
  if (g.config.empty()) return json::object();
  json j;
  try {
    j = json::parse(gk::read_text(g.config));
  } catch (const json::parse_error& e) {
    throw gk::UsageError(g.config + ": " + e.what());
  }
  if (!j.is_object()) throw gk::UsageError(g.config + ": expected a JSON object");
  for (auto key : {"name", "corpus", "format", "stages", "fractions", "analysis_feature", "tags"}) j.erase(key);
  return j;
}

gk::ExperimentSetup build_setup(const Globals& g, const std::string& encoder, bool no_finetune) {
  json j = config_json(g);
  if (!encoder.empty()) j["encoder"] = encoder;
  gk::ExperimentSetup s = gk::setup_from_json(j);
  if (no_finetune) s.encoder.trainable = false;
  if (g.avg_fixating_only) s.features.avg_fixating_only = true;
  if (g.include_padding) s.eval.padding = gk::PaddingMode::kInclude;
  if (g.seed) s.train.seeds = {*g.seed};
  return s;
}

void emit(const std::string& text, const Globals& g, const std::string& default_name = {}) {
  if (!g.out.empty() && !default_name.empty()) {
    const fs::path p = fs::path(g.out).extension().empty() ? fs::path(g.out) / default_name : fs::path(g.out);
    gk::write_text(p, text);
    std::cerr << "wrote " << p.string() << '\n';
  } else {
    std::cout << text;
  }
}

std::vector<gk::RunArtifacts> load_runs(const std::vector<std::string>& dirs) {
  std::vector<gk::RunArtifacts> runs;
  for (const auto& d : dirs) runs.push_back(gk::load_run(d));
  return runs;
}

gk::RunManifest manifest_for(const Globals& g, json config, std::vector<std::uint64_t> seeds) {
  gk::RunManifest m;
  m.command = g.command;
  m.config = std::move(config);
  m.seeds = std::move(seeds);
  m.started_at = gk::utc_now();
  return m;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Globals& g, const std::string& path, const std::string& format) {
  const gk::Corpus c = gk::parse_corpus_file(path, format);
  const auto report = gk::validate_corpus(c);
  if (g.json) {
    json j;
    j["corpus"] = c.name;
    j["violations"] = json::array();
    for (const auto& v : report.violations) {
      j["violations"].push_back({{"entity", v.entity}, {"rule", v.rule}, {"message", v.message}});
    }
    emit(j.dump(2) + "\n", g, "validation.json");
  } else {
    std::ostringstream os;
    for (const auto& v : report.violations) os << v.entity << '\t' << v.rule << '\t' << v.message << '\n';
    emit(os.str(), g, "validation.tsv");
  }
  if (!report.clean()) {
    std::cerr << "error: " << path << ": " << report.violations.size() << " violation(s)\n";
    return static_cast<int>(gk::ExitCode::kValidation);
  }
  if (!g.json) {
    std::cout << "ok: " << c.name << " (" << c.sentences.size() << " sentences, " << c.trials.size() << " trials, "
              << c.subject_ids.size() << " subjects)\n";
  }
  return 0;
}

int cmd_stats(const Globals& g, const std::string& path, const std::string& format) {
  const gk::Corpus c = gk::load_corpus(path, format);
  const auto s = gk::corpus_stats(c);
  if (g.json) {
    nlohmann::ordered_json j;
    j["corpus"] = c.name;
    j["language"] = c.language;
    j["n_subjects"] = s.n_subjects;
    j["n_sentences"] = s.n_sentences;
    j["n_tokens"] = s.n_tokens;
    j["n_types"] = s.n_types;
    j["sent_length"] = {{"mean", s.sent_length_mean}, {"min", s.sent_length_min}, {"max", s.sent_length_max}};
    j["word_length"] = {{"mean", s.word_length_mean}, {"min", s.word_length_min}, {"max", s.word_length_max}};
    emit(j.dump(2) + "\n", g, "stats.json");
    return 0;
  }
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "corpus       %s (%s)\nsubjects     %zu\nsentences    %zu\ntokens       %zu\ntypes        %zu\n"
                "sent length  %.2f (%d-%d)\nword length  %.2f (%d-%d)\n",
                c.name.c_str(), c.language.c_str(), s.n_subjects, s.n_sentences, s.n_tokens, s.n_types,
                s.sent_length_mean, s.sent_length_min, s.sent_length_max, s.word_length_mean, s.word_length_min,
                s.word_length_max);
  emit(buf, g, "stats.txt");
  return 0;
}

int cmd_extract(const Globals& g, const std::string& path, const std::string& format, bool standardize,
                const std::string& standardizer_out) {
  const gk::Corpus c = gk::load_corpus(path, format);
  gk::FeatureOptions opts;
  opts.avg_fixating_only = g.avg_fixating_only;
  gk::FeatureDataset d = gk::extract_features(c, opts);
  if (standardize) {
    const auto s = gk::Standardizer::fit(d);
    d = gk::standardize(s, d);
    if (!standardizer_out.empty()) gk::write_text(standardizer_out, s.to_json() + "\n");
  }
  std::ostringstream os;
  gk::write_features_tsv(d, os);
  emit(os.str(), g, "features.tsv");
  return 0;
}

int cmd_train(const Globals& g, const std::string& corpus, const std::string& encoder, bool no_finetune,
              std::optional<double> fraction) {
  gk::RunConfig rc;
  rc.corpus = corpus;
  rc.setup = build_setup(g, encoder, no_finetune);
  rc.seed = g.seed ? *g.seed : rc.setup.train.seeds.front();
  rc.train_fraction = fraction;
  const auto out = require_out(g);
  const auto run = gk::train_run(rc, out, g.command);
  const auto& h = run.history;
  if (g.json) {
    json j = {{"run", out.string()},
              {"seed", rc.seed},
              {"epochs", h.epochs.size()},
              {"best_epoch", h.best_epoch},
              {"best_val_accuracy", h.best_val_accuracy},
              {"stopped_early", h.stopped_early}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("trained %s seed %llu: %zu epoch(s), best epoch %d, val accuracy %.2f -> %s\n",
                gk::model_label(rc.setup.encoder).c_str(), static_cast<unsigned long long>(rc.seed),
                h.epochs.size(), h.best_epoch, h.best_val_accuracy, out.string().c_str());
  }
  return 0;
}

int cmd_evaluate(const Globals& g, const std::vector<std::string>& dirs, bool baselines) {
  auto runs = load_runs(dirs);
  const auto& first = runs.front();
  // Runs trained with different --seed values differ only in their seed list.
  auto comparable = [](gk::ExperimentSetup s) {
    s.train.seeds.clear();
    return gk::setup_to_json(s);
  };
  std::vector<const gk::TokenRegressor*> models;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : runs) {
    if (r.config.corpus != first.config.corpus || comparable(r.config.setup) != comparable(first.config.setup)) {
      throw gk::UsageError("evaluate: runs differ in corpus or setup; evaluate them separately");
    }
    models.push_back(r.model.get());
    seeds.push_back(r.config.seed);
  }
  gk::ExperimentSetup setup = first.config.setup;
  setup.train.seeds = seeds;
  if (g.include_padding) setup.eval.padding = gk::PaddingMode::kInclude;
  const auto bundle = gk::evaluate_models(first.data, models, seeds, setup, first.dataset, baselines);
  if (!g.out.empty()) {
    auto m = manifest_for(g, {{"runs", dirs}, {"baselines", baselines}, {"setup", gk::setup_to_json(setup)}}, seeds);
    m.add_input(first.config.corpus);
    m.outputs = gk::write_evaluation(bundle, g.out);
    m.finished_at = gk::utc_now();
    m.write(g.out);
  }
  if (g.json) {
    std::cout << bundle.model.to_json() << '\n';
    return 0;
  }
  std::vector<gk::EvaluationReport> all{bundle.model};
  if (bundle.baseline) all.push_back(*bundle.baseline);
  if (bundle.pretrained) all.push_back(*bundle.pretrained);
  std::cout << gk::summarize(all).to_text();
  return 0;
}

int cmd_cross_eval(const Globals& g, const std::vector<std::string>& dirs) {
  auto runs = load_runs(dirs);
  std::map<std::string, std::vector<const gk::Predictor*>> models;
  std::map<std::string, gk::FeatureDataset> tests;
  for (const auto& r : runs) {
    models[r.dataset].push_back(r.model.get());
    tests.emplace(r.dataset, r.data.test);
  }
  gk::EvalOptions opts = runs.front().config.setup.eval;
  if (g.include_padding) opts.padding = gk::PaddingMode::kInclude;
  const auto matrix = gk::cross_matrix(models, tests, opts);
  if (!g.out.empty()) {
    auto m = manifest_for(g, {{"runs", dirs}}, {});
    for (const auto& r : runs) {
      m.seeds.push_back(r.config.seed);
      m.add_input(r.config.corpus);
    }
    gk::write_text(fs::path(g.out) / "cross.csv", matrix.to_csv());
    m.outputs = {"cross.csv"};
    m.finished_at = gk::utc_now();
    m.write(g.out);
  }
  std::cout << matrix.to_csv();
  return 0;
}

int cmd_ablate(const Globals& g, const std::string& corpus, const std::string& format, const std::string& encoder,
               const std::vector<double>& fractions) {
  const auto setup = build_setup(g, encoder, false);
  const gk::Corpus c = gk::load_corpus(corpus, format);
  const auto curve = gk::ablation_run(c, fractions, setup);
  if (!g.out.empty()) {
    auto m = manifest_for(g, {{"corpus", fs::absolute(corpus).string()}, {"fractions", fractions},
                              {"setup", gk::setup_to_json(setup)}},
                          setup.train.seeds);
    m.add_input(corpus);
    gk::write_text(fs::path(g.out) / "ablation.csv", curve.to_csv());
    m.outputs = {"ablation.csv"};
    m.finished_at = gk::utc_now();
    m.write(g.out);
  }
  std::cout << curve.to_csv();
  return 0;
}

int cmd_analyze(const Globals& g, const std::string& kind, const std::string& feature, const std::string& run_dir,
                const std::string& corpus, const std::string& format, const std::string& tags_path,
                bool with_pretrained) {
  if (!gk::parse_feature(feature)) throw gk::UsageError("unknown feature '" + feature + "'");
  std::optional<gk::RunArtifacts> run;
  gk::FeatureDataset data;
  std::optional<std::vector<gk::SentencePrediction>> predicted;
  std::optional<std::vector<gk::SentencePrediction>> pretrained;
  if (!run_dir.empty()) {
    run = gk::load_run(run_dir);
    data = run->data.test;
    predicted = run->model->predict(data);
    if (with_pretrained) {
      pretrained = gk::frozen_regressor(run->data, run->config.setup, run->config.seed).predict(data);
    }
  } else if (!corpus.empty()) {
    gk::FeatureOptions opts;
    opts.avg_fixating_only = g.avg_fixating_only;
    const auto raw = gk::extract_features(gk::load_corpus(corpus, format), opts);
    data = gk::standardize(gk::Standardizer::fit(raw), raw);
  } else {
    throw gk::UsageError("analyze needs --run or --corpus");
  }
  auto pred_ptr = predicted ? &*predicted : nullptr;

  std::string csv;
  if (kind == "wordlen") {
    csv = gk::curves_to_csv(gk::word_length_curve(data, feature, pred_ptr, pretrained ? &*pretrained : nullptr));
  } else if (kind == "readability") {
    if (!pred_ptr) throw gk::UsageError("readability analysis needs --run for predictions");
    std::vector<gk::BinnedCurve> curves{gk::readability_accuracy_curve(data, *pred_ptr, feature)};
    if (pretrained) curves.push_back(gk::readability_accuracy_curve(data, *pretrained, feature, {}, 10, "pretrained"));
    csv = gk::curves_to_csv(curves);
  } else if (kind == "pos") {
    if (tags_path.empty()) throw gk::UsageError("pos analysis needs --tags");
    std::ifstream in(tags_path);
    if (!in) throw gk::UsageError("cannot open " + tags_path);
    std::ostringstream os;
    os.precision(17);
    os << "tag,mean_mfd,count,accuracy\n";
    for (const auto& p : gk::pos_aggregation(data, gk::read_tags_tsv(in), pred_ptr)) {
      os << p.tag << ',' << p.mean_mfd << ',' << p.count << ',';
      if (p.accuracy) os << *p.accuracy;
      os << '\n';
    }
    csv = os.str();
  } else {
    throw gk::UsageError("unknown analysis kind '" + kind + "'");
  }
  emit(csv, g, kind + ".csv");
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& dirs) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const auto reports = gk::load_reports(paths);
  const auto table = gk::summarize(reports);
  if (!g.out.empty()) {
    auto m = manifest_for(g, {{"runs", dirs}}, {});
    m.outputs = gk::write_report(reports, g.out);
    m.finished_at = gk::utc_now();
    m.write(g.out);
  }
  std::cout << (g.json ? table.to_csv() : table.to_text());
  return 0;
}

int cmd_run(const Globals& g) {
  if (g.config.empty()) throw gk::UsageError("run needs --config <experiment.json>");
  auto cfg = gk::ExperimentConfig::load(g.config);
  if (g.seed) cfg.setup.train.seeds = {*g.seed};
  if (g.avg_fixating_only) cfg.setup.features.avg_fixating_only = true;
  if (g.include_padding) cfg.setup.eval.padding = gk::PaddingMode::kInclude;
  const auto out = require_out(g);
  gk::run_pipeline(cfg, out, g.command);
  std::cout << "pipeline " << cfg.name << " finished -> " << out.string() << '\n';
  if (fs::exists(out / "summary.txt")) std::cout << gk::read_text(out / "summary.txt");
  return 0;
}

int cmd_synth(const Globals& g, gk::SyntheticConfig cfg, bool shifted, bool worked_example) {
  if (g.seed) cfg.seed = *g.seed;
  const gk::Corpus c = worked_example ? gk::make_worked_example_corpus()
                               : gk::make_synthetic_corpus(shifted ? gk::shifted_domain(cfg) : cfg);
  std::ostringstream os;
  gk::write_unified(c, os);
  emit(os.str(), g, c.name + ".jsonl");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazekit: eye-tracking features, token regression and evaluation"};
  app.set_version_flag("--version", gk::toolkit_version());
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  for (int i = 0; i < argc; ++i) g.command += (i ? " " : "") + std::string(argv[i]);
  app.add_option("--seed", g.seed, "Random seed (restricts seed lists to this one seed)");
  app.add_option("--config", g.config, "JSON config (setup overrides, or an experiment file for run)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("--avg-fixating-only", g.avg_fixating_only, "Average durations over fixating subjects only");
  app.add_flag("--include-padding", g.include_padding, "Count padded cells in the MAE denominator");

  std::string path, format = "unified-jsonl", encoder, kind = "wordlen", feature = "fProp", run_dir, corpus, tags,
                    standardizer_out;
  std::vector<std::string> dirs;
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.5, 1.0};
  std::optional<double> train_fraction;
  bool no_finetune = false, standardize = false, baselines = false, with_pretrained = false, shifted = false,
       worked_example = false;
  gk::SyntheticConfig synth;

  auto* validate = app.add_subcommand("validate", "Check a corpus against the interchange invariants");
  validate->add_option("path", path, "Corpus file")->required();
  validate->add_option("--format", format, "Adapter tag");

  auto* stats = app.add_subcommand("stats", "Descriptive corpus statistics");
  stats->add_option("path", path, "Corpus file")->required();
  stats->add_option("--format", format, "Adapter tag");

  auto* extract = app.add_subcommand("extract", "Export the eight token features as TSV");
  extract->add_option("path", path, "Corpus file")->required();
  extract->add_option("--format", format, "Adapter tag");
  extract->add_flag("--standardize", standardize, "Min-max scale to 0-100 (fitted on this corpus)");
  extract->add_option("--standardizer-out", standardizer_out, "Where to save the fitted scaler");

  auto* train = app.add_subcommand("train", "Fine-tune one seed into a run directory");
  train->add_option("--corpus", corpus, "Corpus file")->required();
  train->add_option("--encoder", encoder, "Encoder short name or checkpoint id");
  train->add_flag("--no-finetune", no_finetune, "Keep the encoder and head frozen");
  train->add_option("--train-fraction", train_fraction, "Use a seeded subset of the train split")
      ->check(CLI::Range(0.0, 1.0));

  auto* evaluate = app.add_subcommand("evaluate", "Aggregate test accuracy over seed runs");
  evaluate->add_option("runs", dirs, "Run directories of one corpus")->required();
  evaluate->add_flag("--baselines", baselines, "Also evaluate the mean baseline and the frozen encoder");

  auto* cross = app.add_subcommand("cross-eval", "Transfer matrix over runs trained on different corpora");
  cross->add_option("runs", dirs, "Run directories")->required();

  auto* ablate = app.add_subcommand("ablate", "Accuracy as a function of training data fraction");
  ablate->add_option("--corpus", corpus, "Corpus file")->required();
  ablate->add_option("--format", format, "Adapter tag");
  ablate->add_option("--encoder", encoder, "Encoder short name or checkpoint id");
  ablate->add_option("--fractions", fractions, "Increasing fractions in (0, 1]")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "Word-length, readability and POS analyses");
  analyze->add_option("--kind", kind, "wordlen, readability or pos")
      ->check(CLI::IsMember({"wordlen", "readability", "pos"}));
  analyze->add_option("--feature", feature, "Feature name");
  analyze->add_option("--run", run_dir, "Run directory (analyses its test split with predictions)");
  analyze->add_option("--corpus", corpus, "Corpus file (gold values only)");
  analyze->add_option("--format", format, "Adapter tag");
  analyze->add_option("--tags", tags, "POS tags TSV: sentence_id, token_index, tag");
  analyze->add_flag("--pretrained", with_pretrained, "Add the frozen-encoder series");

  auto* report = app.add_subcommand("report", "Summary tables over evaluated runs");
  report->add_option("runs", dirs, "Directories holding report JSON files")->required();

  auto* run = app.add_subcommand("run", "Run an experiment config end to end");

  auto* synthcmd = app.add_subcommand("synth", "Write a synthetic corpus in unified-jsonl");
  synthcmd->add_option("--sentences", synth.n_sentences, "Number of sentences");
  synthcmd->add_option("--subjects", synth.n_subjects, "Number of readers");
  synthcmd->add_option("--name", synth.name, "Corpus name");
  synthcmd->add_flag("--shifted", shifted, "Use the shifted reading domain");
  synthcmd->add_flag("--worked-example", worked_example, "The one-sentence single-reader example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(gk::ExitCode::kUsage);
  }

  try {
    if (*validate) return cmd_validate(g, path, format);
    if (*stats) return cmd_stats(g, path, format);
    if (*extract) return cmd_extract(g, path, format, standardize, standardizer_out);
    if (*train) return cmd_train(g, corpus, encoder, no_finetune, train_fraction);
    if (*evaluate) return cmd_evaluate(g, dirs, baselines);
    if (*cross) return cmd_cross_eval(g, dirs);
    if (*ablate) return cmd_ablate(g, corpus, format, encoder, fractions);
    if (*analyze) return cmd_analyze(g, kind, feature, run_dir, corpus, format, tags, with_pretrained);
    if (*report) return cmd_report(g, dirs);
    if (*run) return cmd_run(g);
    if (*synthcmd) return cmd_synth(g, synth, shifted, worked_example);
  } catch (const gk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(gk::ExitCode::kRuntime);
  }
  return static_cast<int>(gk::ExitCode::kUsage);
}
