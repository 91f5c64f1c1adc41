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

#include "gazekit/features.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include <json.hpp>

#include "gazekit/error.hpp"

namespace gazekit {

std::optional<Feature> parse_feature(std::string_view name) {
  for (int i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[static_cast<std::size_t>(i)] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

FeatureVector TokenFeatures::to_row() const {
  FeatureVector r;
  r << nFix, FFD, FPD, TRT, MFD, fProp, nRefix, reProp;
  return r;
}

TokenFeatures TokenFeatures::from_row(const FeatureVector& r) {
  return {r(0), r(1), r(2), r(3), r(4), r(5), r(6), r(7)};
}

std::vector<SubjectTokenMeasures> subject_measures(const SubjectTrial& trial, const Sentence& sentence) {
  std::vector<SubjectTokenMeasures> out(sentence.tokens.size());
  const auto& fx = trial.fixations;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    auto& m = out.at(static_cast<std::size_t>(fx[k].token_index));
    const double d = fx[k].duration_ms;
    if (m.nFix == 0) {
      m.FFD = d;
      // First pass: the run of consecutive fixations starting here.
      for (std::size_t j = k; j < fx.size() && fx[j].token_index == fx[k].token_index; ++j) {
        m.FPD += fx[j].duration_ms;
      }
    }
    ++m.nFix;
    m.TRT += d;
  }
  for (auto& m : out) {
    if (m.nFix > 0) {
      m.MFD = m.TRT / m.nFix;
      m.nRefix = m.nFix - 1;
      m.fixated = true;
      m.refixated = m.nFix >= 2;
    }
  }
  return out;
}

TokenFeatures aggregate_token_features(std::span<const SubjectTokenMeasures> measures, std::size_t n_subjects,
                                       const FeatureOptions& opts) {
  if (n_subjects == 0) throw DataError("aggregate_token_features: zero subjects");
  if (measures.size() > n_subjects) {
    throw DataError("aggregate_token_features: more measures than subjects");
  }
  TokenFeatures tf;
  long n_fix = 0, n_refix = 0, n_fixated = 0, n_refixated = 0;
  for (const auto& m : measures) {
    n_fix += m.nFix;
    n_refix += m.nRefix;
    n_fixated += m.fixated ? 1 : 0;
    n_refixated += m.refixated ? 1 : 0;
    tf.FFD += m.FFD;
    tf.FPD += m.FPD;
    tf.TRT += m.TRT;
    tf.MFD += m.MFD;
  }
  const double n = static_cast<double>(n_subjects);
  const double denom = opts.avg_fixating_only ? static_cast<double>(n_fixated) : n;
  if (denom > 0.0) {
    tf.nFix = static_cast<double>(n_fix) / denom;
    tf.nRefix = static_cast<double>(n_refix) / denom;
    tf.FFD /= denom;
    tf.FPD /= denom;
    tf.TRT /= denom;
    tf.MFD /= denom;
  }
  tf.fProp = static_cast<double>(n_fixated) / n;
  tf.reProp = static_cast<double>(n_refixated) / n;
  // Same value as the ratio above, but keeps nRefix = nFix - fProp exact in
  // floating point.
  if (!opts.avg_fixating_only && n_refix == n_fix - n_fixated) tf.nRefix = tf.nFix - tf.fProp;
  return tf;
}

std::size_t FeatureDataset::n_valid() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += static_cast<std::size_t>(s.mask.count());
  return n;
}

FeatureMatrix FeatureDataset::valid_rows() const {
  FeatureMatrix out(static_cast<Eigen::Index>(n_valid()), kNumFeatures);
  Eigen::Index r = 0;
  for (const auto& s : sentences) {
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
      if (s.mask(i)) out.row(r++) = s.values.row(i);
    }
  }
  return out;
}

FeatureDataset extract_features(const Corpus& c, const FeatureOptions& opts) {
  const auto report = validate_corpus(c);
  if (!report.clean()) {
    const auto& v = report.violations.front();
    throw DataError("extract_features: corpus '" + c.name + "' is not clean: " + v.entity + ": " + v.message);
  }
  if (c.subject_ids.empty()) throw DataError("extract_features: corpus '" + c.name + "' has no subjects");

  std::map<std::string, std::vector<const SubjectTrial*>> trials_by_sentence;
  for (const auto& tr : c.trials) trials_by_sentence[tr.sentence_id].push_back(&tr);

  FeatureDataset ds;
  ds.corpus = c.name;
  ds.sentences.reserve(c.sentences.size());
  const std::size_t n_subjects = c.subject_ids.size();
  for (const auto& s : c.sentences) {
    const auto n_tokens = s.tokens.size();
    // per_token[i] collects one measure per subject with a trial.
    std::vector<std::vector<SubjectTokenMeasures>> per_token(n_tokens);
    for (const auto* tr : trials_by_sentence[s.sentence_id]) {
      const auto m = subject_measures(*tr, s);
      for (std::size_t i = 0; i < n_tokens; ++i) per_token[i].push_back(m[i]);
    }
    SentenceFeatures sf;
    sf.sentence_id = s.sentence_id;
    sf.language = s.language.empty() ? c.language : s.language;
    sf.tokens = s.surfaces();
    sf.values.resize(static_cast<Eigen::Index>(n_tokens), kNumFeatures);
    sf.mask = Mask::Constant(static_cast<Eigen::Index>(n_tokens), true);
    for (std::size_t i = 0; i < n_tokens; ++i) {
      sf.values.row(static_cast<Eigen::Index>(i)) =
          aggregate_token_features(per_token[i], n_subjects, opts).to_row();
    }
    ds.sentences.push_back(std::move(sf));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

Standardizer::Standardizer(FeatureVector min, FeatureVector max) : min_(min), max_(max), fitted_(true) {
  if ((max_.array() < min_.array()).any()) throw UsageError("Standardizer: max < min");
}

Standardizer Standardizer::fit(const FeatureDataset& train) {
  const FeatureMatrix rows = train.valid_rows();
  if (rows.rows() == 0) throw DataError("fit_standardizer: dataset '" + train.corpus + "' has no valid tokens");
  return Standardizer(rows.colwise().minCoeff(), rows.colwise().maxCoeff());
}

void Standardizer::require_fitted() const {
  if (!fitted_) throw UsageError("standardizer has not been fitted");
}

bool Standardizer::degenerate(Feature f) const {
  const auto i = static_cast<int>(f);
  return max_(i) == min_(i);
}

FeatureVector Standardizer::transform(const FeatureVector& row) const {
  require_fitted();
  FeatureVector out;
  for (int i = 0; i < kNumFeatures; ++i) {
    const double span = max_(i) - min_(i);
    out(i) = span > 0.0 ? std::clamp(kRange * (row(i) - min_(i)) / span, 0.0, kRange) : 0.0;
  }
  return out;
}

FeatureVector Standardizer::inverse(const FeatureVector& row) const {
  require_fitted();
  return (min_.array() + row.array() * (max_ - min_).array() / kRange).matrix();
}

std::string Standardizer::to_json() const {
  require_fitted();
  nlohmann::ordered_json j;
  for (int i = 0; i < kNumFeatures; ++i) {
    j[std::string(kFeatureNames[static_cast<std::size_t>(i)])] = {{"min", min_(i)}, {"max", max_(i)}};
  }
  return j.dump(2);
}

Standardizer Standardizer::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("standardizer JSON: ") + e.what());
  }
  FeatureVector lo, hi;
  for (int i = 0; i < kNumFeatures; ++i) {
    const std::string name(kFeatureNames[static_cast<std::size_t>(i)]);
    if (!j.contains(name) || !j[name].contains("min") || !j[name].contains("max")) {
      throw DataError("standardizer JSON: missing entry for feature " + name);
    }
    lo(i) = j[name]["min"].get<double>();
    hi(i) = j[name]["max"].get<double>();
  }
  return Standardizer(lo, hi);
}

FeatureDataset standardize(const Standardizer& s, const FeatureDataset& d) {
  FeatureDataset out = d;
  for (auto& sf : out.sentences) {
    for (Eigen::Index i = 0; i < sf.values.rows(); ++i) sf.values.row(i) = s.transform(sf.values.row(i));
  }
  return out;
}

FeatureDataset destandardize(const Standardizer& s, const FeatureDataset& d) {
  FeatureDataset out = d;
  for (auto& sf : out.sentences) {
    for (Eigen::Index i = 0; i < sf.values.rows(); ++i) sf.values.row(i) = s.inverse(sf.values.row(i));
  }
  return out;
}

void write_features_tsv(const FeatureDataset& d, std::ostream& out) {
  out << "sentence_id\ttoken_index\tsurface";
  for (auto name : kFeatureNames) out << '\t' << name;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& s : d.sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.sentence_id << '\t' << i << '\t' << s.tokens[i];
      for (int f = 0; f < kNumFeatures; ++f) out << '\t' << s.values(static_cast<Eigen::Index>(i), f);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace gazekit
