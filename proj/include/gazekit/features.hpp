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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazekit/corpus.hpp"
#include "gazekit/types.hpp"

namespace gazekit {

/// Reading measures of one subject on one word.
struct SubjectTokenMeasures {
  int nFix = 0;
  double FFD = 0.0;
  double FPD = 0.0;
  double TRT = 0.0;
  double MFD = 0.0;
  int nRefix = 0;
  bool fixated = false;
  bool refixated = false;

  friend bool operator==(const SubjectTokenMeasures&, const SubjectTokenMeasures&) = default;
};

/// Subject-averaged features of one word, before standardization.
struct TokenFeatures {
  double nFix = 0.0;
  double FFD = 0.0;
  double FPD = 0.0;
  double TRT = 0.0;
  double MFD = 0.0;
  double fProp = 0.0;
  double nRefix = 0.0;
  double reProp = 0.0;

  FeatureVector to_row() const;
  static TokenFeatures from_row(const FeatureVector& row);
};

struct FeatureOptions {
  /// Average duration and count measures over the subjects that fixated the
  /// word instead of over all subjects. Proportions are unaffected.
  bool avg_fixating_only = false;
};

/// Scans one trial and returns one measure record per token of the sentence.
std::vector<SubjectTokenMeasures> subject_measures(const SubjectTrial& trial, const Sentence& sentence);

/// Averages per-subject measures of one word. `measures` holds the subjects
/// that have a trial; the remaining n_subjects - measures.size() subjects
/// count as skipping the word.
TokenFeatures aggregate_token_features(std::span<const SubjectTokenMeasures> measures, std::size_t n_subjects,
                                       const FeatureOptions& opts = {});

struct SentenceFeatures {
  std::string sentence_id;
  std::string language;
  std::vector<std::string> tokens;
  FeatureMatrix values;  ///< tokens.size() x kNumFeatures, in Feature order
  Mask mask;             ///< true where the row holds a real, evaluable token

  std::size_t size() const { return tokens.size(); }
};

struct FeatureDataset {
  std::string corpus;
  std::string split;
  std::vector<SentenceFeatures> sentences;

  std::size_t n_valid() const;
  bool empty() const { return n_valid() == 0; }
  /// Stacks every valid row into one matrix.
  FeatureMatrix valid_rows() const;
};

/// Full extraction over a clean corpus. Throws DataError if validation fails.
FeatureDataset extract_features(const Corpus& c, const FeatureOptions& opts = {});

/// Per-feature min-max scaler onto [0, 100].
class Standardizer {
 public:
  static constexpr double kRange = 100.0;

  Standardizer() = default;
  Standardizer(FeatureVector min, FeatureVector max);

  static Standardizer fit(const FeatureDataset& train);

  bool fitted() const { return fitted_; }
  const FeatureVector& min() const { return min_; }
  const FeatureVector& max() const { return max_; }
  bool degenerate(Feature f) const;

  /// Maps one row into [0, 100]; out-of-range values are clamped and
  /// degenerate features map to 0.
  FeatureVector transform(const FeatureVector& row) const;
  FeatureVector inverse(const FeatureVector& row) const;

  std::string to_json() const;
  static Standardizer from_json(const std::string& text);

 private:
  void require_fitted() const;

  FeatureVector min_ = FeatureVector::Zero();
  FeatureVector max_ = FeatureVector::Zero();
  bool fitted_ = false;
};

FeatureDataset standardize(const Standardizer& s, const FeatureDataset& d);
FeatureDataset destandardize(const Standardizer& s, const FeatureDataset& d);

/// TSV with header: sentence_id, token_index, surface, then the features.
void write_features_tsv(const FeatureDataset& d, std::ostream& out);

}  // namespace gazekit
