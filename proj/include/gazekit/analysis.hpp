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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazekit/features.hpp"
#include "gazekit/prediction.hpp"

namespace gazekit {

/// Vowel-group syllable count, at least 1.
///   en: groups of a e i o u y; a final silent "e" is dropped unless the
///       word ends in consonant + "le" or it is the only group.
///   nl: groups of a e i o u y and their accented forms.
///   de: groups of a e i o u y ä ö ü.
///   ru: every vowel letter а е ё и о у ы э ю я is one syllable.
/// Throws UsageError for other languages.
int count_syllables(std::string_view word, std::string_view language);

/// score = base - asl * (words / sentences) - asw * (syllables / words)
struct FleschCoefficients {
  double base;
  double asl;
  double asw;
  const char* source;
};

/// en: Flesch (1948)       206.835 - 1.015 ASL - 84.6 ASW
/// nl: Douma (1960)        206.835 - 0.93  ASL - 77.0 ASW
/// de: Amstad (1978)       180     - 1.0   ASL - 58.5 ASW
/// ru: Oborneva (2006)     206.835 - 1.3   ASL - 60.1 ASW
FleschCoefficients flesch_coefficients(std::string_view language);

struct ReadabilityScore {
  double value = 0.0;  ///< clamped to [0, 100]
  double raw = 0.0;    ///< before clamping
  std::string language;
  double avg_sentence_length = 0.0;    ///< words per sentence
  double avg_syllables_per_word = 0.0;
};

ReadabilityScore flesch_from_components(double avg_sentence_length, double avg_syllables_per_word,
                                        std::string_view language);
ReadabilityScore flesch(const std::vector<std::vector<std::string>>& sentences, std::string_view language);

struct CurvePoint {
  int bin = 0;
  double mean = 0.0;
  std::size_t count = 0;
};

struct BinnedCurve {
  std::string series;  ///< "true", "predicted" or "pretrained"
  std::vector<CurvePoint> points;  ///< ascending bins, empty bins omitted
};

/// bin,series,mean,count
std::string curves_to_csv(const std::vector<BinnedCurve>& curves);

/// Words of length >= this go to one overflow bin.
inline constexpr int kWordLengthOverflow = 15;

/// Mean feature value per word length (in characters). Emits the "true"
/// series plus one series per supplied prediction set.
std::vector<BinnedCurve> word_length_curve(const FeatureDataset& d, std::string_view feature,
                                           const std::vector<SentencePrediction>* predicted = nullptr,
                                           const std::vector<SentencePrediction>* pretrained = nullptr);

/// Per-sentence accuracy (100 - MAE on one feature) averaged per Flesch
/// bin. The bin key is the lower bound; a score of 100 falls in the top bin.
/// An empty language uses each sentence's own language.
BinnedCurve readability_accuracy_curve(const FeatureDataset& gold, const std::vector<SentencePrediction>& predicted,
                                       std::string_view feature = "nFix", std::string_view language = {},
                                       int bin_width = 10, std::string series = "predicted");

/// Tags per sentence, aligned with the tokens.
using TagTable = std::map<std::string, std::vector<std::string>>;

/// Reads sentence_id<TAB>token_index<TAB>tag rows (a header row is optional).
TagTable read_tags_tsv(std::istream& in);

struct PosGroup {
  std::string tag;
  double mean_mfd = 0.0;
  std::size_t count = 0;
  std::optional<double> accuracy;  ///< 100 - MAE on MFD when predictions are given
};

std::vector<PosGroup> pos_aggregation(const FeatureDataset& d, const TagTable& tags,
                                      const std::vector<SentencePrediction>* predicted = nullptr);

}  // namespace gazekit
