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
#include <string>

#include "gazekit/corpus.hpp"

namespace gazekit {

/// Parameters of a simple stochastic reader. Fixation and refixation
/// probabilities grow linearly with word length, durations grow with word
/// length plus Gaussian noise, and the reader occasionally regresses.
struct SyntheticConfig {
  std::string name = "synthetic";
  std::string language = "en";
  int n_sentences = 200;
  int min_sentence_length = 5;
  int max_sentence_length = 14;
  int n_subjects = 6;
  int max_word_length = 14;
  int lexicon_per_length = 25;

  double fix_base = 0.10;      ///< p(fixate) = fix_base + fix_slope * length
  double fix_slope = 0.085;
  double refix_base = -0.10;   ///< p(refixate | fixated) = refix_base + refix_slope * length
  double refix_slope = 0.055;
  double ffd_base = 160.0;     ///< first fixation = ffd_base + ffd_slope * length + noise
  double ffd_slope = 10.0;
  double duration_noise_sd = 25.0;
  double regression_prob = 0.06;
  double subject_speed_sd = 0.08;

  std::uint64_t seed = 1;
};

Corpus make_synthetic_corpus(const SyntheticConfig& cfg);

/// Same reader with a much weaker length effect and longer durations; used
/// as the shifted domain of a transfer pair.
SyntheticConfig shifted_domain(SyntheticConfig cfg);

/// One sentence, one subject: "Mary" receives 233 ms, a fixation on another
/// word, then 198 ms.
Corpus make_worked_example_corpus();

}  // namespace gazekit
