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

// Shared generators and reference implementations for the test binaries.
// The reference code is deliberately naive and independent of the library.
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gazekit/corpus.hpp"
#include "gazekit/features.hpp"

namespace gazekit::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class ScopedDir {
 public:
  explicit ScopedDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gazekit-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScopedDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScopedDir(const ScopedDir&) = delete;
  ScopedDir& operator=(const ScopedDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string random_word(std::mt19937_64& rng, int length) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::string w;
  for (int i = 0; i < length; ++i) w += letters[pick(rng)];
  return w;
}

/// Random fixation sequence over n_tokens words: any order, revisits allowed.
inline std::vector<FixationEvent> random_fixations(std::mt19937_64& rng, int n_tokens, int max_fixations) {
  std::uniform_int_distribution<int> count(0, max_fixations);
  std::uniform_int_distribution<int> token(0, n_tokens - 1);
  std::uniform_int_distribution<int> dur(40, 600);
  std::bernoulli_distribution stay(0.3);
  std::vector<FixationEvent> out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int t = (!out.empty() && stay(rng)) ? out.back().token_index : token(rng);
    out.push_back({t, static_cast<double>(dur(rng)) + 0.25 * (i % 4), i});
  }
  return out;
}

/// Clean random corpus; some subjects may lack a trial for some sentences.
inline Corpus random_corpus(std::mt19937_64& rng, int max_sentences = 20, int max_subjects = 5) {
  std::uniform_int_distribution<int> n_sent(1, max_sentences);
  std::uniform_int_distribution<int> n_subj(1, max_subjects);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> wlen(1, 9);
  std::bernoulli_distribution has_trial(0.85);
  Corpus c;
  c.name = "random";
  c.language = "en";
  const int ns = n_subj(rng);
  for (int s = 0; s < ns; ++s) c.subject_ids.insert("p" + std::to_string(s));
  const int nsent = n_sent(rng);
  for (int i = 0; i < nsent; ++i) {
    Sentence sent;
    sent.sentence_id = "s" + std::to_string(i);
    sent.document_id = "d" + std::to_string(i / 3);
    sent.language = "en";
    const int L = len(rng);
    for (int t = 0; t < L; ++t) sent.tokens.push_back(Token::make(random_word(rng, wlen(rng)), t));
    for (const auto& subj : c.subject_ids) {
      if (!has_trial(rng)) continue;
      c.trials.push_back({subj, sent.sentence_id, random_fixations(rng, L, 3 * L)});
    }
    c.sentences.push_back(std::move(sent));
  }
  return c;
}

/// Naive per-token, per-subject recomputation of the eight features.
inline FeatureMatrix reference_features(const Corpus& c, const Sentence& s, bool fixating_only = false) {
  const auto L = static_cast<Eigen::Index>(s.tokens.size());
  FeatureMatrix out = FeatureMatrix::Zero(L, kNumFeatures);
  const double n_subj = static_cast<double>(c.subject_ids.size());
  for (Eigen::Index t = 0; t < L; ++t) {
    double nfix = 0, ffd = 0, fpd = 0, trt = 0, mfd = 0, nrefix = 0, fixated = 0, refixated = 0;
    for (const auto& subj : c.subject_ids) {
      const SubjectTrial* trial = nullptr;
      for (const auto& tr : c.trials) {
        if (tr.subject_id == subj && tr.sentence_id == s.sentence_id) trial = &tr;
      }
      if (!trial) continue;
      std::vector<FixationEvent> fx = trial->fixations;
      std::sort(fx.begin(), fx.end(), [](const auto& a, const auto& b) { return a.order < b.order; });
      int count = 0;
      double total = 0;
      double first = 0;
      double pass = 0;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        if (fx[i].token_index != t) continue;
        if (count == 0) {
          first = fx[i].duration_ms;
          for (std::size_t j = i; j < fx.size() && fx[j].token_index == t; ++j) pass += fx[j].duration_ms;
        }
        ++count;
        total += fx[i].duration_ms;
      }
      nfix += count;
      ffd += first;
      fpd += pass;
      trt += total;
      mfd += count > 0 ? total / count : 0.0;
      nrefix += count > 1 ? count - 1 : 0;
      fixated += count > 0 ? 1 : 0;
      refixated += count > 1 ? 1 : 0;
    }
    const double d = fixating_only ? fixated : n_subj;
    if (d > 0) {
      out(t, 0) = nfix / d;
      out(t, 1) = ffd / d;
      out(t, 2) = fpd / d;
      out(t, 3) = trt / d;
      out(t, 4) = mfd / d;
      out(t, 6) = nrefix / d;
    }
    out(t, 5) = fixated / n_subj;
    out(t, 7) = refixated / n_subj;
  }
  return out;
}

/// Dataset of random already-standardized values, all rows valid.
inline FeatureDataset random_dataset(std::mt19937_64& rng, int n_sentences, int max_len = 10) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> wlen(1, 12);
  std::uniform_real_distribution<double> v(0.0, 100.0);
  FeatureDataset d;
  d.corpus = "random";
  d.split = "test";
  for (int i = 0; i < n_sentences; ++i) {
    SentenceFeatures s;
    s.sentence_id = "s" + std::to_string(i);
    s.language = "en";
    const int L = len(rng);
    for (int t = 0; t < L; ++t) s.tokens.push_back(random_word(rng, wlen(rng)));
    s.values = FeatureMatrix::NullaryExpr(L, kNumFeatures, [&]() { return v(rng); });
    s.mask = Mask::Constant(L, true);
    d.sentences.push_back(std::move(s));
  }
  return d;
}

}  // namespace gazekit::testing
