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

#include "gazekit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gazekit/error.hpp"
#include "gazekit/utf8.hpp"

namespace gazekit {

namespace {

std::u32string alphabet(const std::string& language) {
  if (language == "ru") return U"абвгдеёжзийклмнопрстуфхцчшщъыьэюя";
  if (language == "de") return U"abcdefghijklmnopqrstuvwxyzäöüß";
  return U"abcdefghijklmnopqrstuvwxyz";
}

std::vector<std::vector<std::string>> make_lexicon(const SyntheticConfig& cfg, std::mt19937_64& rng) {
  const auto letters = alphabet(cfg.language);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::vector<std::vector<std::string>> lexicon(static_cast<std::size_t>(cfg.max_word_length) + 1);
  for (int len = 1; len <= cfg.max_word_length; ++len) {
    std::set<std::string> words;
    for (int attempt = 0; attempt < cfg.lexicon_per_length * 20 &&
                          static_cast<int>(words.size()) < cfg.lexicon_per_length;
         ++attempt) {
      std::u32string w;
      for (int k = 0; k < len; ++k) w.push_back(letters[pick(rng)]);
      words.insert(utf8::encode(w));
    }
    lexicon[static_cast<std::size_t>(len)].assign(words.begin(), words.end());
  }
  return lexicon;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.n_sentences < 1 || cfg.n_subjects < 1 || cfg.min_sentence_length < 1 ||
      cfg.max_sentence_length < cfg.min_sentence_length || cfg.max_word_length < 1) {
    throw UsageError("synthetic corpus: invalid configuration");
  }
  std::mt19937_64 rng(cfg.seed);
  const auto lexicon = make_lexicon(cfg, rng);

  // Word lengths follow a skewed distribution peaking around 3-5 characters.
  std::vector<double> length_weights;
  for (int len = 1; len <= cfg.max_word_length; ++len) {
    const double x = static_cast<double>(len);
    length_weights.push_back(x * std::exp(-x / 2.5) + 0.05);
  }
  std::discrete_distribution<int> length_dist(length_weights.begin(), length_weights.end());
  std::uniform_int_distribution<int> sent_len(cfg.min_sentence_length, cfg.max_sentence_length);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Corpus c;
  c.name = cfg.name;
  c.language = cfg.language;

  std::vector<double> speed(static_cast<std::size_t>(cfg.n_subjects));
  for (int s = 0; s < cfg.n_subjects; ++s) {
    const std::string id = "p" + std::to_string(s + 1);
    c.subject_ids.insert(id);
    speed[static_cast<std::size_t>(s)] = std::max(0.5, 1.0 + cfg.subject_speed_sd * noise(rng));
  }

  for (int si = 0; si < cfg.n_sentences; ++si) {
    Sentence s;
    s.sentence_id = cfg.name + "-s" + std::to_string(si + 1);
    s.document_id = cfg.name + "-d" + std::to_string(si / 10 + 1);
    s.language = cfg.language;
    const int n = sent_len(rng);
    for (int i = 0; i < n; ++i) {
      const int len = length_dist(rng) + 1;
      const auto& words = lexicon[static_cast<std::size_t>(len)];
      std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
      s.tokens.push_back(Token::make(words[pick(rng)], i));
    }

    for (int subj = 0; subj < cfg.n_subjects; ++subj) {
      SubjectTrial tr;
      tr.subject_id = "p" + std::to_string(subj + 1);
      tr.sentence_id = s.sentence_id;
      const double sp = speed[static_cast<std::size_t>(subj)];
      auto fixate = [&](int token, double mean_ms) {
        const double d = std::max(50.0, sp * (mean_ms + cfg.duration_noise_sd * noise(rng)));
        tr.fixations.push_back({token, std::round(d), static_cast<int>(tr.fixations.size())});
      };
      for (int i = 0; i < n; ++i) {
        const double len = static_cast<double>(s.tokens[static_cast<std::size_t>(i)].char_length);
        const double p_fix = std::clamp(cfg.fix_base + cfg.fix_slope * len, 0.02, 0.98);
        if (unif(rng) >= p_fix) continue;
        const double first = cfg.ffd_base + cfg.ffd_slope * len;
        fixate(i, first);
        const double p_refix = std::clamp(cfg.refix_base + cfg.refix_slope * len, 0.0, 0.9);
        if (unif(rng) < p_refix) fixate(i, 0.8 * first);
        if (i > 0 && unif(rng) < cfg.regression_prob) {
          std::uniform_int_distribution<int> back(0, i - 1);
          const int j = back(rng);
          const double lj = static_cast<double>(s.tokens[static_cast<std::size_t>(j)].char_length);
          fixate(j, cfg.ffd_base + cfg.ffd_slope * lj);
        }
      }
      c.trials.push_back(std::move(tr));
    }
    c.sentences.push_back(std::move(s));
  }
  return c;
}

SyntheticConfig shifted_domain(SyntheticConfig cfg) {
  cfg.name += "-shifted";
  cfg.fix_base = 0.75;
  cfg.fix_slope = 0.0;
  cfg.refix_base = 0.35;
  cfg.refix_slope = 0.0;
  cfg.ffd_base = 320.0;
  cfg.ffd_slope = -6.0;
  cfg.regression_prob = 0.2;
  cfg.seed += 7919;
  return cfg;
}

Corpus make_worked_example_corpus() {
  Corpus c;
  c.name = "worked-example";
  c.language = "en";
  c.subject_ids = {"s1"};
  Sentence s;
  s.sentence_id = "example";
  s.document_id = "example-doc";
  s.language = "en";
  const std::vector<std::string> words = {"Laurence", "was", "introduced", "to", "Mary", "French", "today"};
  for (std::size_t i = 0; i < words.size(); ++i) s.tokens.push_back(Token::make(words[i], static_cast<int>(i)));
  SubjectTrial tr{"s1", "example", {}};
  const std::vector<std::pair<int, double>> seq = {{0, 181}, {2, 214}, {4, 233}, {5, 247}, {4, 198}, {6, 205}};
  for (std::size_t k = 0; k < seq.size(); ++k) {
    tr.fixations.push_back({seq[k].first, seq[k].second, static_cast<int>(k)});
  }
  c.sentences.push_back(std::move(s));
  c.trials.push_back(std::move(tr));
  return c;
}

}  // namespace gazekit
