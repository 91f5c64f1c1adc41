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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gazekit/corpus.hpp"
#include "gazekit/error.hpp"
#include "gazekit/synthetic.hpp"
#include "support.hpp"

namespace gk = gazekit;

namespace {

const char* kOneSentence =
    R"({"document_id":"d1","sentence_id":"s1","language":"en","tokens":["The","cat","sat"],)"
    R"("trials":[{"subject_id":"p1","fixations":[{"token_index":1,"duration_ms":210,"order":0},)"
    R"({"token_index":2,"duration_ms":190.5,"order":1}]}]})";

// Three sentences, two subjects; p2 has no trial for s3.
const char* kThreeSentences = R"({"document_id":"d1","sentence_id":"s1","language":"en","tokens":["A","big","dog"],"trials":[{"subject_id":"p1","fixations":[{"token_index":0,"duration_ms":100,"order":0}]},{"subject_id":"p2","fixations":[]}]}
{"document_id":"d1","sentence_id":"s2","language":"en","tokens":["the","dog","ran","home"],"trials":[{"subject_id":"p1","fixations":[]},{"subject_id":"p2","fixations":[{"token_index":3,"duration_ms":150,"order":0}]}]}
{"document_id":"d2","sentence_id":"s3","language":"en","tokens":["Dogs","bark"],"trials":[{"subject_id":"p1","fixations":[{"token_index":1,"duration_ms":90,"order":0}]}]}
)";

gk::Corpus parse(const std::string& text, const std::string& name = "t") {
  std::istringstream in(text);
  return gk::parse_corpus(in, "unified-jsonl", name);
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("gazekit_test_" + name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(LoadCorpus, OneSentenceEchoesInput) {
  const auto path = write_temp("one.jsonl", kOneSentence);
  const auto c = gk::load_corpus(path);
  ASSERT_EQ(c.sentences.size(), 1u);
  ASSERT_EQ(c.trials.size(), 1u);
  EXPECT_EQ(c.trials[0].fixations.size(), 2u);
  EXPECT_EQ(c.language, "en");
  EXPECT_EQ(c.sentences[0].tokens[2].surface, "sat");
  EXPECT_EQ(c.sentences[0].tokens[2].char_length, 3);
  EXPECT_DOUBLE_EQ(c.trials[0].fixations[1].duration_ms, 190.5);
}

TEST(LoadCorpus, Deterministic) {
  const auto path = write_temp("three.jsonl", kThreeSentences);
  EXPECT_EQ(gk::load_corpus(path), gk::load_corpus(path));
}

TEST(LoadCorpus, TokenIndexOutOfRangeNamesTheTrial) {
  std::string bad = kOneSentence;
  bad.replace(bad.find("\"token_index\":2"), 15, "\"token_index\":3");
  const auto path = write_temp("bad_index.jsonl", bad);
  try {
    gk::load_corpus(path);
    FAIL() << "expected DataError";
  } catch (const gk::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("trial (p1, s1)"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("fixation-token-index"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, MalformedRecordReportsLineAndField) {
  std::string text = std::string(kOneSentence) + "\n" + R"({"document_id":"d","sentence_id":"x","language":"en","tokens":["a"],"trials":[{"subject_id":"p1","fixations":[{"token_index":0,"order":0}]}]})";
  try {
    parse(text);
    FAIL() << "expected DataError";
  } catch (const gk::DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("trials[0].fixations[0].duration_ms"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse("{not json"), gk::DataError);
  EXPECT_THROW(parse(R"({"document_id":"d","sentence_id":7,"language":"en","tokens":[],"trials":[]})"), gk::DataError);
}

TEST(LoadCorpus, UnknownAdapterIsUsageError) {
  const auto path = write_temp("adapter.jsonl", kOneSentence);
  EXPECT_THROW(gk::load_corpus(path, "dundee-raw"), gk::UsageError);
  EXPECT_THROW(gk::load_corpus("/nonexistent/corpus.jsonl"), gk::UsageError);
}

TEST(LoadCorpus, RegisteredAdapterIsUsed) {
  gk::register_adapter("test-echo", [](std::istream& in, std::string name) {
    auto c = gk::parse_corpus(in, "unified-jsonl", std::move(name));
    c.name += "-echo";
    return c;
  });
  const auto tags = gk::registered_adapters();
  EXPECT_NE(std::find(tags.begin(), tags.end(), "unified-jsonl"), tags.end());
  const auto path = write_temp("echo.jsonl", kOneSentence);
  EXPECT_EQ(gk::load_corpus(path, "test-echo").name, "gazekit_test_echo-echo");
}

TEST(LoadCorpus, FixationsAreOrderedByOrderField) {
  const auto c = parse(R"({"document_id":"d","sentence_id":"s","language":"en","tokens":["a","b"],"trials":[{"subject_id":"p","fixations":[{"token_index":1,"duration_ms":5,"order":1},{"token_index":0,"duration_ms":7,"order":0}]}]})");
  EXPECT_EQ(c.trials[0].fixations[0].token_index, 0);
  EXPECT_TRUE(gk::validate_corpus(c).clean());
}

TEST(LoadCorpus, MixedLanguagesBecomeMul) {
  std::string text = std::string(kOneSentence) + "\n" +
                     R"({"document_id":"d","sentence_id":"s9","language":"de","tokens":["Hund"],"trials":[]})";
  const auto c = parse(text);
  EXPECT_EQ(c.language, "mul");
  EXPECT_TRUE(gk::validate_corpus(c).clean());
}

TEST(WriteUnified, RoundTrips) {
  std::mt19937_64 rng(5);
  const auto c = gk::testing::random_corpus(rng);
  std::ostringstream os;
  gk::write_unified(c, os);
  auto back = parse(os.str(), c.name);
  // Subjects without any trial are not representable in the format.
  std::set<std::string> with_trials;
  for (const auto& t : c.trials) with_trials.insert(t.subject_id);
  auto expected = c;
  expected.subject_ids = with_trials;
  EXPECT_EQ(back, expected);
}

TEST(Validate, ReportsEveryRule) {
  gk::Corpus c;
  c.name = "bad";
  c.language = "xx";
  c.subject_ids = {"p1"};
  gk::Sentence s;
  s.sentence_id = "s1";
  s.tokens = {gk::Token::make("a", 0), gk::Token::make("", 1), gk::Token{"b", 5, 1}, gk::Token{"cd", 3, 9}};
  c.sentences = {s, s};
  gk::Sentence empty;
  empty.sentence_id = "s2";
  c.sentences.push_back(empty);
  c.trials.push_back({"p1", "s1", {{0, 100, 0}, {9, 100, 1}, {1, -5, 2}, {1, 10, 7}}});
  c.trials.push_back({"p1", "s1", {}});
  c.trials.push_back({"p9", "nope", {}});
  std::set<std::string> rules;
  for (const auto& v : gk::validate_corpus(c).violations) rules.insert(v.rule);
  for (auto r : {"unsupported-language", "duplicate-sentence", "empty-sentence", "empty-token", "token-index",
                 "char-length", "duplicate-trial", "unknown-subject", "unknown-sentence", "fixation-duration",
                 "fixation-token-index", "fixation-order"}) {
    EXPECT_TRUE(rules.contains(r)) << r;
  }
}

TEST(Validate, SupportedLanguages) {
  for (auto code : {"en", "nl", "de", "ru", "mul"}) EXPECT_TRUE(gk::is_supported_language(code)) << code;
  for (auto code : {"", "fr", "EN", "english"}) EXPECT_FALSE(gk::is_supported_language(code)) << code;
}

TEST(CorpusStats, ThreeSentenceFixtureMatchesHandCount) {
  const auto c = parse(kThreeSentences);
  ASSERT_TRUE(gk::validate_corpus(c).clean());
  const auto s = gk::corpus_stats(c);
  EXPECT_EQ(s.n_subjects, 2u);
  EXPECT_EQ(s.n_sentences, 3u);
  EXPECT_EQ(s.n_tokens, 9u);
  // A big dog the dog ran home Dogs bark: "dog" twice, case-sensitive otherwise.
  EXPECT_EQ(s.n_types, 8u);
  EXPECT_DOUBLE_EQ(s.sent_length_mean, 3.0);
  EXPECT_EQ(s.sent_length_min, 2);
  EXPECT_EQ(s.sent_length_max, 4);
  // 1+3+3 + 3+3+3+4 + 4+4 = 28
  EXPECT_DOUBLE_EQ(s.word_length_mean, 28.0 / 9.0);
  EXPECT_EQ(s.word_length_min, 1);
  EXPECT_EQ(s.word_length_max, 4);
}

TEST(CorpusStats, MatchesRecountOnRandomCorpora) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto c = gk::testing::random_corpus(rng);
    const auto s = gk::corpus_stats(c);
    std::size_t tokens = 0;
    std::unordered_set<std::string> types;
    double chars = 0;
    int wmin = 1000, wmax = 0;
    for (const auto& sent : c.sentences) {
      for (const auto& t : sent.tokens) {
        ++tokens;
        types.insert(t.surface);
        chars += static_cast<double>(t.surface.size());
        wmin = std::min<int>(wmin, static_cast<int>(t.surface.size()));
        wmax = std::max<int>(wmax, static_cast<int>(t.surface.size()));
      }
    }
    ASSERT_EQ(s.n_tokens, tokens);
    ASSERT_EQ(s.n_types, types.size());
    ASSERT_NEAR(s.word_length_mean, chars / static_cast<double>(tokens), 1e-12);
    ASSERT_EQ(s.word_length_min, wmin);
    ASSERT_EQ(s.word_length_max, wmax);
    ASSERT_LE(s.sent_length_min, s.sent_length_mean);
    ASSERT_LE(s.sent_length_mean, s.sent_length_max);
  }
}

TEST(CorpusStats, CountsCharactersNotBytes) {
  const auto c = parse(R"({"document_id":"d","sentence_id":"s","language":"ru","tokens":["молоко","и"],"trials":[]})");
  const auto s = gk::corpus_stats(c);
  EXPECT_EQ(s.word_length_max, 6);
  EXPECT_EQ(s.word_length_min, 1);
}

TEST(CorpusStats, EmptyCorpusIsDataError) {
  gk::Corpus c;
  EXPECT_THROW(gk::corpus_stats(c), gk::DataError);
}

TEST(SplitDataset, HundredSentencesGive90_5_5) {
  gk::SyntheticConfig cfg;
  cfg.n_sentences = 100;
  const auto c = gk::make_synthetic_corpus(cfg);
  const auto s = gk::split_dataset(c, {}, 42);
  EXPECT_EQ(s.train.sentences.size(), 90u);
  EXPECT_EQ(s.val.sentences.size(), 5u);
  EXPECT_EQ(s.test.sentences.size(), 5u);
}

TEST(SplitDataset, PartitionAndDeterminismProperties) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    gk::SyntheticConfig cfg;
    cfg.n_sentences = 20 + static_cast<int>(rng() % 200);
    cfg.n_subjects = 2;
    cfg.seed = rng();
    const auto c = gk::make_synthetic_corpus(cfg);
    const std::uint64_t seed = rng();
    const auto a = gk::split_dataset(c, {}, seed);
    const auto b = gk::split_dataset(c, {}, seed);
    ASSERT_EQ(a.train, b.train);
    ASSERT_EQ(a.test, b.test);
    std::multiset<std::string> ids;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
      for (const auto& s : part->sentences) ids.insert(s.sentence_id);
    }
    ASSERT_EQ(ids.size(), c.sentences.size());
    for (const auto& s : c.sentences) ASSERT_EQ(ids.count(s.sentence_id), 1u);
    const auto n = static_cast<double>(c.sentences.size());
    ASSERT_EQ(a.test.sentences.size(), static_cast<std::size_t>(std::llround(0.05 * n)));
    // Trials follow their sentences.
    for (const auto& t : a.test.trials) {
      ASSERT_TRUE(std::any_of(a.test.sentences.begin(), a.test.sentences.end(),
                              [&](const auto& s) { return s.sentence_id == t.sentence_id; }));
    }
    ASSERT_EQ(a.train.subject_ids, c.subject_ids);
  }
}

TEST(SplitDataset, DifferentSeedsDiffer) {
  gk::SyntheticConfig cfg;
  cfg.n_sentences = 100;
  const auto c = gk::make_synthetic_corpus(cfg);
  EXPECT_NE(gk::split_dataset(c, {}, 1).test, gk::split_dataset(c, {}, 2).test);
}

TEST(SplitDataset, Errors) {
  gk::SyntheticConfig cfg;
  cfg.n_sentences = 2;
  EXPECT_THROW(gk::split_dataset(gk::make_synthetic_corpus(cfg), {}, 1), gk::DataError);
  cfg.n_sentences = 10;
  const auto c = gk::make_synthetic_corpus(cfg);
  EXPECT_THROW(gk::split_dataset(c, {0.5, 0.2, 0.2}, 1), gk::UsageError);
  EXPECT_THROW(gk::split_dataset(c, {1.0, 0.0, 0.0}, 1), gk::UsageError);
  // 5% of 10 rounds to a single sentence, 2% rounds to none.
  EXPECT_NO_THROW(gk::split_dataset(c, {}, 1));
  EXPECT_THROW(gk::split_dataset(c, {0.96, 0.02, 0.02}, 1), gk::DataError);
}

TEST(Synthetic, CleanAndSeeded) {
  gk::SyntheticConfig cfg;
  cfg.n_sentences = 50;
  const auto a = gk::make_synthetic_corpus(cfg);
  EXPECT_TRUE(gk::validate_corpus(a).clean());
  EXPECT_EQ(a, gk::make_synthetic_corpus(cfg));
  cfg.seed = 2;
  EXPECT_NE(a, gk::make_synthetic_corpus(cfg));
  EXPECT_TRUE(gk::validate_corpus(gk::make_synthetic_corpus(gk::shifted_domain(cfg))).clean());
}

TEST(ConcatCorpora, PrefixesIds) {
  const auto a = parse(kThreeSentences, "a");
  const auto b = parse(kOneSentence, "b");
  const auto c = gk::concat_corpora({a, b}, "ab", true);
  EXPECT_EQ(c.sentences.size(), 4u);
  EXPECT_TRUE(gk::validate_corpus(c).clean());
}
