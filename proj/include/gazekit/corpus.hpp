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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gazekit {

struct Token {
  std::string surface;
  int index = 0;
  int char_length = 0;  ///< code points in surface

  static Token make(std::string surface, int index);
  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::string sentence_id;
  std::string document_id;
  std::string language;
  std::vector<Token> tokens;

  std::vector<std::string> surfaces() const;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// One fixation already mapped to a word of its sentence.
struct FixationEvent {
  int token_index = 0;
  double duration_ms = 0.0;
  int order = 0;
  friend bool operator==(const FixationEvent&, const FixationEvent&) = default;
};

/// Chronological fixations of one subject on one sentence. May be empty.
struct SubjectTrial {
  std::string subject_id;
  std::string sentence_id;
  std::vector<FixationEvent> fixations;
  friend bool operator==(const SubjectTrial&, const SubjectTrial&) = default;
};

struct Corpus {
  std::string name;
  std::string language;
  std::vector<Sentence> sentences;
  std::vector<SubjectTrial> trials;
  std::set<std::string> subject_ids;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Language codes with syllable rules and readability coefficients.
/// "mul" marks a corpus concatenating several languages.
bool is_supported_language(std::string_view code);

struct Violation {
  std::string entity;  ///< e.g. "sentence s3" or "trial (p1, s3)"
  std::string rule;    ///< short rule identifier, e.g. "duplicate-trial"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
};

ValidationReport validate_corpus(const Corpus& c);

struct CorpusStats {
  std::size_t n_subjects = 0;
  std::size_t n_sentences = 0;
  std::size_t n_tokens = 0;
  std::size_t n_types = 0;
  double sent_length_mean = 0.0;
  int sent_length_min = 0;
  int sent_length_max = 0;
  double word_length_mean = 0.0;
  int word_length_min = 0;
  int word_length_max = 0;
};

/// Descriptive statistics. Types are counted case-sensitively on surfaces.
CorpusStats corpus_stats(const Corpus& c);

// ---------------------------------------------------------------------------
// Interchange format
// ---------------------------------------------------------------------------

/// Parses an input stream in the given adapter format without validating
/// cross-record invariants. Throws DataError naming line and field on
/// malformed records.
Corpus parse_corpus(std::istream& in, std::string_view format_tag, std::string name);
Corpus parse_corpus_file(const std::filesystem::path& path, std::string_view format_tag);

/// parse_corpus_file followed by validation; throws DataError on the first
/// violation, naming the offending entity.
Corpus load_corpus(const std::filesystem::path& path, std::string_view format_tag = "unified-jsonl");

void write_unified(const Corpus& c, std::ostream& out);
void write_unified_file(const Corpus& c, const std::filesystem::path& path);

using CorpusAdapter = std::function<Corpus(std::istream&, std::string name)>;

/// Registers an adapter under a tag. "unified-jsonl" is always present.
void register_adapter(std::string tag, CorpusAdapter adapter);
std::vector<std::string> registered_adapters();

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitRatios {
  double train = 0.9;
  double val = 0.05;
  double test = 0.05;
};

struct CorpusSplits {
  Corpus train;
  Corpus val;
  Corpus test;
};

/// Seeded sentence-level partition. val and test sizes are the rounded
/// ratios; train receives the remainder.
CorpusSplits split_dataset(const Corpus& c, SplitRatios ratios, std::uint64_t seed);

/// Corpus restricted to the given sentences (in the given order), carrying
/// every trial on them. The subject set is preserved.
Corpus subset_corpus(const Corpus& c, const std::vector<std::size_t>& sentence_indices,
                     std::string name_suffix = {});

/// Concatenates corpora; sentence and subject ids are prefixed with the
/// source corpus name when prefix_ids is set.
Corpus concat_corpora(const std::vector<Corpus>& parts, std::string name, bool prefix_ids);

}  // namespace gazekit
