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

#include "gazekit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "gazekit/error.hpp"
#include "gazekit/utf8.hpp"

namespace gazekit {

using nlohmann::json;

Token Token::make(std::string surface, int index) {
  Token t;
  t.char_length = static_cast<int>(utf8::length(surface));
  t.surface = std::move(surface);
  t.index = index;
  return t;
}

std::vector<std::string> Sentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

bool is_supported_language(std::string_view code) {
  return code == "en" || code == "nl" || code == "de" || code == "ru" || code == "mul";
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate_corpus(const Corpus& c) {
  ValidationReport report;
  auto add = [&](std::string entity, std::string rule, std::string message) {
    report.violations.push_back({std::move(entity), std::move(rule), std::move(message)});
  };

  if (!is_supported_language(c.language)) {
    add("corpus " + c.name, "unsupported-language", "language '" + c.language + "' is not supported");
  }

  std::map<std::string, const Sentence*> by_id;
  for (const auto& s : c.sentences) {
    const std::string entity = "sentence " + s.sentence_id;
    if (!by_id.emplace(s.sentence_id, &s).second) {
      add(entity, "duplicate-sentence", "sentence_id appears more than once");
    }
    if (s.tokens.empty()) add(entity, "empty-sentence", "sentence has no tokens");
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      if (t.surface.empty()) {
        add(entity, "empty-token", "token " + std::to_string(i) + " has an empty surface");
      }
      if (t.index != static_cast<int>(i)) {
        add(entity, "token-index", "token at position " + std::to_string(i) + " has index " +
                                       std::to_string(t.index));
      }
      if (t.char_length != static_cast<int>(utf8::length(t.surface))) {
        add(entity, "char-length", "token " + std::to_string(i) + " char_length does not match surface");
      }
    }
  }

  std::set<std::pair<std::string, std::string>> seen_trials;
  for (const auto& tr : c.trials) {
    const std::string entity = "trial (" + tr.subject_id + ", " + tr.sentence_id + ")";
    if (!seen_trials.emplace(tr.subject_id, tr.sentence_id).second) {
      add(entity, "duplicate-trial", "(subject, sentence) pair appears more than once");
    }
    if (!c.subject_ids.contains(tr.subject_id)) {
      add(entity, "unknown-subject", "subject_id not listed in corpus subjects");
    }
    const auto it = by_id.find(tr.sentence_id);
    if (it == by_id.end()) {
      add(entity, "unknown-sentence", "sentence_id does not exist");
    }
    const int n_tokens = it == by_id.end() ? -1 : static_cast<int>(it->second->tokens.size());
    for (std::size_t k = 0; k < tr.fixations.size(); ++k) {
      const auto& f = tr.fixations[k];
      if (!(f.duration_ms > 0.0) || !std::isfinite(f.duration_ms)) {
        add(entity, "fixation-duration", "fixation " + std::to_string(k) + " has non-positive duration");
      }
      if (f.token_index < 0 || (n_tokens >= 0 && f.token_index >= n_tokens)) {
        add(entity, "fixation-token-index",
            "fixation " + std::to_string(k) + " token_index " + std::to_string(f.token_index) +
                " out of range");
      }
      if (f.order != static_cast<int>(k)) {
        add(entity, "fixation-order", "fixation at position " + std::to_string(k) + " has order " +
                                          std::to_string(f.order));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

CorpusStats corpus_stats(const Corpus& c) {
  if (c.sentences.empty()) throw DataError("corpus_stats: corpus '" + c.name + "' is empty");
  CorpusStats st;
  st.n_subjects = c.subject_ids.size();
  st.n_sentences = c.sentences.size();
  st.sent_length_min = std::numeric_limits<int>::max();
  st.word_length_min = std::numeric_limits<int>::max();
  std::unordered_set<std::string> types;
  double word_length_sum = 0.0;
  for (const auto& s : c.sentences) {
    const int len = static_cast<int>(s.tokens.size());
    st.n_tokens += s.tokens.size();
    st.sent_length_min = std::min(st.sent_length_min, len);
    st.sent_length_max = std::max(st.sent_length_max, len);
    for (const auto& t : s.tokens) {
      types.insert(t.surface);
      word_length_sum += t.char_length;
      st.word_length_min = std::min(st.word_length_min, t.char_length);
      st.word_length_max = std::max(st.word_length_max, t.char_length);
    }
  }
  if (st.n_tokens == 0) throw DataError("corpus_stats: corpus '" + c.name + "' has no tokens");
  st.n_types = types.size();
  st.sent_length_mean = static_cast<double>(st.n_tokens) / static_cast<double>(st.n_sentences);
  st.word_length_mean = word_length_sum / static_cast<double>(st.n_tokens);
  return st;
}

// ---------------------------------------------------------------------------
// Unified JSONL
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void malformed(std::size_t line, std::string_view field, std::string_view what) {
  std::ostringstream os;
  os << "line " << line << ": field '" << field << "': " << what;
  throw DataError(os.str());
}

const json& require(const json& obj, const char* field, std::size_t line, json::value_t type,
                    std::string_view path = {}) {
  const std::string full = path.empty() ? std::string(field) : std::string(path) + "." + field;
  if (!obj.is_object() || !obj.contains(field)) malformed(line, full, "missing");
  const json& v = obj.at(field);
  const bool ok = type == json::value_t::number_float ? v.is_number()
                  : type == json::value_t::number_integer ? v.is_number_integer()
                                                          : v.type() == type;
  if (!ok) malformed(line, full, "wrong type");
  return v;
}

Corpus parse_unified(std::istream& in, std::string name) {
  Corpus c;
  c.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> languages;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      malformed(lineno, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) malformed(lineno, "<record>", "record is not an object");

    Sentence s;
    s.document_id = require(rec, "document_id", lineno, json::value_t::string).get<std::string>();
    s.sentence_id = require(rec, "sentence_id", lineno, json::value_t::string).get<std::string>();
    s.language = require(rec, "language", lineno, json::value_t::string).get<std::string>();
    languages.insert(s.language);
    const auto& toks = require(rec, "tokens", lineno, json::value_t::array);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!toks[i].is_string()) malformed(lineno, "tokens[" + std::to_string(i) + "]", "not a string");
      s.tokens.push_back(Token::make(toks[i].get<std::string>(), static_cast<int>(i)));
    }
    const auto& trials = require(rec, "trials", lineno, json::value_t::array);
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const std::string tpath = "trials[" + std::to_string(t) + "]";
      SubjectTrial tr;
      tr.sentence_id = s.sentence_id;
      tr.subject_id = require(trials[t], "subject_id", lineno, json::value_t::string, tpath).get<std::string>();
      const auto& fx = require(trials[t], "fixations", lineno, json::value_t::array, tpath);
      for (std::size_t k = 0; k < fx.size(); ++k) {
        const std::string fpath = tpath + ".fixations[" + std::to_string(k) + "]";
        FixationEvent f;
        f.token_index = require(fx[k], "token_index", lineno, json::value_t::number_integer, fpath).get<int>();
        f.duration_ms = require(fx[k], "duration_ms", lineno, json::value_t::number_float, fpath).get<double>();
        f.order = require(fx[k], "order", lineno, json::value_t::number_integer, fpath).get<int>();
        tr.fixations.push_back(f);
      }
      std::stable_sort(tr.fixations.begin(), tr.fixations.end(),
                       [](const FixationEvent& a, const FixationEvent& b) { return a.order < b.order; });
      c.subject_ids.insert(tr.subject_id);
      c.trials.push_back(std::move(tr));
    }
    c.sentences.push_back(std::move(s));
  }
  if (languages.size() == 1) {
    c.language = *languages.begin();
  } else if (languages.size() > 1) {
    c.language = "mul";
  }
  return c;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, CorpusAdapter>& registry() {
  static std::map<std::string, CorpusAdapter> r{{"unified-jsonl", &parse_unified}};
  return r;
}

}  // namespace

void register_adapter(std::string tag, CorpusAdapter adapter) {
  std::lock_guard lock(registry_mutex());
  registry()[std::move(tag)] = std::move(adapter);
}

std::vector<std::string> registered_adapters() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

Corpus parse_corpus(std::istream& in, std::string_view format_tag, std::string name) {
  CorpusAdapter adapter;
  {
    std::lock_guard lock(registry_mutex());
    const auto it = registry().find(std::string(format_tag));
    if (it == registry().end()) throw UsageError("unknown corpus adapter '" + std::string(format_tag) + "'");
    adapter = it->second;
  }
  return adapter(in, std::move(name));
}

Corpus parse_corpus_file(const std::filesystem::path& path, std::string_view format_tag) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open corpus file " + path.string());
  return parse_corpus(in, format_tag, path.stem().string());
}

Corpus load_corpus(const std::filesystem::path& path, std::string_view format_tag) {
  Corpus c = parse_corpus_file(path, format_tag);
  const auto report = validate_corpus(c);
  if (!report.clean()) {
    const auto& v = report.violations.front();
    throw DataError(path.string() + ": " + v.entity + ": " + v.rule + ": " + v.message);
  }
  return c;
}

void write_unified(const Corpus& c, std::ostream& out) {
  std::map<std::string, std::vector<const SubjectTrial*>> trials_by_sentence;
  for (const auto& tr : c.trials) trials_by_sentence[tr.sentence_id].push_back(&tr);
  for (const auto& s : c.sentences) {
    json rec;
    rec["document_id"] = s.document_id;
    rec["sentence_id"] = s.sentence_id;
    rec["language"] = s.language.empty() ? c.language : s.language;
    rec["tokens"] = s.surfaces();
    json trials = json::array();
    for (const auto* tr : trials_by_sentence[s.sentence_id]) {
      json fx = json::array();
      for (const auto& f : tr->fixations) {
        fx.push_back({{"token_index", f.token_index}, {"duration_ms", f.duration_ms}, {"order", f.order}});
      }
      trials.push_back({{"subject_id", tr->subject_id}, {"fixations", std::move(fx)}});
    }
    rec["trials"] = std::move(trials);
    out << rec.dump() << '\n';
  }
}

void write_unified_file(const Corpus& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  write_unified(c, out);
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

Corpus subset_corpus(const Corpus& c, const std::vector<std::size_t>& sentence_indices,
                     std::string name_suffix) {
  Corpus out;
  out.name = c.name + name_suffix;
  out.language = c.language;
  out.subject_ids = c.subject_ids;
  std::map<std::string, std::vector<const SubjectTrial*>> trials_by_sentence;
  for (const auto& tr : c.trials) trials_by_sentence[tr.sentence_id].push_back(&tr);
  for (std::size_t idx : sentence_indices) {
    const auto& s = c.sentences.at(idx);
    out.sentences.push_back(s);
    for (const auto* tr : trials_by_sentence[s.sentence_id]) out.trials.push_back(*tr);
  }
  return out;
}

CorpusSplits split_dataset(const Corpus& c, SplitRatios ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0) || std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("split ratios must be positive and sum to 1");
  }
  const std::size_t n = c.sentences.size();
  if (n < 3) throw DataError("split_dataset: need at least 3 sentences, corpus has " + std::to_string(n));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(ratios.test * static_cast<double>(n)));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw DataError("split_dataset: too few sentences (" + std::to_string(n) + ") for the requested ratios");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = n - n_val - n_test;
  std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> va(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                              order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  // Keep corpus order inside each split.
  std::sort(tr.begin(), tr.end());
  std::sort(va.begin(), va.end());
  std::sort(te.begin(), te.end());
  return {subset_corpus(c, tr, ":train"), subset_corpus(c, va, ":val"), subset_corpus(c, te, ":test")};
}

Corpus concat_corpora(const std::vector<Corpus>& parts, std::string name, bool prefix_ids) {
  Corpus out;
  out.name = std::move(name);
  std::set<std::string> languages;
  for (const auto& p : parts) {
    const std::string prefix = prefix_ids ? p.name + "/" : std::string{};
    languages.insert(p.language);
    for (auto s : p.sentences) {
      s.sentence_id = prefix + s.sentence_id;
      if (s.language.empty()) s.language = p.language;
      out.sentences.push_back(std::move(s));
    }
    for (auto tr : p.trials) {
      tr.sentence_id = prefix + tr.sentence_id;
      tr.subject_id = prefix + tr.subject_id;
      out.trials.push_back(std::move(tr));
    }
    for (const auto& sid : p.subject_ids) out.subject_ids.insert(prefix + sid);
  }
  out.language = languages.size() == 1 ? *languages.begin() : "mul";
  return out;
}

}  // namespace gazekit
