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

#include "gazekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "gazekit/error.hpp"
#include "gazekit/evaluation.hpp"
#include "gazekit/utf8.hpp"

namespace gazekit {

namespace {

bool in_set(char32_t c, std::u32string_view set) { return set.find(c) != std::u32string_view::npos; }

int vowel_groups(const std::u32string& w, std::u32string_view vowels) {
  int groups = 0;
  bool prev = false;
  for (char32_t c : w) {
    const bool v = in_set(c, vowels);
    if (v && !prev) ++groups;
    prev = v;
  }
  return groups;
}

Feature require_feature(std::string_view name) {
  const auto f = parse_feature(name);
  if (!f) throw UsageError("unknown feature '" + std::string(name) + "'");
  return *f;
}

BinnedCurve finish(std::string series, const std::map<int, std::pair<double, std::size_t>>& acc) {
  BinnedCurve c;
  c.series = std::move(series);
  for (const auto& [bin, sc] : acc) {
    if (sc.second > 0) c.points.push_back({bin, sc.first / static_cast<double>(sc.second), sc.second});
  }
  return c;
}

}  // namespace

int count_syllables(std::string_view word, std::string_view language) {
  const std::u32string w = utf8::to_lower(utf8::decode(word));
  int n = 0;
  if (language == "en") {
    constexpr std::u32string_view vowels = U"aeiouy";
    n = vowel_groups(w, vowels);
    const std::size_t len = w.size();
    if (n > 1 && len >= 2 && w[len - 1] == U'e' && !in_set(w[len - 2], vowels)) {
      const bool consonant_le = len >= 3 && w[len - 2] == U'l' && !in_set(w[len - 3], vowels);
      if (!consonant_le) --n;
    }
  } else if (language == "nl") {
    n = vowel_groups(w, U"aeiouyàáâäèéêëìíîïòóôöùúûü");
  } else if (language == "de") {
    n = vowel_groups(w, U"aeiouyäöü");
  } else if (language == "ru") {
    constexpr std::u32string_view vowels = U"аеёиоуыэюя";
    n = static_cast<int>(std::count_if(w.begin(), w.end(), [&](char32_t c) { return in_set(c, vowels); }));
  } else {
    throw UsageError("count_syllables: unsupported language '" + std::string(language) + "'");
  }
  return std::max(1, n);
}

FleschCoefficients flesch_coefficients(std::string_view language) {
  if (language == "en") return {206.835, 1.015, 84.6, "Flesch (1948)"};
  if (language == "nl") return {206.835, 0.93, 77.0, "Douma (1960)"};
  if (language == "de") return {180.0, 1.0, 58.5, "Amstad (1978)"};
  if (language == "ru") return {206.835, 1.3, 60.1, "Oborneva (2006)"};
  throw UsageError("flesch: unsupported language '" + std::string(language) + "'");
}

ReadabilityScore flesch_from_components(double asl, double asw, std::string_view language) {
  const auto k = flesch_coefficients(language);
  ReadabilityScore r;
  r.language = std::string(language);
  r.avg_sentence_length = asl;
  r.avg_syllables_per_word = asw;
  r.raw = k.base - k.asl * asl - k.asw * asw;
  r.value = std::clamp(r.raw, 0.0, 100.0);
  return r;
}

ReadabilityScore flesch(const std::vector<std::vector<std::string>>& sentences, std::string_view language) {
  flesch_coefficients(language);
  std::size_t words = 0;
  std::size_t syllables = 0;
  for (const auto& s : sentences) {
    words += s.size();
    for (const auto& w : s) syllables += static_cast<std::size_t>(count_syllables(w, language));
  }
  if (sentences.empty() || words == 0) throw DataError("flesch: empty input");
  return flesch_from_components(static_cast<double>(words) / static_cast<double>(sentences.size()),
                                static_cast<double>(syllables) / static_cast<double>(words), language);
}

std::string curves_to_csv(const std::vector<BinnedCurve>& curves) {
  std::ostringstream os;
  os.precision(17);
  os << "bin,series,mean,count\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) os << p.bin << ',' << c.series << ',' << p.mean << ',' << p.count << '\n';
  }
  return os.str();
}

std::vector<BinnedCurve> word_length_curve(const FeatureDataset& d, std::string_view feature,
                                           const std::vector<SentencePrediction>* predicted,
                                           const std::vector<SentencePrediction>* pretrained) {
  const int f = static_cast<int>(require_feature(feature));
  std::map<int, std::pair<double, std::size_t>> truth, pred, pre;
  auto bin_of = [](const std::string& w) {
    return std::min<int>(static_cast<int>(utf8::length(w)), kWordLengthOverflow);
  };
  auto check = [&](const std::vector<SentencePrediction>* p) {
    if (p && p->size() != d.sentences.size()) throw UsageError("word_length_curve: predictions not aligned");
  };
  check(predicted);
  check(pretrained);
  for (std::size_t i = 0; i < d.sentences.size(); ++i) {
    const auto& s = d.sentences[i];
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const auto r = static_cast<Eigen::Index>(t);
      if (!s.mask(r)) continue;
      const int bin = bin_of(s.tokens[t]);
      auto& a = truth[bin];
      a.first += s.values(r, f);
      ++a.second;
      for (auto [src, acc] : {std::pair{predicted, &pred}, std::pair{pretrained, &pre}}) {
        if (!src) continue;
        const auto& p = (*src)[i];
        if (p.values.rows() != s.values.rows()) throw UsageError("word_length_curve: predictions not aligned");
        if (!p.mask(r)) continue;
        auto& b = (*acc)[bin];
        b.first += p.values(r, f);
        ++b.second;
      }
    }
  }
  std::vector<BinnedCurve> out{finish("true", truth)};
  if (predicted) out.push_back(finish("predicted", pred));
  if (pretrained) out.push_back(finish("pretrained", pre));
  return out;
}

BinnedCurve readability_accuracy_curve(const FeatureDataset& gold, const std::vector<SentencePrediction>& predicted,
                                       std::string_view feature, std::string_view language, int bin_width,
                                       std::string series) {
  const int f = static_cast<int>(require_feature(feature));
  if (bin_width < 1 || bin_width > 100) throw UsageError("readability bin width must be in [1, 100]");
  if (predicted.size() != gold.sentences.size()) throw UsageError("readability curve: predictions not aligned");
  std::map<int, std::pair<double, std::size_t>> acc;
  const int top = ((100 - 1) / bin_width) * bin_width;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const auto& s = gold.sentences[i];
    const auto& p = predicted[i];
    if (p.values.rows() != s.values.rows()) throw UsageError("readability curve: predictions not aligned");
    double err = 0.0;
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < s.values.rows(); ++r) {
      if (!s.mask(r) || !p.mask(r)) continue;
      err += std::abs(p.values(r, f) - s.values(r, f));
      ++n;
    }
    if (n == 0) continue;
    const std::string lang = language.empty() ? s.language : std::string(language);
    const double score = flesch({s.tokens}, lang).value;
    const int bin = std::min(top, static_cast<int>(std::floor(score / bin_width)) * bin_width);
    auto& a = acc[bin];
    a.first += accuracy_from_mae(err / static_cast<double>(n));
    ++a.second;
  }
  return finish(std::move(series), acc);
}

TagTable read_tags_tsv(std::istream& in) {
  std::map<std::string, std::map<int, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string sid, idx, tag;
    if (!std::getline(ls, sid, '\t') || !std::getline(ls, idx, '\t') || !std::getline(ls, tag, '\t')) {
      throw DataError("tags TSV line " + std::to_string(lineno) + ": expected 3 columns");
    }
    if (lineno == 1 && idx == "token_index") continue;
    int i = 0;
    try {
      std::size_t used = 0;
      i = std::stoi(idx, &used);
      if (used != idx.size() || i < 0) throw std::invalid_argument(idx);
    } catch (const std::exception&) {
      throw DataError("tags TSV line " + std::to_string(lineno) + ": bad token_index '" + idx + "'");
    }
    if (!rows[sid].emplace(i, tag).second) {
      throw DataError("tags TSV line " + std::to_string(lineno) + ": duplicate token " + sid + "/" + idx);
    }
  }
  TagTable out;
  for (auto& [sid, m] : rows) {
    std::vector<std::string> tags;
    int expect = 0;
    for (auto& [i, tag] : m) {
      if (i != expect++) throw DataError("tags TSV: sentence " + sid + " has a gap at token " + std::to_string(i - 1));
      tags.push_back(std::move(tag));
    }
    out.emplace(sid, std::move(tags));
  }
  return out;
}

std::vector<PosGroup> pos_aggregation(const FeatureDataset& d, const TagTable& tags,
                                      const std::vector<SentencePrediction>* predicted) {
  const int mfd = static_cast<int>(Feature::MFD);
  if (predicted && predicted->size() != d.sentences.size()) throw UsageError("pos_aggregation: predictions not aligned");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    double err = 0.0;
    std::size_t n_err = 0;
  };
  std::map<std::string, Acc> groups;
  for (std::size_t i = 0; i < d.sentences.size(); ++i) {
    const auto& s = d.sentences[i];
    const auto it = tags.find(s.sentence_id);
    if (it == tags.end() || it->second.size() != s.tokens.size()) {
      throw DataError("pos_aggregation: tags for sentence " + s.sentence_id + " do not match its " +
                      std::to_string(s.tokens.size()) + " tokens");
    }
    for (Eigen::Index r = 0; r < s.values.rows(); ++r) {
      if (!s.mask(r)) continue;
      auto& g = groups[it->second[static_cast<std::size_t>(r)]];
      g.sum += s.values(r, mfd);
      ++g.n;
      if (predicted && (*predicted)[i].mask(r)) {
        g.err += std::abs((*predicted)[i].values(r, mfd) - s.values(r, mfd));
        ++g.n_err;
      }
    }
  }
  std::vector<PosGroup> out;
  for (const auto& [tag, g] : groups) {
    if (g.n == 0) continue;
    PosGroup pg{tag, g.sum / static_cast<double>(g.n), g.n, std::nullopt};
    if (predicted && g.n_err > 0) pg.accuracy = 100.0 - g.err / static_cast<double>(g.n_err);
    out.push_back(std::move(pg));
  }
  return out;
}

}  // namespace gazekit
