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

#include "gazekit/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "gazekit/error.hpp"
#include "gazekit/manifest.hpp"

namespace gazekit {

namespace {

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

}  // namespace

std::string format_cell(const Stat& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.mean, s.std);
  return buf;
}

std::vector<EvaluationReport> load_reports(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) throw UsageError("report: at least one run directory is required");
  std::vector<EvaluationReport> out;
  for (const auto& dir : run_dirs) {
    bool found = false;
    for (auto file : kReportFiles) {
      const auto path = dir / file;
      if (!std::filesystem::exists(path)) continue;
      found = true;
      try {
        out.push_back(EvaluationReport::from_json(read_text(path)));
      } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
      }
    }
    if (!found) throw UsageError("report: " + dir.string() + " holds no evaluation report");
  }
  return out;
}

SummaryTable summarize(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw UsageError("report: nothing to summarize");
  SummaryTable t;
  const auto& order = reports.front().feature_order;
  for (const auto& r : reports) {
    if (r.feature_order != order) {
      throw DataError("report: incompatible feature orders between " + reports.front().model + "/" +
                      reports.front().dataset + " and " + r.model + "/" + r.dataset);
    }
    if (std::find(t.models.begin(), t.models.end(), r.model) == t.models.end()) t.models.push_back(r.model);
    if (std::find(t.datasets.begin(), t.datasets.end(), r.dataset) == t.datasets.end()) t.datasets.push_back(r.dataset);
    if (!t.cells.emplace(std::pair{r.model, r.dataset}, r.overall).second) {
      throw UsageError("report: duplicate result for model " + r.model + " on " + r.dataset);
    }
  }
  return t;
}

std::string SummaryTable::to_text() const {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"model"});
  for (const auto& d : datasets) grid.back().push_back(d);
  for (const auto& m : models) {
    std::vector<std::string> row{m};
    for (const auto& d : datasets) {
      const auto it = cells.find({m, d});
      row.push_back(it == cells.end() ? "" : format_cell(it->second));
    }
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(datasets.size() + 1, 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      line.append(width[c] - row[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  }
  return os.str();
}

std::string SummaryTable::to_csv() const {
  std::ostringstream os;
  os << "model";
  for (const auto& d : datasets) os << ',' << d;
  os << '\n';
  for (const auto& m : models) {
    os << m;
    for (const auto& d : datasets) {
      const auto it = cells.find({m, d});
      os << ',' << (it == cells.end() ? "" : format_cell(it->second));
    }
    os << '\n';
  }
  return os.str();
}

std::string per_feature_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "feature,mean,std\n";
  for (const auto& name : r.feature_order) {
    const auto f = parse_feature(name);
    if (!f) throw DataError("report: unknown feature '" + name + "'");
    const auto& s = r.per_feature[static_cast<std::size_t>(*f)];
    os << name << ',' << s.mean << ',' << s.std << '\n';
  }
  return os.str();
}

std::vector<std::string> write_report(const std::vector<EvaluationReport>& reports, const std::filesystem::path& out) {
  const SummaryTable t = summarize(reports);
  std::vector<std::string> written = {"summary.txt", "summary.csv"};
  write_text(out / "summary.txt", t.to_text());
  write_text(out / "summary.csv", t.to_csv());
  for (const auto& r : reports) {
    const std::string rel = "per_feature/" + safe_name(r.model) + "__" + safe_name(r.dataset) + ".csv";
    write_text(out / rel, per_feature_csv(r));
    written.push_back(rel);
  }
  return written;
}

}  // namespace gazekit
