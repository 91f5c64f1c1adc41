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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazekit/evaluation.hpp"

namespace gazekit {

/// "mean (std)" with two decimals, e.g. "93.74 (0.05)".
std::string format_cell(const Stat& s);

/// Report files a run directory may hold, read in this order.
inline constexpr std::array<std::string_view, 3> kReportFiles = {"report.json", "baseline.json", "pretrained.json"};

/// Every report found in the directories. A directory without any is a
/// UsageError.
std::vector<EvaluationReport> load_reports(const std::vector<std::filesystem::path>& run_dirs);

/// Accuracy table: rows are models, columns datasets, in first-seen order.
struct SummaryTable {
  std::vector<std::string> models;
  std::vector<std::string> datasets;
  std::map<std::pair<std::string, std::string>, Stat> cells;

  /// Aligned plain-text table; missing pairs are blank.
  std::string to_text() const;
  std::string to_csv() const;
};

/// Throws DataError when the reports disagree on feature order and
/// UsageError on a repeated (model, dataset) pair.
SummaryTable summarize(const std::vector<EvaluationReport>& reports);

/// feature,mean,std in the report's feature order.
std::string per_feature_csv(const EvaluationReport& r);

/// Writes summary.txt, summary.csv and per_feature/<model>__<dataset>.csv.
/// Returns the written paths relative to `out`.
std::vector<std::string> write_report(const std::vector<EvaluationReport>& reports, const std::filesystem::path& out);

}  // namespace gazekit
