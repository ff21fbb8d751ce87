// Copyright 2026 The treval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TREVAL_REPORTING_HPP_
#define TREVAL_REPORTING_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "treval/dataset.hpp"
#include "treval/drift_analysis.hpp"
#include "treval/stats.hpp"
#include "treval/thresholds.hpp"

namespace treval {

struct LevelStats {
  int count = 0;
  ExactMean mean;
  int min = 0;
  int max = 0;

  void add(int score);
  friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

struct GroupDriftRow {
  std::string group_id;
  TopicType topic = TopicType::from_index(1);
  int drift = 0;
  std::map<Language, int> scores;
};

struct ReportOptions {
  std::string mode_label = "template-answer mode";
  std::string period;  // free text, e.g. "2026-04"; omitted when empty
  std::size_t top_n = 5;
};

struct PilotReport {
  std::string dataset_fingerprint;
  std::string mode_label;
  std::string period;
  std::size_t top_n = 5;
  int tau_s = 20;
  int tau_d = 3;

  int total_questions = 0;
  int group_count = 0;  // complete trilingual groups
  ExactMean overall;
  int min_score = 0;
  std::map<RiskLevel, int> risk_histogram;
  int below_tau_s_count = 0;
  std::map<Language, LevelStats> per_language;
  std::map<Intensity, LevelStats> per_intensity;
  DriftSummary drift;
  std::vector<GroupDriftRow> top_drift_groups;  // drift desc, group total desc, group_id

  std::array<int, 4> d7_histogram{};  // per-sample cards only
  int per_sample_cards = 0;
  int group_joint_cards = 0;
  int low_score_excellent = 0;  // below tau_s yet labelled excellent
  int failure_candidates = 0;
  int regression_units = 0;  // distinct (topic, intensity) pairs among candidates
  std::vector<std::string> warnings;
};

struct StaticReport {
  std::string dataset_fingerprint;
  int tau_s = 20;
  int total_questions = 0;
  ExactMean overall;
  int min_score = 0;
  std::map<RiskLevel, int> risk_histogram;
  int below_tau_s_count = 0;

  friend bool operator==(const StaticReport&, const StaticReport&) = default;
};

struct ComparisonRow {
  std::string dimension;
  std::string static_value;
  std::string runtime_value;
};

struct ComparisonReport {
  std::string dataset_fingerprint;
  std::vector<ComparisonRow> rows;
};

// Throws Errc::empty_dataset.
PilotReport pilot_summary(const Dataset& dataset, const Thresholds& thresholds,
                          const ReportOptions& options = {});
std::map<Language, LevelStats> language_stats(const Dataset& dataset);
std::map<Intensity, LevelStats> intensity_stats(const Dataset& dataset);

// Sees only samples, scores and risk labels. Throws Errc::empty_dataset.
StaticReport static_baseline_report(const Dataset& dataset, const Thresholds& thresholds);
// The static view recomputed from a pilot report.
StaticReport project_static(const PilotReport& pilot);

// Throws Errc::dataset_mismatch when the fingerprints differ.
ComparisonReport comparison_report(const PilotReport& pilot, const StaticReport& baseline);

// Snapshot text layout (section headers, one line per language/intensity).
std::string render_text(const PilotReport& report);
std::string render_text(const StaticReport& report);
std::string render_text(const ComparisonReport& report);

// ---------------------------------------------------------------------------
// CSV exchange

inline constexpr std::string_view kResultSchemaVersion = "1";
const std::vector<std::string>& result_columns();

enum class ExportScope { all, batch, batch_language, batch_language_topic };
std::string_view to_string(ExportScope scope);
ExportScope parse_export_scope(std::string_view text);

struct CsvFile {
  std::string name;
  std::string content;
};

// One file per partition, in first-appearance order. Without `include_text`
// the question text column carries the question_id.
std::vector<CsvFile> export_csv(const Dataset& dataset, ExportScope scope,
                                bool include_text = false);

struct RowDiagnostic {
  std::string file;
  std::size_t row = 0;  // 1-based data row
  std::string message;
};

struct CsvImportResult {
  Dataset dataset;
  std::vector<RowDiagnostic> rejected;
};

// Merges files into one dataset keyed by run_id. Throws Errc::header_mismatch
// or Errc::duplicate_run; invalid rows (for example total != sum of dims) are
// rejected with a diagnostic.
CsvImportResult import_csv(std::span<const CsvFile> files);

void write_csv_files(const std::filesystem::path& dir, std::span<const CsvFile> files);
std::vector<CsvFile> read_csv_files(const std::filesystem::path& dir);

}  // namespace treval

#endif  // TREVAL_REPORTING_HPP_
