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

#include "treval/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "treval/csv.hpp"
#include "treval/json_io.hpp"

namespace treval {

void LevelStats::add(int score) {
  if (count == 0) {
    min = max = score;
  } else {
    min = std::min(min, score);
    max = std::max(max, score);
  }
  ++count;
  mean.add(score);
}

namespace {

// Statistics read the effective total and risk, so human overrides flow
// through every view identically.
std::vector<const Sample*> judged(const Dataset& dataset) {
  std::vector<const Sample*> out;
  for (const Sample& s : dataset.samples) {
    if (s.run_status == RunStatus::ok) out.push_back(&s);
  }
  return out;
}

std::string pad(std::string_view text, std::size_t width) {
  std::string s(text);
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string risk_line(const std::map<RiskLevel, int>& hist) {
  std::string out;
  for (RiskLevel level : kRiskLevels) {
    auto it = hist.find(level);
    if (it == hist.end() || it->second == 0) continue;
    if (!out.empty()) out += ", ";
    out += std::string(to_string(level)) + " = " + std::to_string(it->second);
  }
  return out.empty() ? "none" : out;
}

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

std::map<Language, LevelStats> language_stats(const Dataset& dataset) {
  std::map<Language, LevelStats> out;
  for (const Sample* s : judged(dataset)) out[s->question.language].add(s->card.effective_total());
  return out;
}

std::map<Intensity, LevelStats> intensity_stats(const Dataset& dataset) {
  std::map<Intensity, LevelStats> out;
  for (const Sample* s : judged(dataset)) {
    out[s->question.intensity].add(s->card.effective_total());
  }
  return out;
}

StaticReport static_baseline_report(const Dataset& dataset, const Thresholds& thresholds) {
  auto samples = judged(dataset);
  if (samples.empty()) throw Error(Errc::empty_dataset, "dataset has no judged samples");
  StaticReport r;
  r.dataset_fingerprint = dataset.fingerprint();
  r.tau_s = thresholds.tau_s;
  r.min_score = kMaxTotal;
  for (const Sample* s : samples) {
    int total = s->card.effective_total();
    ++r.total_questions;
    r.overall.add(total);
    r.min_score = std::min(r.min_score, total);
    ++r.risk_histogram[s->card.effective_risk()];
    if (total < thresholds.tau_s) ++r.below_tau_s_count;
  }
  return r;
}

PilotReport pilot_summary(const Dataset& dataset, const Thresholds& thresholds,
                          const ReportOptions& options) {
  thresholds.validate();
  StaticReport base = static_baseline_report(dataset, thresholds);

  PilotReport r;
  r.dataset_fingerprint = base.dataset_fingerprint;
  r.mode_label = options.mode_label;
  r.period = options.period;
  r.top_n = options.top_n;
  r.tau_s = thresholds.tau_s;
  r.tau_d = thresholds.tau_d;
  r.total_questions = base.total_questions;
  r.overall = base.overall;
  r.min_score = base.min_score;
  r.risk_histogram = base.risk_histogram;
  r.below_tau_s_count = base.below_tau_s_count;
  r.per_language = language_stats(dataset);
  r.per_intensity = intensity_stats(dataset);

  std::vector<Sample> ok;
  for (const Sample* s : judged(dataset)) ok.push_back(*s);
  std::vector<GroupScores> groups = group_scores(ok, thresholds.drift_source);
  r.drift = drift_summary(groups, thresholds);
  r.group_count = r.drift.complete_groups;

  std::vector<GroupDriftRow> rows;
  std::map<std::string, int> group_total;
  for (const GroupScores& g : groups) {
    if (!g.complete()) continue;
    int drift = score_drift(g);
    if (drift == 0) continue;
    int sum = 0;
    for (const auto& [l, v] : g.per_language) sum += v;
    group_total[g.group_id] = sum;
    rows.push_back({g.group_id, g.topic, drift, g.per_language});
  }
  std::sort(rows.begin(), rows.end(), [&](const GroupDriftRow& a, const GroupDriftRow& b) {
    if (a.drift != b.drift) return a.drift > b.drift;
    int ta = group_total[a.group_id], tb = group_total[b.group_id];
    if (ta != tb) return ta > tb;
    return a.group_id < b.group_id;
  });
  if (rows.size() > r.top_n) rows.resize(r.top_n);
  r.top_drift_groups = std::move(rows);

  for (const Sample& s : ok) {
    if (s.card.d7_mode == D7Mode::per_sample) {
      ++r.per_sample_cards;
      ++r.d7_histogram[static_cast<std::size_t>(s.card.dims[kD7])];
    } else {
      ++r.group_joint_cards;
    }
    if (s.card.effective_total() < thresholds.tau_s &&
        s.card.effective_risk() == RiskLevel::excellent) {
      ++r.low_score_excellent;
    }
  }

  CandidateInputs inputs;
  inputs.samples = ok;
  inputs.groups = groups;
  std::vector<Candidate> candidates = failure_candidates(inputs, thresholds);
  r.failure_candidates = static_cast<int>(candidates.size());
  std::set<std::pair<TopicType, Intensity>> units;
  for (const Candidate& c : candidates) units.emplace(c.ref.topic, c.ref.intensity);
  r.regression_units = static_cast<int>(units.size());

  if (r.per_sample_cards > 0 && r.d7_histogram[3] == r.per_sample_cards &&
      r.drift.nonzero_drift_groups > 0) {
    r.warnings.push_back(format(
        "WARNING: per-sample D7 is saturated while %d of %d groups show non-zero drift; "
        "switch D7 to group-joint judging.",
        r.drift.nonzero_drift_groups, r.group_count));
  }
  if (r.drift.incomplete_groups > 0) {
    r.warnings.push_back(format("WARNING: %d incomplete groups excluded from drift.",
                                r.drift.incomplete_groups));
  }
  return r;
}

StaticReport project_static(const PilotReport& pilot) {
  StaticReport r;
  r.dataset_fingerprint = pilot.dataset_fingerprint;
  r.tau_s = pilot.tau_s;
  r.total_questions = pilot.total_questions;
  r.overall = pilot.overall;
  r.min_score = pilot.min_score;
  r.risk_histogram = pilot.risk_histogram;
  r.below_tau_s_count = pilot.below_tau_s_count;
  return r;
}

ComparisonReport comparison_report(const PilotReport& pilot, const StaticReport& baseline) {
  if (pilot.dataset_fingerprint != baseline.dataset_fingerprint) {
    throw Error(Errc::dataset_mismatch, "reports were built from different datasets");
  }
  ComparisonReport r;
  r.dataset_fingerprint = pilot.dataset_fingerprint;
  r.rows.push_back({"visible samples", std::to_string(baseline.total_questions),
                    std::to_string(pilot.total_questions)});
  r.rows.push_back({"low-score samples", std::to_string(baseline.below_tau_s_count),
                    std::to_string(pilot.below_tau_s_count)});
  r.rows.push_back({"group relations", "0", std::to_string(pilot.group_count)});
  r.rows.push_back({"drift groups", "0",
                    format("%d (%d high)", pilot.drift.nonzero_drift_groups,
                           pilot.drift.high_drift_groups)});
  r.rows.push_back({"regression units", "0", std::to_string(pilot.regression_units)});
  return r;
}

std::string render_text(const PilotReport& r) {
  std::ostringstream o;
  o << "=== Pilot batch (" << r.total_questions << " questions, " << r.mode_label;
  if (!r.period.empty()) o << ", " << r.period;
  o << ") ===\n";
  o << pad("Total questions", 21) << ": " << r.total_questions << "\n";
  o << pad("Trilingual groups", 21) << ": " << r.group_count << "\n";
  o << pad("Overall avg score", 21) << ": " << r.overall.round2() << " / " << kMaxTotal << "\n";
  o << pad("Risk distribution", 21) << ": " << risk_line(r.risk_histogram) << "\n";
  o << pad("score < " + std::to_string(r.tau_s) + " count", 21) << ": " << r.below_tau_s_count
    << "\n";

  o << "\n=== By language ===\n";
  for (Language l : kLanguages) {
    auto it = r.per_language.find(l);
    if (it == r.per_language.end()) continue;
    std::string label = pad(to_string(l), 5) + " (" + std::string(display_name(l)) + ")";
    o << pad(label, 17) << " : avg " << it->second.mean.round2() << ", min " << it->second.min
      << ", max " << it->second.max << "\n";
  }

  o << "\n=== By intensity ===\n";
  for (Intensity i : kIntensities) {
    auto it = r.per_intensity.find(i);
    if (it == r.per_intensity.end()) continue;
    o << pad(to_string(i), 7) << " : avg " << it->second.mean.round2() << ", min "
      << it->second.min << ", max " << it->second.max << "\n";
  }

  const int groups = r.drift.complete_groups;
  o << "\n=== Cross-language score drift ===\n";
  o << pad("Non-zero drift groups", 22) << ": "
    << format("%2d / %d", r.drift.nonzero_drift_groups, groups) << "\n";
  o << pad("Drift >= " + std::to_string(r.tau_d) + " groups", 22) << ": "
    << format("%2d / %d", r.drift.high_drift_groups, groups) << "\n";
  o << pad("Average drift", 22) << ": " << r.drift.average_drift.round2() << "\n";
  o << pad("Max drift", 22) << ": " << r.drift.max_drift << "\n";

  o << "\n=== Top-" << r.top_n << " drift groups ===\n";
  for (const GroupDriftRow& row : r.top_drift_groups) {
    std::string line = pad(row.group_id, 13) + pad(row.topic.public_code(), 4) +
                       pad("drift=" + std::to_string(row.drift), 10);
    std::vector<std::pair<std::string, int>> scores;
    for (const auto& [l, v] : row.scores) scores.emplace_back(std::string(to_string(l)), v);
    std::sort(scores.begin(), scores.end());
    for (std::size_t k = 0; k < scores.size(); ++k) {
      std::string cell = scores[k].first + "=" + std::to_string(scores[k].second);
      line += k + 1 < scores.size() ? pad(cell, scores[k].first.size() + 5) : cell;
    }
    o << line << "\n";
  }

  const bool saturated = r.per_sample_cards > 0 && r.d7_histogram[3] == r.per_sample_cards;
  if (saturated) {
    o << "\n=== D7 anomaly ===\n";
    o << "D7 cross_lang_consistency = 3 / 3 for all " << r.per_sample_cards << " samples.\n";
  } else {
    o << "\n=== D7 distribution ===\n";
    o << format("D7 cross_lang_consistency : 0=%d, 1=%d, 2=%d, 3=%d over %d per-sample cards",
                r.d7_histogram[0], r.d7_histogram[1], r.d7_histogram[2], r.d7_histogram[3],
                r.per_sample_cards)
      << "\n";
  }
  for (const std::string& w : r.warnings) o << w << "\n";
  return o.str();
}

std::string render_text(const StaticReport& r) {
  std::ostringstream o;
  o << "=== Static baseline (" << r.total_questions << " questions) ===\n";
  o << pad("Total questions", 21) << ": " << r.total_questions << "\n";
  o << pad("Overall avg score", 21) << ": " << r.overall.round2() << " / " << kMaxTotal << "\n";
  o << pad("Min score", 21) << ": " << r.min_score << "\n";
  o << pad("Risk distribution", 21) << ": " << risk_line(r.risk_histogram) << "\n";
  o << pad("score < " + std::to_string(r.tau_s) + " count", 21) << ": " << r.below_tau_s_count
    << "\n";
  return o.str();
}

std::string render_text(const ComparisonReport& r) {
  std::ostringstream o;
  o << "=== Static vs runtime signals ===\n";
  o << pad("dimension", 20) << pad("static", 8) << "runtime\n";
  for (const ComparisonRow& row : r.rows) {
    o << pad(row.dimension, 20) << pad(row.static_value, 8) << row.runtime_value << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// CSV exchange

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "schema_version", "batch_id",        "batch_kind",       "run_id",
      "question_id",    "group_id",        "language",         "topic_public",
      "topic_internal", "intensity",       "boundary",         "model_a_id",
      "model_b_id",     "policy_layer_id", "template_version", "system_version",
      "config_judge_id", "gateway_config", "judge_id",         "routed_model_id",
      "run_status",     "question_text",   "response_text",    "D1",
      "D2",             "D3",              "D4",               "D5",
      "D6",             "D7",              "D8",               "total",
      "risk",           "judge_reason",    "d7_mode",          "judge_uncertain",
      "review_trail"};
  return cols;
}

std::string_view to_string(ExportScope scope) {
  switch (scope) {
    case ExportScope::all: return "all";
    case ExportScope::batch: return "batch";
    case ExportScope::batch_language: return "batch_language";
    case ExportScope::batch_language_topic: return "batch_language_topic";
  }
  return "all";
}

ExportScope parse_export_scope(std::string_view text) {
  for (ExportScope s : {ExportScope::all, ExportScope::batch, ExportScope::batch_language,
                        ExportScope::batch_language_topic}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::bad_request, "unknown export scope '" + std::string(text) + "'");
}

namespace {

std::string file_safe(std::string_view text) {
  std::string out;
  for (char c : text) {
    bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::string partition_name(const Sample& s, ExportScope scope) {
  switch (scope) {
    case ExportScope::all: return "results.csv";
    case ExportScope::batch: return file_safe(s.batch_id) + ".csv";
    case ExportScope::batch_language:
      return file_safe(s.batch_id) + "_" + std::string(to_string(s.question.language)) + ".csv";
    case ExportScope::batch_language_topic:
      return file_safe(s.batch_id) + "_" + std::string(to_string(s.question.language)) + "_" +
             s.question.topic.public_code() + ".csv";
  }
  return "results.csv";
}

std::vector<std::string> to_row(const Sample& s, bool include_text) {
  const SystemConfig& c = s.config;
  const ScoreCard& card = s.card;
  json gateway = json::object();
  for (const auto& [k, v] : c.gateway_config) gateway[k] = v;
  std::vector<std::string> row = {
      std::string(kResultSchemaVersion),
      s.batch_id,
      std::string(to_string(s.batch_kind)),
      card.run_id,
      s.question.question_id,
      s.question.group_id,
      std::string(to_string(s.question.language)),
      s.question.topic.public_code(),
      s.question.topic.internal_code(),
      std::string(to_string(s.question.intensity)),
      std::string(to_string(s.question.boundary)),
      c.model_a_id,
      c.model_b_id,
      c.policy_layer_id,
      c.template_version,
      c.system_version,
      c.judge_id,
      gateway.dump(),
      card.judge_id,
      s.routed_model_id,
      std::string(to_string(s.run_status)),
      include_text ? s.question.text : s.question.question_id,
      s.response_text};
  for (int d : card.dims) row.push_back(std::to_string(d));
  row.push_back(std::to_string(card.total));
  row.push_back(std::string(to_string(card.risk)));
  row.push_back(card.judge_reason);
  row.push_back(std::string(to_string(card.d7_mode)));
  row.push_back(card.judge_uncertain ? "true" : "false");
  row.push_back(json(card.review_trail).dump());
  return row;
}

int parse_int(const std::string& text, const char* column) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(Errc::invalid_row, std::string(column) + " is not an integer: '" + text + "'");
  }
  return v;
}

Sample from_row(const std::vector<std::string>& row) {
  const auto& cols = result_columns();
  if (row.size() != cols.size()) {
    throw Error(Errc::invalid_row, "expected " + std::to_string(cols.size()) + " fields, got " +
                                       std::to_string(row.size()));
  }
  auto at = [&](std::string_view name) -> const std::string& {
    return row[static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin())];
  };
  if (at("schema_version") != kResultSchemaVersion) {
    throw Error(Errc::invalid_row, "unsupported schema_version '" + at("schema_version") + "'");
  }
  Sample s;
  s.batch_id = at("batch_id");
  s.batch_kind = parse_batch_kind(at("batch_kind"));
  s.question.question_id = at("question_id");
  s.question.group_id = at("group_id");
  s.question.language = parse_language(at("language"));
  s.question.topic = TopicType::parse(at("topic_public"));
  if (TopicType::parse(at("topic_internal")) != s.question.topic) {
    throw Error(Errc::invalid_row, "topic_public and topic_internal disagree");
  }
  s.question.intensity = parse_intensity(at("intensity"));
  s.question.boundary = parse_boundary(at("boundary"));
  s.question.text = at("question_text");
  s.config.model_a_id = at("model_a_id");
  s.config.model_b_id = at("model_b_id");
  s.config.policy_layer_id = at("policy_layer_id");
  s.config.template_version = at("template_version");
  s.config.system_version = at("system_version");
  s.config.judge_id = at("config_judge_id");
  if (!at("gateway_config").empty()) {
    json gateway = json::parse(at("gateway_config"));
    for (auto& [k, v] : gateway.items()) {
      s.config.gateway_config[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  s.routed_model_id = at("routed_model_id");
  s.run_status = parse_run_status(at("run_status"));
  s.response_text = at("response_text");

  ScoreCard& card = s.card;
  card.run_id = at("run_id");
  for (std::size_t i = 0; i < card.dims.size(); ++i) {
    std::string id(dimension_id(i));
    card.dims[i] = parse_int(at(id), id.c_str());
  }
  card.total = compute_total(card.dims);
  int reported = parse_int(at("total"), "total");
  if (reported != card.total) {
    throw Error(Errc::invalid_row, "total " + std::to_string(reported) +
                                       " does not equal the dimension sum " +
                                       std::to_string(card.total));
  }
  card.risk = parse_risk(at("risk"));
  card.judge_reason = at("judge_reason");
  card.judge_id = at("judge_id");
  card.d7_mode = parse_d7_mode(at("d7_mode"));
  const std::string& uncertain = at("judge_uncertain");
  if (uncertain != "true" && uncertain != "false") {
    throw Error(Errc::invalid_row, "judge_uncertain must be true or false");
  }
  card.judge_uncertain = uncertain == "true";
  if (!at("review_trail").empty()) {
    card.review_trail = json::parse(at("review_trail")).get<std::vector<HumanVerdict>>();
  }
  return s;
}

}  // namespace

std::vector<CsvFile> export_csv(const Dataset& dataset, ExportScope scope, bool include_text) {
  std::vector<std::string> order;
  std::map<std::string, csv::Table> tables;
  for (const Sample& s : dataset.samples) {
    std::string name = partition_name(s, scope);
    auto [it, inserted] = tables.try_emplace(name);
    if (inserted) {
      it->second.header = result_columns();
      order.push_back(name);
    }
    it->second.rows.push_back(to_row(s, include_text));
  }
  std::vector<CsvFile> out;
  for (const std::string& name : order) out.push_back({name, csv::write(tables[name])});
  return out;
}

CsvImportResult import_csv(std::span<const CsvFile> files) {
  CsvImportResult result;
  std::set<std::string> seen;
  for (const CsvFile& file : files) {
    csv::Table table = csv::parse(file.content);
    if (table.header != result_columns()) {
      throw Error(Errc::header_mismatch, file.name + ": header does not match schema version " +
                                             std::string(kResultSchemaVersion));
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      Sample s;
      try {
        s = from_row(table.rows[i]);
      } catch (const std::exception& e) {
        result.rejected.push_back({file.name, i + 1, e.what()});
        continue;
      }
      if (!seen.insert(s.run_id()).second) {
        throw Error(Errc::duplicate_run, file.name + ": run " + s.run_id() + " appears twice");
      }
      result.dataset.samples.push_back(std::move(s));
    }
  }
  return result;
}

void write_csv_files(const std::filesystem::path& dir, std::span<const CsvFile> files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  for (const CsvFile& f : files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    out << f.content;
    if (!out) throw Error(Errc::io_error, "cannot write " + (dir / f.name).string());
  }
}

std::vector<CsvFile> read_csv_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(Errc::io_error, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<CsvFile> out;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    out.push_back({p.filename().string(), buf.str()});
  }
  return out;
}

}  // namespace treval
