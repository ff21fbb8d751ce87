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

#include "treval/json_io.hpp"

namespace treval {

namespace {

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

std::string str(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? std::string() : it->get<std::string>();
}

}  // namespace

void to_json(json& j, Language v) { j = to_string(v); }
void from_json(const json& j, Language& v) { v = parse_language(j.get<std::string>()); }
void to_json(json& j, Intensity v) { j = to_string(v); }
void from_json(const json& j, Intensity& v) { v = parse_intensity(j.get<std::string>()); }
void to_json(json& j, RiskLevel v) { j = to_string(v); }
void from_json(const json& j, RiskLevel& v) { v = parse_risk(j.get<std::string>()); }
void to_json(json& j, BoundaryCategory v) { j = to_string(v); }
void from_json(const json& j, BoundaryCategory& v) { v = parse_boundary(j.get<std::string>()); }
void to_json(json& j, CaseState v) { j = to_string(v); }
void from_json(const json& j, CaseState& v) { v = parse_case_state(j.get<std::string>()); }
void to_json(json& j, TriageReason v) { j = to_string(v); }
void from_json(const json& j, TriageReason& v) { v = parse_triage_reason(j.get<std::string>()); }

void to_json(json& j, const Thresholds& v) {
  j = json{{"tau_s", v.tau_s},
           {"tau_d", v.tau_d},
           {"risk_flag_set", v.risk_flag_set},
           {"close_n", v.close_n},
           {"drift_source", v.drift_source == DriftScoreSource::judge_total ? "judge_total"
                                                                            : "human_override"},
           {"confidence_floor", v.confidence_floor}};
}

void from_json(const json& j, Thresholds& v) {
  Thresholds t;
  t.tau_s = j.value("tau_s", t.tau_s);
  t.tau_d = j.value("tau_d", t.tau_d);
  if (j.contains("risk_flag_set")) t.risk_flag_set = j.at("risk_flag_set").get<std::set<RiskLevel>>();
  t.close_n = j.value("close_n", t.close_n);
  std::string src = j.value("drift_source", std::string("judge_total"));
  if (src == "judge_total") {
    t.drift_source = DriftScoreSource::judge_total;
  } else if (src == "human_override") {
    t.drift_source = DriftScoreSource::human_override;
  } else {
    throw Error(Errc::invalid_config, "unknown drift_source '" + src + "'");
  }
  t.confidence_floor = j.value("confidence_floor", t.confidence_floor);
  t.validate();
  v = std::move(t);
}

void to_json(json& j, const Question& v) {
  j = json{{"question_id", v.question_id}, {"group_id", v.group_id},
           {"language", v.language},       {"topic", v.topic},
           {"intensity", v.intensity},     {"boundary", v.boundary},
           {"text", v.text}};
}

void from_json(const json& j, Question& v) {
  v.question_id = j.at("question_id").get<std::string>();
  v.group_id = j.at("group_id").get<std::string>();
  v.language = j.at("language").get<Language>();
  v.topic = j.at("topic").get<TopicType>();
  v.intensity = j.at("intensity").get<Intensity>();
  v.boundary = j.at("boundary").get<BoundaryCategory>();
  v.text = str(j, "text");
}

void to_json(json& j, const SystemConfig& v) {
  j = json{{"model_a_id", v.model_a_id},           {"model_b_id", v.model_b_id},
           {"policy_layer_id", v.policy_layer_id}, {"template_version", v.template_version},
           {"gateway_config", v.gateway_config},   {"system_version", v.system_version},
           {"judge_id", v.judge_id}};
}

void from_json(const json& j, SystemConfig& v) {
  v.model_a_id = str(j, "model_a_id");
  v.model_b_id = str(j, "model_b_id");
  v.policy_layer_id = str(j, "policy_layer_id");
  v.template_version = str(j, "template_version");
  v.gateway_config.clear();
  if (auto it = j.find("gateway_config"); it != j.end() && it->is_object()) {
    for (auto& [k, val] : it->items()) {
      v.gateway_config[k] = val.is_string() ? val.get<std::string>() : val.dump();
    }
  }
  v.system_version = str(j, "system_version");
  v.judge_id = str(j, "judge_id");
}

void to_json(json& j, const Batch& v) {
  j = json{{"batch_id", v.batch_id},
           {"config", v.config},
           {"question_ids", v.question_ids},
           {"kind", to_string(v.kind)},
           {"created_at", format_timestamp(v.created_at)},
           {"status", to_string(v.status)}};
}

void from_json(const json& j, Batch& v) {
  v.batch_id = j.at("batch_id").get<std::string>();
  v.config = j.at("config").get<SystemConfig>();
  v.question_ids = j.at("question_ids").get<std::vector<std::string>>();
  v.kind = parse_batch_kind(j.at("kind").get<std::string>());
  v.created_at = parse_timestamp(j.at("created_at").get<std::string>());
  v.status = parse_batch_status(j.at("status").get<std::string>());
}

void to_json(json& j, const Run& v) {
  j = json{{"run_id", v.run_id},
           {"batch_id", v.batch_id},
           {"question_id", v.question_id},
           {"language", v.language},
           {"routed_model_id", v.routed_model_id},
           {"status", to_string(v.status)},
           {"started_at", format_timestamp(v.started_at)},
           {"finished_at", format_timestamp(v.finished_at)}};
  put_opt(j, "response_text", v.response_text);
  put_opt(j, "error_detail", v.error_detail);
}

void from_json(const json& j, Run& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.batch_id = j.at("batch_id").get<std::string>();
  v.question_id = j.at("question_id").get<std::string>();
  v.language = j.at("language").get<Language>();
  v.routed_model_id = str(j, "routed_model_id");
  v.status = parse_run_status(j.at("status").get<std::string>());
  v.response_text = opt<std::string>(j, "response_text");
  v.error_detail = opt<std::string>(j, "error_detail");
  v.started_at = parse_timestamp(j.at("started_at").get<std::string>());
  v.finished_at = parse_timestamp(j.at("finished_at").get<std::string>());
}

void to_json(json& j, const HumanVerdict& v) {
  j = json{{"reviewer_id", v.reviewer_id},
           {"verdict", to_string(v.verdict)},
           {"notes", v.notes},
           {"reviewed_at", format_timestamp(v.reviewed_at)}};
  put_opt(j, "override_risk", v.override_risk);
  put_opt(j, "override_total", v.override_total);
}

void from_json(const json& j, HumanVerdict& v) {
  v.reviewer_id = str(j, "reviewer_id");
  v.verdict = parse_verdict(j.at("verdict").get<std::string>());
  v.override_risk = opt<RiskLevel>(j, "override_risk");
  v.override_total = opt<int>(j, "override_total");
  v.notes = str(j, "notes");
  v.reviewed_at = j.contains("reviewed_at") && !j.at("reviewed_at").is_null()
                      ? parse_timestamp(j.at("reviewed_at").get<std::string>())
                      : Timestamp{};
}

void to_json(json& j, const ScoreCard& v) {
  json dims = json::object();
  for (std::size_t i = 0; i < v.dims.size(); ++i) dims[std::string(dimension_id(i))] = v.dims[i];
  j = json{{"run_id", v.run_id},
           {"dims", dims},
           {"total", v.total},
           {"risk", v.risk},
           {"effective_risk", v.effective_risk()},
           {"judge_reason", v.judge_reason},
           {"judge_id", v.judge_id},
           {"d7_mode", to_string(v.d7_mode)},
           {"judge_uncertain", v.judge_uncertain},
           {"review_trail", v.review_trail}};
}

void from_json(const json& j, ScoreCard& v) {
  v.run_id = j.at("run_id").get<std::string>();
  const json& dims = j.at("dims");
  for (std::size_t i = 0; i < v.dims.size(); ++i) {
    v.dims[i] = dims.at(std::string(dimension_id(i))).get<int>();
  }
  v.total = compute_total(v.dims);
  if (j.contains("total") && j.at("total").get<int>() != v.total) {
    throw Error(Errc::invalid_row, "stored total disagrees with dims for " + v.run_id);
  }
  v.risk = j.at("risk").get<RiskLevel>();
  v.judge_reason = str(j, "judge_reason");
  v.judge_id = str(j, "judge_id");
  v.d7_mode = parse_d7_mode(j.value("d7_mode", std::string("per_sample")));
  v.judge_uncertain = j.value("judge_uncertain", false);
  v.review_trail = j.value("review_trail", std::vector<HumanVerdict>{});
}

void to_json(json& j, const JudgeOutcome& v) {
  j = json{{"run_id", v.run_id}, {"diagnostics", v.diagnostics}, {"uncertain", v.uncertain()}};
  if (v.card) j["card"] = *v.card;
  if (v.issue) {
    j["issue"] = to_string(*v.issue);
    j["issue_detail"] = v.issue_detail;
  }
}

void to_json(json& j, const Sample& v) {
  j = json{{"batch_id", v.batch_id},
           {"batch_kind", to_string(v.batch_kind)},
           {"config", v.config},
           {"question", v.question},
           {"routed_model_id", v.routed_model_id},
           {"run_status", to_string(v.run_status)},
           {"response_text", v.response_text},
           {"card", v.card}};
}

void from_json(const json& j, Sample& v) {
  v.batch_id = j.at("batch_id").get<std::string>();
  v.batch_kind = parse_batch_kind(j.at("batch_kind").get<std::string>());
  v.config = j.at("config").get<SystemConfig>();
  v.question = j.at("question").get<Question>();
  v.routed_model_id = str(j, "routed_model_id");
  v.run_status = parse_run_status(j.at("run_status").get<std::string>());
  v.response_text = str(j, "response_text");
  v.card = j.at("card").get<ScoreCard>();
}

void to_json(json& j, const SampleRef& v) {
  j = json{{"run_id", v.run_id},     {"batch_id", v.batch_id}, {"question_id", v.question_id},
           {"group_id", v.group_id}, {"language", v.language}, {"topic", v.topic},
           {"intensity", v.intensity}};
}

void from_json(const json& j, SampleRef& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.batch_id = str(j, "batch_id");
  v.question_id = j.at("question_id").get<std::string>();
  v.group_id = j.at("group_id").get<std::string>();
  v.language = j.at("language").get<Language>();
  v.topic = j.at("topic").get<TopicType>();
  v.intensity = j.at("intensity").get<Intensity>();
}

void to_json(json& j, const Candidate& v) {
  j = json{{"ref", v.ref}, {"reasons", v.reasons}};
}

void to_json(json& j, const TriageDecision& v) {
  j = json{{"run_id", v.run_id},
           {"outcome", v.outcome == TriageDecision::Outcome::auto_pass ? "auto_pass"
                                                                        : "review_candidate"},
           {"reasons", v.reasons}};
}

void to_json(json& j, const DriftSummary& v) {
  j = json{{"complete_groups", v.complete_groups},
           {"incomplete_groups", v.incomplete_groups},
           {"nonzero_drift_groups", v.nonzero_drift_groups},
           {"high_drift_groups", v.high_drift_groups},
           {"average_drift", v.average_drift.round2()},
           {"average_drift_exact", {{"sum", v.average_drift.sum}, {"count", v.average_drift.count}}},
           {"max_drift", v.max_drift}};
}

void to_json(json& j, const GroupViolation& v) {
  j = json{{"group", v.group_id}, {"kind", to_string(v.kind)}, {"detail", v.detail}};
  put_opt(j, "language", v.language);
}

void to_json(json& j, const Provenance& v) {
  j = json{{"question_id", v.question_id},
           {"group_id", v.group_id},
           {"response_text", v.response_text},
           {"language", v.language},
           {"topic", v.topic},
           {"intensity", v.intensity},
           {"boundary", v.boundary},
           {"batch_id", v.batch_id},
           {"run_id", v.run_id},
           {"model_a_id", v.model_a_id},
           {"model_b_id", v.model_b_id},
           {"routed_model_id", v.routed_model_id},
           {"policy_layer_id", v.policy_layer_id},
           {"template_version", v.template_version},
           {"system_version", v.system_version},
           {"total", v.total},
           {"risk", v.risk},
           {"judge_reason", v.judge_reason},
           {"review_notes", v.review_notes},
           {"reviewer_id", v.reviewer_id},
           {"reasons", v.reasons}};
}

void from_json(const json& j, Provenance& v) {
  v.question_id = str(j, "question_id");
  v.group_id = str(j, "group_id");
  v.response_text = str(j, "response_text");
  v.language = j.at("language").get<Language>();
  v.topic = j.at("topic").get<TopicType>();
  v.intensity = j.at("intensity").get<Intensity>();
  v.boundary = j.at("boundary").get<BoundaryCategory>();
  v.batch_id = str(j, "batch_id");
  v.run_id = str(j, "run_id");
  v.model_a_id = str(j, "model_a_id");
  v.model_b_id = str(j, "model_b_id");
  v.routed_model_id = str(j, "routed_model_id");
  v.policy_layer_id = str(j, "policy_layer_id");
  v.template_version = str(j, "template_version");
  v.system_version = str(j, "system_version");
  v.total = j.value("total", 0);
  v.risk = j.at("risk").get<RiskLevel>();
  v.judge_reason = str(j, "judge_reason");
  v.review_notes = str(j, "review_notes");
  v.reviewer_id = str(j, "reviewer_id");
  v.reasons = j.value("reasons", std::vector<TriageReason>{});
}

void to_json(json& j, const Patch& v) {
  j = json{{"patch_id", v.patch_id},
           {"kind", to_string(v.kind)},
           {"description", v.description},
           {"case_ids", v.case_ids},
           {"target_template_version", v.target_template_version},
           {"applied_at", format_timestamp(v.applied_at)}};
}

void from_json(const json& j, Patch& v) {
  v.patch_id = j.at("patch_id").get<std::string>();
  v.kind = parse_patch_kind(j.at("kind").get<std::string>());
  v.description = str(j, "description");
  v.case_ids = j.value("case_ids", std::vector<std::string>{});
  v.target_template_version = str(j, "target_template_version");
  v.applied_at = parse_timestamp(j.at("applied_at").get<std::string>());
}

void to_json(json& j, const RegressionOutcome& v) {
  j = json{{"case_id", v.case_id},
           {"regression_batch_id", v.regression_batch_id},
           {"passed", v.passed},
           {"new_same_source_failures", v.new_same_source_failures},
           {"counted", v.counted},
           {"note", v.note},
           {"recorded_at", format_timestamp(v.recorded_at)}};
}

void from_json(const json& j, RegressionOutcome& v) {
  v.case_id = j.at("case_id").get<std::string>();
  v.regression_batch_id = j.at("regression_batch_id").get<std::string>();
  v.passed = j.at("passed").get<bool>();
  v.new_same_source_failures = j.value("new_same_source_failures", 0);
  v.counted = j.value("counted", true);
  v.note = str(j, "note");
  v.recorded_at = parse_timestamp(j.at("recorded_at").get<std::string>());
}

void to_json(json& j, const FailureCase& v) {
  j = json{{"case_id", v.case_id},
           {"provenance", v.provenance},
           {"state", v.state},
           {"consecutive_passes", v.consecutive_passes},
           {"patches", v.patches},
           {"regression_history", v.regression_history},
           {"reopen_evidence", v.reopen_evidence},
           {"active_regression_batch", v.active_regression_batch}};
}

void to_json(json& j, const LedgerEvent& v) {
  j = json{{"seq", v.seq},
           {"case_id", v.case_id},
           {"type", event_type(v.payload)},
           {"to", v.to},
           {"at", format_timestamp(v.at)}};
  put_opt(j, "from", v.from);
  struct Visitor {
    json& j;
    void operator()(const events::Opened& e) const { j["provenance"] = e.provenance; }
    void operator()(const events::Marked&) const {}
    void operator()(const events::PatchAttached& e) const { j["patch"] = e.patch; }
    void operator()(const events::RegressionStarted& e) const { j["batch_id"] = e.batch_id; }
    void operator()(const events::OutcomeRecorded& e) const { j["outcome"] = e.outcome; }
    void operator()(const events::Closed& e) const { j["close_n"] = e.close_n; }
    void operator()(const events::Reopened& e) const {
      j["evidence_batch_id"] = e.evidence_batch_id;
    }
  };
  std::visit(Visitor{j}, v.payload);
}

void from_json(const json& j, LedgerEvent& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.case_id = j.at("case_id").get<std::string>();
  v.from = opt<CaseState>(j, "from");
  v.to = j.at("to").get<CaseState>();
  v.at = parse_timestamp(j.at("at").get<std::string>());
  const std::string type = j.at("type").get<std::string>();
  if (type == "opened") {
    v.payload = events::Opened{j.at("provenance").get<Provenance>()};
  } else if (type == "marked") {
    v.payload = events::Marked{};
  } else if (type == "patch_attached") {
    v.payload = events::PatchAttached{j.at("patch").get<Patch>()};
  } else if (type == "regression_started") {
    v.payload = events::RegressionStarted{j.at("batch_id").get<std::string>()};
  } else if (type == "outcome_recorded") {
    v.payload = events::OutcomeRecorded{j.at("outcome").get<RegressionOutcome>()};
  } else if (type == "closed") {
    v.payload = events::Closed{j.value("close_n", 0)};
  } else if (type == "reopened") {
    v.payload = events::Reopened{j.at("evidence_batch_id").get<std::string>()};
  } else {
    throw Error(Errc::bad_request, "unknown event type '" + type + "'");
  }
}

void to_json(json& j, const LevelStats& v) {
  j = json{{"count", v.count},
           {"avg", v.mean.round2()},
           {"sum", v.mean.sum},
           {"min", v.min},
           {"max", v.max}};
}

namespace {

json risk_json(const std::map<RiskLevel, int>& hist) {
  json j = json::object();
  for (const auto& [level, n] : hist) j[std::string(to_string(level))] = n;
  return j;
}

}  // namespace

void to_json(json& j, const PilotReport& v) {
  json lang = json::object();
  for (const auto& [l, s] : v.per_language) lang[std::string(to_string(l))] = s;
  json inten = json::object();
  for (const auto& [i, s] : v.per_intensity) inten[std::string(to_string(i))] = s;
  json top = json::array();
  for (const auto& row : v.top_drift_groups) {
    json scores = json::object();
    for (const auto& [l, s] : row.scores) scores[std::string(to_string(l))] = s;
    top.push_back({{"group_id", row.group_id},
                   {"topic", row.topic},
                   {"drift", row.drift},
                   {"scores", scores}});
  }
  j = json{{"dataset_fingerprint", v.dataset_fingerprint},
           {"mode", v.mode_label},
           {"period", v.period},
           {"tau_s", v.tau_s},
           {"tau_d", v.tau_d},
           {"total_questions", v.total_questions},
           {"group_count", v.group_count},
           {"overall_avg", v.overall.round2()},
           {"overall_exact", {{"sum", v.overall.sum}, {"count", v.overall.count}}},
           {"min_score", v.min_score},
           {"risk_histogram", risk_json(v.risk_histogram)},
           {"below_tau_s_count", v.below_tau_s_count},
           {"per_language", lang},
           {"per_intensity", inten},
           {"drift", v.drift},
           {"top_drift_groups", top},
           {"d7_histogram", v.d7_histogram},
           {"per_sample_cards", v.per_sample_cards},
           {"group_joint_cards", v.group_joint_cards},
           {"low_score_excellent", v.low_score_excellent},
           {"failure_candidates", v.failure_candidates},
           {"regression_units", v.regression_units},
           {"warnings", v.warnings}};
}

void to_json(json& j, const StaticReport& v) {
  j = json{{"dataset_fingerprint", v.dataset_fingerprint},
           {"tau_s", v.tau_s},
           {"total_questions", v.total_questions},
           {"overall_avg", v.overall.round2()},
           {"min_score", v.min_score},
           {"risk_histogram", risk_json(v.risk_histogram)},
           {"below_tau_s_count", v.below_tau_s_count}};
}

void to_json(json& j, const ComparisonReport& v) {
  json rows = json::array();
  for (const auto& r : v.rows) {
    rows.push_back({{"dimension", r.dimension}, {"static", r.static_value}, {"runtime", r.runtime_value}});
  }
  j = json{{"dataset_fingerprint", v.dataset_fingerprint}, {"rows", rows}};
}

}  // namespace treval
