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

#ifndef TREVAL_JSON_IO_HPP_
#define TREVAL_JSON_IO_HPP_

#include "json.hpp"
#include "treval/batch_runtime.hpp"
#include "treval/dataset.hpp"
#include "treval/drift_analysis.hpp"
#include "treval/failure_ledger.hpp"
#include "treval/judging.hpp"
#include "treval/question_bank.hpp"
#include "treval/reporting.hpp"
#include "treval/thresholds.hpp"

// nlohmann/json converters for the domain types. Enumerations serialize as
// their string names; timestamps as ISO-8601 UTC text.
namespace treval {

using nlohmann::json;

void to_json(json& j, Language v);
void from_json(const json& j, Language& v);
void to_json(json& j, Intensity v);
void from_json(const json& j, Intensity& v);
void to_json(json& j, RiskLevel v);
void from_json(const json& j, RiskLevel& v);
void to_json(json& j, BoundaryCategory v);
void from_json(const json& j, BoundaryCategory& v);
void to_json(json& j, CaseState v);
void from_json(const json& j, CaseState& v);
void to_json(json& j, TriageReason v);
void from_json(const json& j, TriageReason& v);

void to_json(json& j, const Thresholds& v);
void from_json(const json& j, Thresholds& v);
void to_json(json& j, const Question& v);
void from_json(const json& j, Question& v);
void to_json(json& j, const SystemConfig& v);
void from_json(const json& j, SystemConfig& v);
void to_json(json& j, const Batch& v);
void from_json(const json& j, Batch& v);
void to_json(json& j, const Run& v);
void from_json(const json& j, Run& v);
void to_json(json& j, const HumanVerdict& v);
void from_json(const json& j, HumanVerdict& v);
void to_json(json& j, const ScoreCard& v);
void from_json(const json& j, ScoreCard& v);
void to_json(json& j, const JudgeOutcome& v);
void to_json(json& j, const Sample& v);
void from_json(const json& j, Sample& v);
void to_json(json& j, const SampleRef& v);
void from_json(const json& j, SampleRef& v);
void to_json(json& j, const Candidate& v);
void to_json(json& j, const TriageDecision& v);
void to_json(json& j, const DriftSummary& v);
void to_json(json& j, const GroupViolation& v);

void to_json(json& j, const Provenance& v);
void from_json(const json& j, Provenance& v);
void to_json(json& j, const Patch& v);
void from_json(const json& j, Patch& v);
void to_json(json& j, const RegressionOutcome& v);
void from_json(const json& j, RegressionOutcome& v);
void to_json(json& j, const FailureCase& v);
void to_json(json& j, const LedgerEvent& v);
void from_json(const json& j, LedgerEvent& v);

void to_json(json& j, const LevelStats& v);
void to_json(json& j, const PilotReport& v);
void to_json(json& j, const StaticReport& v);
void to_json(json& j, const ComparisonReport& v);

}  // namespace treval

// TopicType has no default state, so it converts through a serializer.
template <>
struct nlohmann::adl_serializer<treval::TopicType> {
  static treval::TopicType from_json(const json& j) {
    return treval::TopicType::parse(j.get<std::string>());
  }
  static void to_json(json& j, treval::TopicType v) { j = v.public_code(); }
};

#endif  // TREVAL_JSON_IO_HPP_
