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

#ifndef TREVAL_FAILURE_LEDGER_HPP_
#define TREVAL_FAILURE_LEDGER_HPP_

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "treval/batch_runtime.hpp"
#include "treval/dataset.hpp"
#include "treval/drift_analysis.hpp"
#include "treval/question_bank.hpp"
#include "treval/thresholds.hpp"

namespace treval {

enum class CaseState { Candidate, Marked, Patched, InRegression, Closed };
inline constexpr std::array<CaseState, 5> kCaseStates = {
    CaseState::Candidate, CaseState::Marked, CaseState::Patched, CaseState::InRegression,
    CaseState::Closed};

std::string_view to_string(CaseState state);
CaseState parse_case_state(std::string_view text);

// Candidate->Marked->Patched->InRegression->{InRegression, Patched, Closed},
// Patched->Patched (stacked patches), Closed->Marked (reopen). `from` is empty
// for the creating transition, which must land in Candidate.
bool is_legal_transition(std::optional<CaseState> from, CaseState to);

enum class PatchKind { prompt_line, template_segment, policy_rule, model_config, judge_prompt };
std::string_view to_string(PatchKind kind);
PatchKind parse_patch_kind(std::string_view text);

struct PatchDescriptor {
  std::string patch_id;  // generated when empty; reusing an id links the patch to more cases
  PatchKind kind = PatchKind::prompt_line;
  std::string description;
  // Regression passes count only under a template_version >= this value.
  std::string target_template_version;
};

struct Patch {
  std::string patch_id;
  PatchKind kind = PatchKind::prompt_line;
  std::string description;
  std::vector<std::string> case_ids;
  std::string target_template_version;
  Timestamp applied_at{};

  friend bool operator==(const Patch&, const Patch&) = default;
};

struct RegressionOutcome {
  std::string case_id;
  std::string regression_batch_id;
  bool passed = false;
  int new_same_source_failures = 0;
  bool counted = true;  // false when the batch config predates the patch
  std::string note;
  Timestamp recorded_at{};

  friend bool operator==(const RegressionOutcome&, const RegressionOutcome&) = default;
};

// Snapshot taken when the case is marked; never changes afterwards.
struct Provenance {
  std::string question_id;
  std::string group_id;
  std::string response_text;
  Language language = Language::zh_cn;
  TopicType topic = TopicType::from_index(1);
  Intensity intensity = Intensity::neutral;
  BoundaryCategory boundary = BoundaryCategory::policy;
  std::string batch_id;
  std::string run_id;
  std::string model_a_id;
  std::string model_b_id;
  std::string routed_model_id;
  std::string policy_layer_id;
  std::string template_version;
  std::string system_version;
  int total = 0;
  RiskLevel risk = RiskLevel::excellent;
  std::string judge_reason;
  std::string review_notes;
  std::string reviewer_id;
  std::vector<TriageReason> reasons;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct FailureCase {
  std::string case_id;
  Provenance provenance;
  CaseState state = CaseState::Candidate;
  int consecutive_passes = 0;
  std::vector<Patch> patches;
  std::vector<RegressionOutcome> regression_history;
  std::vector<std::string> reopen_evidence;  // batch ids
  std::string active_regression_batch;

  friend bool operator==(const FailureCase&, const FailureCase&) = default;
};

// ---------------------------------------------------------------------------
// Event log

namespace events {
struct Opened { Provenance provenance; };
struct Marked {};
struct PatchAttached { Patch patch; };
struct RegressionStarted { std::string batch_id; };
struct OutcomeRecorded { RegressionOutcome outcome; };
struct Closed { int close_n = 0; };
struct Reopened { std::string evidence_batch_id; };
}  // namespace events

using EventPayload =
    std::variant<events::Opened, events::Marked, events::PatchAttached, events::RegressionStarted,
                 events::OutcomeRecorded, events::Closed, events::Reopened>;

std::string_view event_type(const EventPayload& payload);

struct LedgerEvent {
  std::uint64_t seq = 0;
  std::string case_id;
  std::optional<CaseState> from;
  CaseState to = CaseState::Candidate;
  Timestamp at{};
  EventPayload payload;
};

// ---------------------------------------------------------------------------

// Evidence from one executed, judged and triaged regression batch.
struct RegressionEvidence {
  std::string batch_id;
  std::string template_version;
  std::vector<std::string> question_ids;
  std::vector<Candidate> candidates;
};

struct RecurrenceEvidence {
  std::string batch_id;
  std::vector<std::string> candidate_question_ids;
};

// Whether a new candidate counts as a same-source failure of a case. The
// default matches on group_id or on (topic, intensity).
using SameSourcePredicate = std::function<bool(const Provenance&, const SampleRef&)>;
bool default_same_source(const Provenance& origin, const SampleRef& candidate);

// Questions a regression batch must cover for the given cases: the original
// question, its cross-language siblings, and every bank question sharing
// (topic, intensity). Bank order, deduplicated.
std::vector<Question> regression_question_set(std::span<const FailureCase> cases,
                                              const QuestionBank& bank);

// Append-only event log with state derived by replay. All methods are safe to
// call concurrently; transitions are totally ordered.
class FailureLedger {
 public:
  explicit FailureLedger(Clock clock = system_now,
                         SameSourcePredicate same_source = default_same_source);

  FailureLedger(const FailureLedger&) = delete;
  FailureLedger& operator=(const FailureLedger&) = delete;

  // Replaces the contents with a stored log, replaying every event. Throws
  // Errc::illegal_transition (leaving the ledger empty) when the log contains one.
  void restore(std::vector<LedgerEvent> log);

  // Marks a triaged candidate. Idempotent per (question_id, batch_id).
  // Throws Errc::not_a_candidate when the run is not in `candidates`.
  FailureCase mark(const Sample& sample, std::span<const Candidate> candidates,
                   const std::string& notes, const std::string& reviewer_id);

  // Marked or Patched -> Patched. Throws Errc::closed_case, Errc::unknown_case.
  FailureCase attach_patch(const std::string& case_id, const PatchDescriptor& patch);

  // Moves every case to InRegression and returns the regression batch.
  // Cases must be Patched (or already InRegression for a further round).
  // Throws Errc::empty_regression, Errc::not_patched.
  Batch generate_regression_batch(std::span<const std::string> case_ids, const QuestionBank& bank,
                                  const SystemConfig& config, std::string batch_id);

  // Pass iff the original question is not a candidate and no same-source
  // candidate appeared. A pass increments the counter, a failure resets it
  // and returns the case to Patched.
  FailureCase record_regression_outcome(const std::string& case_id,
                                        const RegressionEvidence& evidence,
                                        const Thresholds& thresholds);

  // InRegression -> Closed iff consecutive_passes >= close_n; otherwise unchanged.
  FailureCase try_close(const std::string& case_id, const Thresholds& thresholds);

  // Closed -> Marked with the counter reset. Throws Errc::not_closed,
  // Errc::no_evidence.
  FailureCase reopen_on_recurrence(const std::string& case_id, const RecurrenceEvidence& evidence);

  std::optional<FailureCase> find(const std::string& case_id) const;
  std::optional<FailureCase> find_by_source(const std::string& question_id,
                                            const std::string& batch_id) const;
  std::vector<FailureCase> cases() const;
  std::vector<LedgerEvent> events() const;

  // Re-checks every recorded transition; returns a description per illegal one.
  std::vector<std::string> audit() const;

 private:
  FailureCase& require(const std::string& case_id);
  void reset();
  void append(const std::string& case_id, CaseState to, EventPayload payload);
  void apply(const LedgerEvent& event);

  Clock clock_;
  SameSourcePredicate same_source_;
  mutable std::shared_mutex mutex_;
  std::vector<LedgerEvent> log_;
  std::map<std::string, FailureCase> cases_;
  std::map<std::pair<std::string, std::string>, std::string> by_source_;
  std::map<std::string, Patch> patches_;
  std::uint64_t next_case_ = 1;
  std::uint64_t next_patch_ = 1;
};

}  // namespace treval

#endif  // TREVAL_FAILURE_LEDGER_HPP_
