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

#include "treval/failure_ledger.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <set>

namespace treval {

std::string_view to_string(CaseState state) {
  switch (state) {
    case CaseState::Candidate: return "Candidate";
    case CaseState::Marked: return "Marked";
    case CaseState::Patched: return "Patched";
    case CaseState::InRegression: return "InRegression";
    case CaseState::Closed: return "Closed";
  }
  return "?";
}

CaseState parse_case_state(std::string_view text) {
  for (CaseState s : kCaseStates) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::unknown_code, "unknown case state '" + std::string(text) + "'");
}

bool is_legal_transition(std::optional<CaseState> from, CaseState to) {
  using S = CaseState;
  if (!from) return to == S::Candidate;
  switch (*from) {
    case S::Candidate: return to == S::Marked;
    case S::Marked: return to == S::Patched;
    case S::Patched: return to == S::Patched || to == S::InRegression;
    case S::InRegression:
      return to == S::InRegression || to == S::Patched || to == S::Closed;
    case S::Closed: return to == S::Marked;
  }
  return false;
}

std::string_view to_string(PatchKind kind) {
  switch (kind) {
    case PatchKind::prompt_line: return "prompt_line";
    case PatchKind::template_segment: return "template_segment";
    case PatchKind::policy_rule: return "policy_rule";
    case PatchKind::model_config: return "model_config";
    case PatchKind::judge_prompt: return "judge_prompt";
  }
  return "?";
}

PatchKind parse_patch_kind(std::string_view text) {
  for (auto k : {PatchKind::prompt_line, PatchKind::template_segment, PatchKind::policy_rule,
                 PatchKind::model_config, PatchKind::judge_prompt}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::unknown_code, "unknown patch kind '" + std::string(text) + "'");
}

std::string_view event_type(const EventPayload& payload) {
  struct Visitor {
    std::string_view operator()(const events::Opened&) const { return "opened"; }
    std::string_view operator()(const events::Marked&) const { return "marked"; }
    std::string_view operator()(const events::PatchAttached&) const { return "patch_attached"; }
    std::string_view operator()(const events::RegressionStarted&) const {
      return "regression_started";
    }
    std::string_view operator()(const events::OutcomeRecorded&) const {
      return "outcome_recorded";
    }
    std::string_view operator()(const events::Closed&) const { return "closed"; }
    std::string_view operator()(const events::Reopened&) const { return "reopened"; }
  };
  return std::visit(Visitor{}, payload);
}

bool default_same_source(const Provenance& origin, const SampleRef& candidate) {
  return candidate.group_id == origin.group_id ||
         (candidate.topic == origin.topic && candidate.intensity == origin.intensity);
}

std::vector<Question> regression_question_set(std::span<const FailureCase> cases,
                                              const QuestionBank& bank) {
  std::set<std::string> wanted;
  for (const FailureCase& c : cases) {
    const Provenance& p = c.provenance;
    if (bank.find(p.question_id) == nullptr) {
      throw Error(Errc::not_found, "question " + p.question_id + " is not in the bank");
    }
    wanted.insert(p.question_id);
    if (const TrilingualGroup* g = bank.find_group(p.group_id)) {
      for (const auto& [lang, qid] : g->members) wanted.insert(qid);
    }
    for (const Question& q : bank.questions()) {
      if (q.topic == p.topic && q.intensity == p.intensity) wanted.insert(q.question_id);
    }
  }
  std::vector<Question> out;
  for (const Question& q : bank.questions()) {
    if (wanted.contains(q.question_id)) out.push_back(q);
  }
  return out;
}

namespace {

std::string sequence_id(const char* prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

std::uint64_t sequence_number(const std::string& id) {
  auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoull(id.substr(dash + 1));
  } catch (...) {
    return 0;
  }
}

}  // namespace

FailureLedger::FailureLedger(Clock clock, SameSourcePredicate same_source)
    : clock_(std::move(clock)), same_source_(std::move(same_source)) {}

void FailureLedger::reset() {
  log_.clear();
  cases_.clear();
  by_source_.clear();
  patches_.clear();
  next_case_ = 1;
  next_patch_ = 1;
}

void FailureLedger::restore(std::vector<LedgerEvent> log) {
  std::unique_lock lock(mutex_);
  reset();
  for (LedgerEvent& e : log) {
    auto it = cases_.find(e.case_id);
    std::optional<CaseState> current;
    if (it != cases_.end()) current = it->second.state;
    if (e.from != current || !is_legal_transition(e.from, e.to)) {
      std::string from = e.from ? std::string(to_string(*e.from)) : "none";
      reset();
      throw Error(Errc::illegal_transition, "event " + std::to_string(e.seq) + " on " + e.case_id +
                                                ": " + from + " -> " +
                                                std::string(to_string(e.to)));
    }
    apply(e);
    log_.push_back(std::move(e));
  }
}

FailureCase& FailureLedger::require(const std::string& case_id) {
  auto it = cases_.find(case_id);
  if (it == cases_.end()) throw Error(Errc::unknown_case, "unknown case " + case_id);
  return it->second;
}

void FailureLedger::append(const std::string& case_id, CaseState to, EventPayload payload) {
  LedgerEvent e;
  e.seq = log_.size() + 1;
  e.case_id = case_id;
  if (auto it = cases_.find(case_id); it != cases_.end()) e.from = it->second.state;
  e.to = to;
  e.at = clock_();
  e.payload = std::move(payload);
  if (!is_legal_transition(e.from, e.to)) {
    throw Error(Errc::illegal_transition,
                case_id + ": " + (e.from ? std::string(to_string(*e.from)) : "none") + " -> " +
                    std::string(to_string(to)));
  }
  apply(e);
  log_.push_back(std::move(e));
}

void FailureLedger::apply(const LedgerEvent& e) {
  struct Visitor {
    FailureLedger& self;
    const LedgerEvent& e;

    void operator()(const events::Opened& ev) const {
      FailureCase c;
      c.case_id = e.case_id;
      c.provenance = ev.provenance;
      c.state = CaseState::Candidate;
      self.by_source_[{ev.provenance.question_id, ev.provenance.batch_id}] = e.case_id;
      self.next_case_ = std::max(self.next_case_, sequence_number(e.case_id) + 1);
      self.cases_.emplace(e.case_id, std::move(c));
    }
    void operator()(const events::Marked&) const { self.cases_.at(e.case_id).state = e.to; }
    void operator()(const events::PatchAttached& ev) const {
      FailureCase& c = self.cases_.at(e.case_id);
      Patch& registry = self.patches_[ev.patch.patch_id];
      if (registry.patch_id.empty()) registry = ev.patch;
      for (const auto& id : ev.patch.case_ids) {
        if (std::find(registry.case_ids.begin(), registry.case_ids.end(), id) ==
            registry.case_ids.end()) {
          registry.case_ids.push_back(id);
        }
      }
      self.next_patch_ = std::max(self.next_patch_, sequence_number(ev.patch.patch_id) + 1);
      c.patches.push_back(ev.patch);
      c.state = e.to;
      c.consecutive_passes = 0;
    }
    void operator()(const events::RegressionStarted& ev) const {
      FailureCase& c = self.cases_.at(e.case_id);
      c.state = e.to;
      c.active_regression_batch = ev.batch_id;
    }
    void operator()(const events::OutcomeRecorded& ev) const {
      FailureCase& c = self.cases_.at(e.case_id);
      c.regression_history.push_back(ev.outcome);
      c.active_regression_batch.clear();
      if (ev.outcome.counted) {
        c.consecutive_passes = ev.outcome.passed ? c.consecutive_passes + 1 : 0;
      }
      c.state = e.to;
    }
    void operator()(const events::Closed&) const { self.cases_.at(e.case_id).state = e.to; }
    void operator()(const events::Reopened& ev) const {
      FailureCase& c = self.cases_.at(e.case_id);
      c.state = e.to;
      c.consecutive_passes = 0;
      c.active_regression_batch.clear();
      c.reopen_evidence.push_back(ev.evidence_batch_id);
    }
  };
  std::visit(Visitor{*this, e}, e.payload);
}

FailureCase FailureLedger::mark(const Sample& sample, std::span<const Candidate> candidates,
                                const std::string& notes, const std::string& reviewer_id) {
  std::unique_lock lock(mutex_);
  auto key = std::make_pair(sample.question.question_id, sample.batch_id);
  if (auto it = by_source_.find(key); it != by_source_.end()) return cases_.at(it->second);

  auto cand = std::find_if(candidates.begin(), candidates.end(),
                           [&](const Candidate& c) { return c.ref.run_id == sample.card.run_id; });
  if (cand == candidates.end()) {
    throw Error(Errc::not_a_candidate, "run " + sample.card.run_id + " is not a failure candidate");
  }

  Provenance p;
  p.question_id = sample.question.question_id;
  p.group_id = sample.question.group_id;
  p.response_text = sample.response_text;
  p.language = sample.question.language;
  p.topic = sample.question.topic;
  p.intensity = sample.question.intensity;
  p.boundary = sample.question.boundary;
  p.batch_id = sample.batch_id;
  p.run_id = sample.card.run_id;
  p.model_a_id = sample.config.model_a_id;
  p.model_b_id = sample.config.model_b_id;
  p.routed_model_id = sample.routed_model_id;
  p.policy_layer_id = sample.config.policy_layer_id;
  p.template_version = sample.config.template_version;
  p.system_version = sample.config.system_version;
  p.total = sample.card.total;
  p.risk = sample.card.risk;
  p.judge_reason = sample.card.judge_reason;
  p.review_notes = notes;
  p.reviewer_id = reviewer_id;
  p.reasons.assign(cand->reasons.begin(), cand->reasons.end());

  std::string case_id = sequence_id("FC", next_case_);
  append(case_id, CaseState::Candidate, events::Opened{std::move(p)});
  append(case_id, CaseState::Marked, events::Marked{});
  return cases_.at(case_id);
}

FailureCase FailureLedger::attach_patch(const std::string& case_id, const PatchDescriptor& desc) {
  std::unique_lock lock(mutex_);
  FailureCase& c = require(case_id);
  if (c.state == CaseState::Closed) throw Error(Errc::closed_case, "case " + case_id + " is closed");
  if (c.state != CaseState::Marked && c.state != CaseState::Patched) {
    throw Error(Errc::illegal_transition,
                "cannot patch a case in state " + std::string(to_string(c.state)));
  }
  Patch patch;
  patch.patch_id = desc.patch_id.empty() ? sequence_id("P", next_patch_) : desc.patch_id;
  patch.kind = desc.kind;
  patch.description = desc.description;
  patch.target_template_version = desc.target_template_version;
  patch.applied_at = clock_();
  if (auto it = patches_.find(patch.patch_id); it != patches_.end()) {
    patch.case_ids = it->second.case_ids;
  }
  if (std::find(patch.case_ids.begin(), patch.case_ids.end(), case_id) == patch.case_ids.end()) {
    patch.case_ids.push_back(case_id);
  }
  append(case_id, CaseState::Patched, events::PatchAttached{std::move(patch)});
  return cases_.at(case_id);
}

Batch FailureLedger::generate_regression_batch(std::span<const std::string> case_ids,
                                               const QuestionBank& bank,
                                               const SystemConfig& config, std::string batch_id) {
  std::unique_lock lock(mutex_);
  if (case_ids.empty()) throw Error(Errc::empty_regression, "no cases given");
  std::vector<FailureCase> selected;
  for (const auto& id : case_ids) {
    const FailureCase& c = require(id);
    bool ready = c.state == CaseState::Patched ||
                 (c.state == CaseState::InRegression && c.active_regression_batch.empty());
    if (!ready) {
      throw Error(Errc::not_patched, "case " + id + " is " + std::string(to_string(c.state)) +
                                         (c.active_regression_batch.empty()
                                              ? ""
                                              : " awaiting " + c.active_regression_batch));
    }
    selected.push_back(c);
  }
  std::vector<Question> questions = regression_question_set(selected, bank);
  Batch batch = create_batch(std::move(batch_id), config, questions, BatchKind::regression, clock_());
  std::set<std::string> done;
  for (const auto& id : case_ids) {
    if (done.insert(id).second) {
      append(id, CaseState::InRegression, events::RegressionStarted{batch.batch_id});
    }
  }
  return batch;
}

FailureCase FailureLedger::record_regression_outcome(const std::string& case_id,
                                                     const RegressionEvidence& evidence,
                                                     const Thresholds& thresholds) {
  (void)thresholds;
  std::unique_lock lock(mutex_);
  FailureCase& c = require(case_id);
  if (c.state != CaseState::InRegression || c.active_regression_batch.empty()) {
    throw Error(Errc::not_in_regression, "case " + case_id + " has no pending regression batch");
  }
  if (evidence.batch_id != c.active_regression_batch) {
    throw Error(Errc::not_in_regression, "case " + case_id + " awaits " +
                                             c.active_regression_batch + ", not " +
                                             evidence.batch_id);
  }
  const Provenance& p = c.provenance;
  if (std::find(evidence.question_ids.begin(), evidence.question_ids.end(), p.question_id) ==
      evidence.question_ids.end()) {
    throw Error(Errc::question_not_in_batch,
                "batch " + evidence.batch_id + " does not contain " + p.question_id);
  }

  RegressionOutcome out;
  out.case_id = case_id;
  out.regression_batch_id = evidence.batch_id;
  out.recorded_at = clock_();
  bool original_recurred = false;
  for (const Candidate& cand : evidence.candidates) {
    if (cand.ref.question_id == p.question_id) {
      original_recurred = true;
    } else if (same_source_(p, cand.ref)) {
      ++out.new_same_source_failures;
    }
  }
  out.passed = !original_recurred && out.new_same_source_failures == 0;

  const Patch* latest = c.patches.empty() ? nullptr : &c.patches.back();
  if (latest != nullptr && !latest->target_template_version.empty() &&
      compare_versions(evidence.template_version, latest->target_template_version) < 0) {
    out.counted = false;
    out.note = "template_version " + evidence.template_version + " predates patched version " +
               latest->target_template_version + "; operator review required";
  }

  CaseState next = CaseState::InRegression;
  if (out.counted && !out.passed) next = CaseState::Patched;
  append(case_id, next, events::OutcomeRecorded{std::move(out)});
  return cases_.at(case_id);
}

FailureCase FailureLedger::try_close(const std::string& case_id, const Thresholds& thresholds) {
  std::unique_lock lock(mutex_);
  FailureCase& c = require(case_id);
  if (c.state != CaseState::InRegression) {
    throw Error(Errc::not_in_regression,
                "case " + case_id + " is " + std::string(to_string(c.state)));
  }
  if (c.consecutive_passes >= thresholds.close_n) {
    append(case_id, CaseState::Closed, events::Closed{thresholds.close_n});
  }
  return cases_.at(case_id);
}

FailureCase FailureLedger::reopen_on_recurrence(const std::string& case_id,
                                                const RecurrenceEvidence& evidence) {
  std::unique_lock lock(mutex_);
  FailureCase& c = require(case_id);
  if (c.state != CaseState::Closed) {
    throw Error(Errc::not_closed, "case " + case_id + " is " + std::string(to_string(c.state)));
  }
  if (evidence.batch_id.empty()) throw Error(Errc::no_evidence, "no evidence batch given");
  const auto& ids = evidence.candidate_question_ids;
  if (std::find(ids.begin(), ids.end(), c.provenance.question_id) == ids.end()) {
    throw Error(Errc::no_evidence, c.provenance.question_id + " is not a candidate in batch " +
                                       evidence.batch_id);
  }
  append(case_id, CaseState::Marked, events::Reopened{evidence.batch_id});
  return cases_.at(case_id);
}

std::optional<FailureCase> FailureLedger::find(const std::string& case_id) const {
  std::shared_lock lock(mutex_);
  auto it = cases_.find(case_id);
  if (it == cases_.end()) return std::nullopt;
  return it->second;
}

std::optional<FailureCase> FailureLedger::find_by_source(const std::string& question_id,
                                                         const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  auto it = by_source_.find({question_id, batch_id});
  if (it == by_source_.end()) return std::nullopt;
  return cases_.at(it->second);
}

std::vector<FailureCase> FailureLedger::cases() const {
  std::shared_lock lock(mutex_);
  std::vector<FailureCase> out;
  out.reserve(cases_.size());
  for (const auto& [id, c] : cases_) out.push_back(c);
  return out;
}

std::vector<LedgerEvent> FailureLedger::events() const {
  std::shared_lock lock(mutex_);
  return log_;
}

std::vector<std::string> FailureLedger::audit() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> problems;
  std::map<std::string, CaseState> state;
  std::map<std::string, int> passes;
  std::map<std::string, int> patch_count;
  for (const LedgerEvent& e : log_) {
    const std::string where = "event " + std::to_string(e.seq) + " on " + e.case_id;
    std::optional<CaseState> current;
    if (auto it = state.find(e.case_id); it != state.end()) current = it->second;
    if (e.from != current) problems.push_back(where + " records a stale from-state");
    if (!is_legal_transition(current, e.to)) {
      problems.push_back(where + ": " + (current ? std::string(to_string(*current)) : "none") +
                         " -> " + std::string(to_string(e.to)));
    }
    if (const auto* ev = std::get_if<events::OutcomeRecorded>(&e.payload)) {
      if (ev->outcome.counted) passes[e.case_id] = ev->outcome.passed ? passes[e.case_id] + 1 : 0;
    } else if (std::holds_alternative<events::PatchAttached>(e.payload)) {
      passes[e.case_id] = 0;
      ++patch_count[e.case_id];
    } else if (std::holds_alternative<events::Reopened>(e.payload)) {
      passes[e.case_id] = 0;
    } else if (const auto* closed = std::get_if<events::Closed>(&e.payload)) {
      if (passes[e.case_id] < closed->close_n) {
        problems.push_back(where + " closed after " + std::to_string(passes[e.case_id]) +
                           " passes, below " + std::to_string(closed->close_n));
      }
    } else if (std::holds_alternative<events::RegressionStarted>(e.payload)) {
      if (patch_count[e.case_id] == 0) problems.push_back(where + " regressed without a patch");
    }
    state[e.case_id] = e.to;
  }
  return problems;
}

}  // namespace treval
