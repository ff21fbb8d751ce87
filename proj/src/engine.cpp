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

#include "treval/engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "treval/json_io.hpp"

namespace treval {

namespace {

int severity(RiskLevel r) { return static_cast<int>(r); }

bool same_verdict(const HumanVerdict& a, const HumanVerdict& b) {
  return a.reviewer_id == b.reviewer_id && a.verdict == b.verdict &&
         a.override_risk == b.override_risk && a.override_total == b.override_total &&
         a.notes == b.notes;
}

Sample make_sample(const Batch& batch, const Question& q, const Run& run, ScoreCard card) {
  Sample s;
  s.batch_id = batch.batch_id;
  s.batch_kind = batch.kind;
  s.config = batch.config;
  s.question = q;
  s.routed_model_id = run.routed_model_id;
  s.run_status = run.status;
  s.response_text = run.response_text.value_or("");
  s.card = std::move(card);
  return s;
}

SampleRef ref_of(const Run& run, const Question& q) {
  return {run.run_id, run.batch_id, q.question_id, q.group_id, q.language, q.topic, q.intensity};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw Error(Errc::io_error, "cannot replace " + p.string() + ": " + ec.message());
}

json outcome_json(const JudgeOutcome& o) { return json(o); }

JudgeOutcome outcome_from_json(const json& j) {
  JudgeOutcome o;
  o.run_id = j.at("run_id").get<std::string>();
  o.diagnostics = j.value("diagnostics", std::vector<std::string>{});
  if (j.contains("card")) o.card = j.at("card").get<ScoreCard>();
  if (j.contains("issue")) {
    const std::string code = j.at("issue").get<std::string>();
    o.issue = code == "judge_unreachable"  ? Errc::judge_unreachable
              : code == "missing_dimension" ? Errc::missing_dimension
              : code == "out_of_range"      ? Errc::out_of_range
                                            : Errc::unparseable_judge_output;
    o.issue_detail = j.value("issue_detail", std::string());
  }
  return o;
}

}  // namespace

QueueFilter QueueFilter::parse(const std::map<std::string, std::string>& fields) {
  QueueFilter f;
  for (const auto& [key, value] : fields) {
    if (value.empty()) continue;
    try {
      if (key == "language") {
        f.language = parse_language(value);
      } else if (key == "topic") {
        f.topic = TopicType::parse(value);
      } else if (key == "reason") {
        f.reason = parse_triage_reason(value);
      } else if (key == "batch") {
        f.batch_id = value;
      } else if (key == "include_reviewed") {
        f.include_reviewed = value == "true" || value == "1";
      } else {
        throw Error(Errc::unknown_filter_value, "unknown filter '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::unknown_filter_value) throw;
      throw Error(Errc::unknown_filter_value, key + ": " + e.what());
    }
  }
  return f;
}

Engine::Engine(EngineOptions options, AgentBackend& agent, JudgeBackend& judge)
    : options_(std::move(options)),
      agent_(agent),
      judge_(judge),
      bank_(std::make_shared<QuestionBank>()),
      ledger_(options_.clock) {
  options_.thresholds.validate();
  if (!options_.storage.empty()) load();
}

// ---------------------------------------------------------------------------
// Bank

BankSummary Engine::import_bank(std::string_view csv_text, const BoundaryTable& boundaries) {
  std::unique_lock lock(mutex_);
  auto bank = std::make_shared<QuestionBank>(
      import_question_bank(csv_text, boundaries, bank_->version() + 1));
  bank_ = std::move(bank);
  save_locked();
  lock.unlock();
  return bank_summary();
}

BankSummary Engine::bank_summary() const {
  std::shared_lock lock(mutex_);
  BankSummary s;
  s.version = bank_->version();
  s.questions = bank_->size();
  s.groups = bank_->groups().size();
  s.complete_groups = bank_->complete_group_count();
  s.violations = validate_groups(*bank_);
  return s;
}

std::vector<Question> Engine::list_questions(const QuestionFilter& filter) const {
  std::shared_lock lock(mutex_);
  return filter_questions(*bank_, filter);
}

std::shared_ptr<const QuestionBank> Engine::bank() const {
  std::shared_lock lock(mutex_);
  return bank_;
}

// ---------------------------------------------------------------------------
// Batches

Engine::BatchRecord& Engine::require_batch(const std::string& batch_id) {
  auto it = batches_.find(batch_id);
  if (it == batches_.end()) throw Error(Errc::unknown_batch, "unknown batch '" + batch_id + "'");
  return it->second;
}

const Engine::BatchRecord& Engine::require_batch(const std::string& batch_id) const {
  auto it = batches_.find(batch_id);
  if (it == batches_.end()) throw Error(Errc::unknown_batch, "unknown batch '" + batch_id + "'");
  return it->second;
}

Batch Engine::create_batch_locked(const std::string& batch_id, const SystemConfig& config,
                                  std::vector<Question> selection, BatchKind kind) {
  if (batch_id.empty()) throw Error(Errc::bad_request, "batch_id is required");
  if (batches_.contains(batch_id)) {
    throw Error(Errc::duplicate_id, "batch '" + batch_id + "' already exists");
  }
  Batch batch = treval::create_batch(batch_id, config, selection, kind, options_.clock());
  batches_[batch_id] = BatchRecord{batch, {}, {}, false};
  batch_order_.push_back(batch_id);
  save_locked();
  return batch;
}

Batch Engine::create_batch(const std::string& batch_id, const SystemConfig& config,
                           const QuestionFilter& filter, BatchKind kind) {
  std::unique_lock lock(mutex_);
  return create_batch_locked(batch_id, config, filter_questions(*bank_, filter), kind);
}

Batch Engine::create_batch(const std::string& batch_id, const SystemConfig& config,
                           const std::vector<std::string>& question_ids, BatchKind kind) {
  std::unique_lock lock(mutex_);
  std::vector<Question> selection;
  for (const std::string& id : question_ids) {
    const Question* q = bank_->find(id);
    if (q == nullptr) throw Error(Errc::unknown_filter_value, "question '" + id + "' not in bank");
    selection.push_back(*q);
  }
  return create_batch_locked(batch_id, config, std::move(selection), kind);
}

BatchView Engine::view(const BatchRecord& record) const {
  BatchView v;
  v.batch = record.batch;
  for (const Run& r : record.runs) {
    ++v.runs;
    if (r.status == RunStatus::ok) {
      ++v.ok_runs;
    } else {
      ++v.backend_errors;
    }
    if (samples_.contains(r.run_id)) ++v.judged;
  }
  v.judge_issues = static_cast<int>(record.issues.size());
  return v;
}

BatchView Engine::execute_batch(const std::string& batch_id) {
  Batch work;
  std::shared_ptr<const QuestionBank> bank;
  {
    std::unique_lock lock(mutex_);
    BatchRecord& record = require_batch(batch_id);
    if (record.batch.status != BatchStatus::pending) {
      throw Error(Errc::already_executed, "batch " + batch_id + " already executed");
    }
    record.batch.status = BatchStatus::running;
    work = record.batch;
    work.status = BatchStatus::pending;
    bank = bank_;
  }
  std::vector<Run> runs;
  try {
    runs = treval::execute_batch(work, *bank, agent_,
                                 {options_.parallelism, options_.clock});
  } catch (...) {
    std::unique_lock lock(mutex_);
    require_batch(batch_id).batch.status = BatchStatus::pending;
    throw;
  }
  std::unique_lock lock(mutex_);
  BatchRecord& record = require_batch(batch_id);
  record.batch.status = work.status;
  record.runs = std::move(runs);
  save_locked();
  return view(record);
}

void Engine::store_batch_sample(BatchRecord& record, const Run& run, const ScoreCard& card) {
  const Question* q = bank_->find(run.question_id);
  ScoreCard stored = card;
  if (auto it = samples_.find(run.run_id); it != samples_.end()) {
    stored.review_trail = it->second.card.review_trail;
  }
  Question question = q ? *q : samples_.at(run.run_id).question;
  samples_[run.run_id] = make_sample(record.batch, question, run, std::move(stored));
}

BatchView Engine::judge_batch(const std::string& batch_id, D7Mode mode) {
  std::vector<Run> runs;
  std::shared_ptr<const QuestionBank> bank;
  {
    std::shared_lock lock(mutex_);
    const BatchRecord& record = require_batch(batch_id);
    if (record.batch.status != BatchStatus::complete &&
        record.batch.status != BatchStatus::partial) {
      throw Error(Errc::bad_request, "batch " + batch_id + " has not been executed");
    }
    runs = record.runs;
    bank = bank_;
  }

  std::vector<JudgeOutcome> outcomes;
  std::vector<const Run*> ok;
  for (const Run& r : runs) {
    if (r.status == RunStatus::ok) ok.push_back(&r);
  }
  auto question = [&](const Run& r) -> const Question& {
    const Question* q = bank->find(r.question_id);
    if (q == nullptr) throw Error(Errc::unknown_run, "question " + r.question_id + " left the bank");
    return *q;
  };
  if (mode == D7Mode::per_sample) {
    for (const Run* r : ok) outcomes.push_back(judge_run(*r, question(*r), judge_, options_.judge));
  } else {
    std::vector<std::string> order;
    std::map<std::string, std::vector<Run>> groups;
    for (const Run* r : ok) {
      const std::string& g = question(*r).group_id;
      if (!groups.contains(g)) order.push_back(g);
      groups[g].push_back(*r);
    }
    for (const std::string& g : order) {
      const std::vector<Run>& members = groups[g];
      std::set<Language> langs;
      for (const Run& r : members) langs.insert(r.language);
      if (members.size() == kLanguages.size() && langs.size() == kLanguages.size()) {
        for (auto& o : judge_group_joint(members, *bank, judge_, options_.judge)) {
          outcomes.push_back(std::move(o));
        }
      } else {
        for (const Run& r : members) {
          JudgeOutcome o = judge_run(r, question(r), judge_, options_.judge);
          o.diagnostics.push_back("group " + g + " incomplete; judged per-sample");
          outcomes.push_back(std::move(o));
        }
      }
    }
  }

  std::unique_lock lock(mutex_);
  BatchRecord& record = require_batch(batch_id);
  std::map<std::string, const Run*> by_id;
  for (const Run& r : record.runs) by_id[r.run_id] = &r;
  for (JudgeOutcome& o : outcomes) {
    const Run& run = *by_id.at(o.run_id);
    if (o.card) {
      store_batch_sample(record, run, *o.card);
      if (o.diagnostics.empty()) {
        record.issues.erase(o.run_id);
      } else {
        record.issues[o.run_id] = o;
      }
    } else {
      samples_.erase(o.run_id);
      record.issues[o.run_id] = o;
    }
  }
  record.judged = true;
  save_locked();
  return view(record);
}

BatchView Engine::batch_status(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  return view(require_batch(batch_id));
}

std::vector<BatchView> Engine::list_batches() const {
  std::shared_lock lock(mutex_);
  std::vector<BatchView> out;
  for (const std::string& id : batch_order_) out.push_back(view(batches_.at(id)));
  return out;
}

std::vector<Run> Engine::runs(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  return require_batch(batch_id).runs;
}

std::vector<ScoreCard> Engine::scorecards(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  std::vector<ScoreCard> out;
  for (const Sample& s : dataset_locked(batch_id).samples) out.push_back(s.card);
  return out;
}

std::vector<JudgeOutcome> Engine::judge_issues(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  std::vector<JudgeOutcome> out;
  for (const auto& [id, o] : require_batch(batch_id).issues) out.push_back(o);
  return out;
}

Dataset Engine::dataset_locked(const std::optional<std::string>& batch_id) const {
  Dataset d;
  auto add = [&](const BatchRecord& record) {
    for (const Run& r : record.runs) {
      if (auto it = samples_.find(r.run_id); it != samples_.end()) d.samples.push_back(it->second);
    }
  };
  if (batch_id) {
    add(require_batch(*batch_id));
  } else {
    for (const std::string& id : batch_order_) add(batches_.at(id));
  }
  return d;
}

Dataset Engine::dataset(const std::optional<std::string>& batch_id) const {
  std::shared_lock lock(mutex_);
  return dataset_locked(batch_id);
}

std::vector<Candidate> Engine::candidates_locked(
    const std::string& batch_id, const std::map<std::string, Sample>& samples) const {
  const BatchRecord& record = require_batch(batch_id);
  std::vector<Sample> batch_samples;
  for (const Run& r : record.runs) {
    if (auto it = samples.find(r.run_id); it != samples.end()) batch_samples.push_back(it->second);
  }
  std::vector<GroupScores> groups = group_scores(batch_samples, options_.thresholds.drift_source);
  CandidateInputs inputs;
  inputs.samples = batch_samples;
  inputs.groups = groups;
  for (const Run& r : record.runs) {
    if (manual_marks_.contains(r.run_id)) inputs.manual_marks.insert(r.run_id);
    auto issue = record.issues.find(r.run_id);
    if (issue != record.issues.end() && issue->second.uncertain() && !samples.contains(r.run_id)) {
      if (const Question* q = bank_->find(r.question_id)) inputs.uncertain.push_back(ref_of(r, *q));
    }
  }
  return failure_candidates(inputs, options_.thresholds);
}

std::vector<Candidate> Engine::candidates(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  return candidates_locked(batch_id, samples_);
}

// ---------------------------------------------------------------------------
// Review

std::vector<ReviewQueueEntry> Engine::review_queue(const QueueFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<ReviewQueueEntry> out;
  std::vector<std::string> ids = filter.batch_id ? std::vector<std::string>{*filter.batch_id}
                                                 : batch_order_;
  for (const std::string& batch_id : ids) {
    const BatchRecord& record = require_batch(batch_id);
    std::map<std::string, std::vector<const Run*>> group_runs;
    for (const Run& r : record.runs) {
      auto s = samples_.find(r.run_id);
      const Question* q = s != samples_.end() ? &s->second.question : bank_->find(r.question_id);
      if (q) group_runs[q->group_id].push_back(&r);
    }
    for (const Candidate& c : candidates_locked(batch_id, samples_)) {
      if (filter.language && c.ref.language != *filter.language) continue;
      if (filter.topic && c.ref.topic != *filter.topic) continue;
      if (filter.reason && !c.reasons.contains(*filter.reason)) continue;
      ReviewQueueEntry e;
      e.ref = c.ref;
      e.reasons = c.reasons;
      if (auto s = samples_.find(c.ref.run_id); s != samples_.end()) {
        e.card = s->second.card;
        e.response_text = s->second.response_text;
      }
      if (!filter.include_reviewed && e.card && !e.card->review_trail.empty()) continue;

      const auto& members = group_runs[c.ref.group_id];
      if (members.size() == kLanguages.size()) {
        GroupContext g;
        g.group_id = c.ref.group_id;
        std::map<Language, int> totals;
        for (const Run* r : members) {
          GroupMember m{r->language, r->question_id, r->run_id, r->response_text.value_or(""),
                        std::nullopt, std::nullopt};
          if (auto s = samples_.find(r->run_id); s != samples_.end()) {
            int total = options_.thresholds.drift_source == DriftScoreSource::judge_total
                            ? s->second.card.total
                            : s->second.card.effective_total();
            m.total = total;
            m.risk = s->second.card.effective_risk();
            totals[r->language] = total;
          }
          g.members.push_back(std::move(m));
        }
        std::sort(g.members.begin(), g.members.end(),
                  [](const GroupMember& a, const GroupMember& b) { return a.language < b.language; });
        if (totals.size() == kLanguages.size()) {
          auto [lo, hi] = std::minmax_element(
              totals.begin(), totals.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
          g.drift = hi->second - lo->second;
        }
        e.group = std::move(g);
      }
      auto existing = ledger_.find_by_source(c.ref.question_id, c.ref.batch_id);
      e.state = existing ? std::string(to_string(existing->state)) : "open";
      out.push_back(std::move(e));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ReviewQueueEntry& a, const ReviewQueueEntry& b) {
    int ta = a.card ? a.card->effective_total() : -1;
    int tb = b.card ? b.card->effective_total() : -1;
    if (ta != tb) return ta < tb;
    int ra = a.card ? severity(a.card->effective_risk()) : 0;
    int rb = b.card ? severity(b.card->effective_risk()) : 0;
    if (ra != rb) return ra > rb;
    return a.ref.run_id < b.ref.run_id;
  });
  return out;
}

void Engine::set_manual_mark(const std::string& run_id, bool marked) {
  std::unique_lock lock(mutex_);
  bool known = samples_.contains(run_id);
  for (const auto& [id, record] : batches_) {
    for (const Run& r : record.runs) known = known || r.run_id == run_id;
  }
  if (!known) throw Error(Errc::unknown_run, "unknown run '" + run_id + "'");
  if (marked) {
    manual_marks_.insert(run_id);
  } else {
    manual_marks_.erase(run_id);
  }
  save_locked();
}

Sample* Engine::find_sample(const std::string& run_id) {
  auto it = samples_.find(run_id);
  return it == samples_.end() ? nullptr : &it->second;
}

ReviewResult Engine::submit_review(const ReviewSubmission& submission) {
  std::unique_lock lock(mutex_);
  if (!submission.idempotency_key.empty()) {
    if (auto it = idempotency_.find(submission.idempotency_key); it != idempotency_.end()) {
      ReviewResult r = it->second;
      r.replayed = true;
      return r;
    }
  }
  Sample* sample = find_sample(submission.run_id);
  if (sample == nullptr) throw Error(Errc::unknown_run, "no judged run '" + submission.run_id + "'");
  const bool fail = submission.verdict.verdict == HumanVerdict::Verdict::fail;
  if (submission.mark && !fail) {
    throw Error(Errc::invalid_review, "only a fail verdict can mark a failure case");
  }

  ReviewResult result;
  const HumanVerdict* latest = sample->card.latest_verdict();
  if (latest && same_verdict(*latest, submission.verdict)) {
    result.card = sample->card;
    if (submission.mark) {
      result.created_case = ledger_.find_by_source(sample->question.question_id, sample->batch_id);
    }
    result.replayed = true;
  } else {
    HumanVerdict verdict = submission.verdict;
    if (verdict.reviewed_at == Timestamp{}) verdict.reviewed_at = options_.clock();
    ScoreCard updated = attach_human_review(sample->card, verdict);
    ScoreCard previous = sample->card;
    sample->card = updated;
    try {
      if (submission.mark) {
        std::vector<Candidate> cands = candidates_locked(sample->batch_id, samples_);
        result.created_case = ledger_.mark(*sample, cands, verdict.notes, verdict.reviewer_id);
      }
    } catch (...) {
      sample->card = previous;
      throw;
    }
    result.card = std::move(updated);
  }
  if (!submission.idempotency_key.empty()) idempotency_[submission.idempotency_key] = result;
  save_locked();
  return result;
}

// ---------------------------------------------------------------------------
// Failure cases

FailureCase Engine::mark_case(const std::string& run_id, const std::string& notes,
                              const std::string& reviewer_id) {
  std::unique_lock lock(mutex_);
  Sample* sample = find_sample(run_id);
  if (sample == nullptr) throw Error(Errc::unknown_run, "no judged run '" + run_id + "'");
  std::vector<Candidate> cands = candidates_locked(sample->batch_id, samples_);
  FailureCase c = ledger_.mark(*sample, cands, notes, reviewer_id);
  save_locked();
  return c;
}

FailureCase Engine::attach_patch(const std::string& case_id, const PatchDescriptor& patch) {
  std::unique_lock lock(mutex_);
  FailureCase c = ledger_.attach_patch(case_id, patch);
  save_locked();
  return c;
}

Batch Engine::generate_regression(const std::vector<std::string>& case_ids,
                                  const std::string& batch_id,
                                  const std::optional<SystemConfig>& config) {
  std::unique_lock lock(mutex_);
  if (batch_id.empty()) throw Error(Errc::bad_request, "batch_id is required");
  if (batches_.contains(batch_id)) {
    throw Error(Errc::duplicate_id, "batch '" + batch_id + "' already exists");
  }
  if (case_ids.empty()) throw Error(Errc::empty_regression, "no cases given");
  SystemConfig cfg;
  if (config) {
    cfg = *config;
  } else {
    auto first = ledger_.find(case_ids.front());
    if (!first) throw Error(Errc::unknown_case, "unknown case '" + case_ids.front() + "'");
    auto source = batches_.find(first->provenance.batch_id);
    if (source == batches_.end()) {
      throw Error(Errc::unknown_batch, "source batch of " + case_ids.front() + " is gone");
    }
    cfg = source->second.batch.config;
    for (const std::string& id : case_ids) {
      auto c = ledger_.find(id);
      if (!c) continue;
      for (const Patch& p : c->patches) {
        if (!p.target_template_version.empty() &&
            compare_versions(p.target_template_version, cfg.template_version) > 0) {
          cfg.template_version = p.target_template_version;
        }
      }
    }
  }
  Batch batch = ledger_.generate_regression_batch(case_ids, *bank_, cfg, batch_id);
  batches_[batch_id] = BatchRecord{batch, {}, {}, false};
  batch_order_.push_back(batch_id);
  save_locked();
  return batch;
}

std::vector<FailureCase> Engine::record_regression(const std::string& batch_id) {
  std::unique_lock lock(mutex_);
  const BatchRecord& record = require_batch(batch_id);
  if (!record.judged) throw Error(Errc::bad_request, "batch " + batch_id + " has not been judged");
  RegressionEvidence evidence;
  evidence.batch_id = batch_id;
  evidence.template_version = record.batch.config.template_version;
  evidence.question_ids = record.batch.question_ids;
  evidence.candidates = candidates_locked(batch_id, samples_);

  std::vector<FailureCase> out;
  for (const FailureCase& c : ledger_.cases()) {
    if (c.state != CaseState::InRegression || c.active_regression_batch != batch_id) continue;
    FailureCase updated =
        ledger_.record_regression_outcome(c.case_id, evidence, options_.thresholds);
    if (updated.state == CaseState::InRegression) {
      updated = ledger_.try_close(c.case_id, options_.thresholds);
    }
    out.push_back(std::move(updated));
  }
  if (out.empty()) {
    throw Error(Errc::not_in_regression, "no case is waiting on batch " + batch_id);
  }
  save_locked();
  return out;
}

FailureCase Engine::close_case(const std::string& case_id) {
  std::unique_lock lock(mutex_);
  FailureCase c = ledger_.try_close(case_id, options_.thresholds);
  save_locked();
  return c;
}

FailureCase Engine::reopen_case(const std::string& case_id, const std::string& evidence_batch_id) {
  std::unique_lock lock(mutex_);
  RecurrenceEvidence evidence;
  evidence.batch_id = evidence_batch_id;
  if (!evidence_batch_id.empty() && batches_.contains(evidence_batch_id)) {
    for (const Candidate& c : candidates_locked(evidence_batch_id, samples_)) {
      evidence.candidate_question_ids.push_back(c.ref.question_id);
    }
  } else if (!evidence_batch_id.empty()) {
    throw Error(Errc::unknown_batch, "unknown batch '" + evidence_batch_id + "'");
  }
  FailureCase c = ledger_.reopen_on_recurrence(case_id, evidence);
  save_locked();
  return c;
}

std::vector<FailureCase> Engine::cases() const {
  std::shared_lock lock(mutex_);
  return ledger_.cases();
}

FailureCase Engine::find_case(const std::string& case_id) const {
  std::shared_lock lock(mutex_);
  auto c = ledger_.find(case_id);
  if (!c) throw Error(Errc::unknown_case, "unknown case '" + case_id + "'");
  return *c;
}

std::vector<LedgerEvent> Engine::events() const {
  std::shared_lock lock(mutex_);
  return ledger_.events();
}

std::vector<std::string> Engine::audit() const {
  std::shared_lock lock(mutex_);
  return ledger_.audit();
}

LifecycleBoard Engine::lifecycle_board() const {
  std::shared_lock lock(mutex_);
  LifecycleBoard b;
  for (CaseState s : kCaseStates) b.counts[s] = 0;
  b.cases = ledger_.cases();
  for (const FailureCase& c : b.cases) ++b.counts[c.state];
  return b;
}

// ---------------------------------------------------------------------------
// Reports and CSV

PilotReport Engine::pilot_report(const std::optional<std::string>& batch_id,
                                 const ReportOptions& options) const {
  std::shared_lock lock(mutex_);
  return pilot_summary(dataset_locked(batch_id), options_.thresholds, options);
}

StaticReport Engine::static_report(const std::optional<std::string>& batch_id) const {
  std::shared_lock lock(mutex_);
  return static_baseline_report(dataset_locked(batch_id), options_.thresholds);
}

ComparisonReport Engine::comparison(const std::optional<std::string>& batch_id) const {
  std::shared_lock lock(mutex_);
  Dataset d = dataset_locked(batch_id);
  return comparison_report(pilot_summary(d, options_.thresholds),
                           static_baseline_report(d, options_.thresholds));
}

std::vector<CsvFile> Engine::export_csv(const std::optional<std::string>& batch_id,
                                        ExportScope scope, bool include_text) const {
  std::shared_lock lock(mutex_);
  return treval::export_csv(dataset_locked(batch_id), scope, include_text);
}

CsvImportResult Engine::import_csv(std::span<const CsvFile> files) {
  CsvImportResult result = treval::import_csv(files);
  std::unique_lock lock(mutex_);
  for (const Sample& s : result.dataset.samples) {
    if (samples_.contains(s.run_id())) {
      throw Error(Errc::duplicate_run, "run " + s.run_id() + " is already stored");
    }
    for (const auto& [id, record] : batches_) {
      for (const Run& r : record.runs) {
        if (r.run_id == s.run_id()) {
          throw Error(Errc::duplicate_run, "run " + s.run_id() + " is already stored");
        }
      }
    }
  }
  for (const Sample& s : result.dataset.samples) {
    auto [it, inserted] = batches_.try_emplace(s.batch_id);
    BatchRecord& record = it->second;
    if (inserted) {
      record.batch.batch_id = s.batch_id;
      record.batch.config = s.config;
      record.batch.kind = s.batch_kind;
      record.batch.created_at = options_.clock();
      record.batch.status = BatchStatus::complete;
      record.judged = true;
      batch_order_.push_back(s.batch_id);
    }
    record.batch.question_ids.push_back(s.question.question_id);
    Run run;
    run.run_id = s.run_id();
    run.batch_id = s.batch_id;
    run.question_id = s.question.question_id;
    run.language = s.question.language;
    run.routed_model_id = s.routed_model_id;
    run.status = s.run_status;
    if (s.run_status == RunStatus::ok) run.response_text = s.response_text;
    record.runs.push_back(run);
    samples_[s.run_id()] = s;
  }
  save_locked();
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

void Engine::save() const {
  std::shared_lock lock(mutex_);
  save_locked();
}

void Engine::save_locked() const {
  if (options_.storage.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(options_.storage, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + options_.storage.string());

  json state;
  state["bank"] = {{"version", bank_->version()}, {"questions", bank_->questions()}};
  json batches = json::array();
  for (const std::string& id : batch_order_) {
    const BatchRecord& r = batches_.at(id);
    json issues = json::array();
    for (const auto& [run_id, o] : r.issues) issues.push_back(outcome_json(o));
    batches.push_back({{"batch", r.batch}, {"runs", r.runs}, {"issues", issues},
                       {"judged", r.judged}});
  }
  state["batches"] = std::move(batches);
  json samples = json::array();
  for (const auto& [id, s] : samples_) samples.push_back(s);
  state["samples"] = std::move(samples);
  state["manual_marks"] = manual_marks_;
  write_atomic(options_.storage / "state.json", state.dump(1));

  std::string log;
  for (const LedgerEvent& e : ledger_.events()) log += json(e).dump() + "\n";
  write_atomic(options_.storage / "events.jsonl", log);
}

void Engine::load() {
  const auto state_path = options_.storage / "state.json";
  const auto events_path = options_.storage / "events.jsonl";
  if (std::filesystem::exists(state_path)) {
    json state = json::parse(read_file(state_path));
    const json& bank = state.at("bank");
    bank_ = std::make_shared<QuestionBank>(bank.at("questions").get<std::vector<Question>>(),
                                           bank.at("version").get<std::uint64_t>());
    for (const json& b : state.at("batches")) {
      BatchRecord r;
      r.batch = b.at("batch").get<Batch>();
      r.runs = b.at("runs").get<std::vector<Run>>();
      for (const json& o : b.at("issues")) {
        JudgeOutcome outcome = outcome_from_json(o);
        r.issues[outcome.run_id] = std::move(outcome);
      }
      r.judged = b.value("judged", false);
      if (r.batch.status == BatchStatus::running) r.batch.status = BatchStatus::pending;
      batch_order_.push_back(r.batch.batch_id);
      batches_[r.batch.batch_id] = std::move(r);
    }
    for (const json& s : state.at("samples")) {
      Sample sample = s.get<Sample>();
      samples_[sample.run_id()] = std::move(sample);
    }
    manual_marks_ = state.value("manual_marks", std::set<std::string>{});
  }
  if (std::filesystem::exists(events_path)) {
    std::vector<LedgerEvent> log;
    std::istringstream in(read_file(events_path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) log.push_back(json::parse(line).get<LedgerEvent>());
    }
    ledger_.restore(std::move(log));
  }
}

}  // namespace treval
