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

#ifndef TREVAL_ENGINE_HPP_
#define TREVAL_ENGINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "treval/batch_runtime.hpp"
#include "treval/dataset.hpp"
#include "treval/drift_analysis.hpp"
#include "treval/failure_ledger.hpp"
#include "treval/judging.hpp"
#include "treval/question_bank.hpp"
#include "treval/reporting.hpp"
#include "treval/thresholds.hpp"

namespace treval {

struct EngineOptions {
  Thresholds thresholds;
  JudgeOptions judge;
  unsigned parallelism = 1;
  Clock clock = system_now;
  std::filesystem::path storage;  // empty: in-memory only
};

struct BankSummary {
  std::uint64_t version = 0;
  std::size_t questions = 0;
  std::size_t groups = 0;
  std::size_t complete_groups = 0;
  std::vector<GroupViolation> violations;
};

struct BatchView {
  Batch batch;
  int runs = 0;
  int ok_runs = 0;
  int backend_errors = 0;
  int judged = 0;
  int judge_issues = 0;
};

struct GroupMember {
  Language language = Language::zh_cn;
  std::string question_id;
  std::string run_id;
  std::string response_text;
  std::optional<int> total;
  std::optional<RiskLevel> risk;
};

struct GroupContext {
  std::string group_id;
  std::optional<int> drift;  // set when all three members are judged
  std::vector<GroupMember> members;
};

struct ReviewQueueEntry {
  SampleRef ref;
  std::set<TriageReason> reasons;
  std::optional<ScoreCard> card;  // absent for unjudgeable runs
  std::string response_text;
  std::optional<GroupContext> group;
  std::string state;  // "open", or the lifecycle state of a marked case
};

struct QueueFilter {
  std::optional<Language> language;
  std::optional<TopicType> topic;
  std::optional<TriageReason> reason;
  std::optional<std::string> batch_id;
  bool include_reviewed = false;

  // Keys: language, topic, reason, batch, include_reviewed.
  // Throws Error(Errc::unknown_filter_value).
  static QueueFilter parse(const std::map<std::string, std::string>& fields);
};

struct ReviewSubmission {
  std::string run_id;
  HumanVerdict verdict;
  bool mark = false;
  std::string idempotency_key;
};

struct ReviewResult {
  ScoreCard card;
  std::optional<FailureCase> created_case;
  bool replayed = false;  // the same submission was already applied
};

struct LifecycleBoard {
  std::map<CaseState, int> counts;
  std::vector<FailureCase> cases;
};

// Owns the question bank, batches, runs, score cards and the failure ledger,
// and persists them under `storage` (state.json plus events.jsonl).
// Mutations are serialized; reads take a shared lock.
class Engine {
 public:
  Engine(EngineOptions options, AgentBackend& agent, JudgeBackend& judge);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const Thresholds& thresholds() const { return options_.thresholds; }

  // Replaces the bank with a higher version. Throws BankImportError.
  BankSummary import_bank(std::string_view csv_text,
                          const BoundaryTable& boundaries = default_boundary_table());
  BankSummary bank_summary() const;
  std::vector<Question> list_questions(const QuestionFilter& filter) const;
  std::shared_ptr<const QuestionBank> bank() const;

  // Throws Errc::duplicate_id for a reused batch id.
  Batch create_batch(const std::string& batch_id, const SystemConfig& config,
                     const QuestionFilter& filter, BatchKind kind = BatchKind::evaluation);
  Batch create_batch(const std::string& batch_id, const SystemConfig& config,
                     const std::vector<std::string>& question_ids,
                     BatchKind kind = BatchKind::evaluation);
  BatchView execute_batch(const std::string& batch_id);
  // Judges every ok run. Re-judging replaces cards but keeps review trails.
  // In group_joint mode incomplete groups fall back to per-sample judging.
  BatchView judge_batch(const std::string& batch_id, D7Mode mode = D7Mode::per_sample);
  BatchView batch_status(const std::string& batch_id) const;
  std::vector<BatchView> list_batches() const;
  std::vector<Run> runs(const std::string& batch_id) const;
  std::vector<ScoreCard> scorecards(const std::string& batch_id) const;
  std::vector<JudgeOutcome> judge_issues(const std::string& batch_id) const;

  // Judged samples of one batch (question order), or of every batch.
  Dataset dataset(const std::optional<std::string>& batch_id = std::nullopt) const;
  std::vector<Candidate> candidates(const std::string& batch_id) const;

  // Ordered by effective total ascending, then risk severity descending,
  // then run_id. Unjudgeable runs come first.
  std::vector<ReviewQueueEntry> review_queue(const QueueFilter& filter = {}) const;
  void set_manual_mark(const std::string& run_id, bool marked);

  // Stores the verdict and, for a fail with `mark`, opens the failure case in
  // the same step. Repeating the latest verdict or an idempotency key returns
  // the stored result. Throws Errc::unknown_run, Errc::invalid_review.
  ReviewResult submit_review(const ReviewSubmission& submission);

  FailureCase mark_case(const std::string& run_id, const std::string& notes,
                        const std::string& reviewer_id);
  FailureCase attach_patch(const std::string& case_id, const PatchDescriptor& patch);
  // Without an explicit config the regression batch reuses the source batch
  // config, raised to the newest patch target template version.
  Batch generate_regression(const std::vector<std::string>& case_ids, const std::string& batch_id,
                            const std::optional<SystemConfig>& config = std::nullopt);
  // Records the outcome of an executed and judged regression batch for every
  // case waiting on it, then closes the ones that reached close_n.
  std::vector<FailureCase> record_regression(const std::string& batch_id);
  FailureCase close_case(const std::string& case_id);
  FailureCase reopen_case(const std::string& case_id, const std::string& evidence_batch_id);
  std::vector<FailureCase> cases() const;
  FailureCase find_case(const std::string& case_id) const;
  std::vector<LedgerEvent> events() const;
  std::vector<std::string> audit() const;
  LifecycleBoard lifecycle_board() const;

  PilotReport pilot_report(const std::optional<std::string>& batch_id,
                           const ReportOptions& options = {}) const;
  StaticReport static_report(const std::optional<std::string>& batch_id) const;
  ComparisonReport comparison(const std::optional<std::string>& batch_id) const;

  std::vector<CsvFile> export_csv(const std::optional<std::string>& batch_id, ExportScope scope,
                                  bool include_text) const;
  // Imported samples join the engine as complete batches. Throws
  // Errc::duplicate_run when a run id is already known.
  CsvImportResult import_csv(std::span<const CsvFile> files);

  void save() const;

 private:
  struct BatchRecord {
    Batch batch;
    std::vector<Run> runs;
    std::map<std::string, JudgeOutcome> issues;  // by run id
    bool judged = false;
  };

  BatchRecord& require_batch(const std::string& batch_id);
  const BatchRecord& require_batch(const std::string& batch_id) const;
  BatchView view(const BatchRecord& record) const;
  Dataset dataset_locked(const std::optional<std::string>& batch_id) const;
  std::vector<Candidate> candidates_locked(const std::string& batch_id,
                                           const std::map<std::string, Sample>& samples) const;
  Sample* find_sample(const std::string& run_id);
  Batch create_batch_locked(const std::string& batch_id, const SystemConfig& config,
                            std::vector<Question> selection, BatchKind kind);
  void store_batch_sample(BatchRecord& record, const Run& run, const ScoreCard& card);
  void save_locked() const;
  void load();

  EngineOptions options_;
  AgentBackend& agent_;
  JudgeBackend& judge_;

  mutable std::shared_mutex mutex_;
  std::shared_ptr<const QuestionBank> bank_;
  std::vector<std::string> batch_order_;
  std::map<std::string, BatchRecord> batches_;
  std::map<std::string, Sample> samples_;  // judged runs by run id
  std::set<std::string> manual_marks_;
  std::map<std::string, ReviewResult> idempotency_;
  FailureLedger ledger_;
};

}  // namespace treval

#endif  // TREVAL_ENGINE_HPP_
