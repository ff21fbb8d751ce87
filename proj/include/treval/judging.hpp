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

#ifndef TREVAL_JUDGING_HPP_
#define TREVAL_JUDGING_HPP_

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treval/batch_runtime.hpp"
#include "treval/common.hpp"
#include "treval/question_bank.hpp"
#include "treval/thresholds.hpp"

namespace treval {

// D1..D8 of the eight-dimension rubric.
inline constexpr int kDimensionCount = 8;
inline constexpr int kMaxDimensionScore = 3;
inline constexpr int kMaxTotal = kDimensionCount * kMaxDimensionScore;
inline constexpr std::size_t kD7 = 6;  // index of cross_lang_consistency

std::string_view dimension_id(std::size_t index);    // "D1".."D8"
std::string_view dimension_name(std::size_t index);  // "user_invalidation", ...

using DimensionScores = std::array<int, kDimensionCount>;

// Sum of all eight dimensions. Keys are "D1".."D8". Throws
// Errc::missing_dimension or Errc::out_of_range.
int compute_total(const std::map<std::string, int>& dims);
int compute_total(const DimensionScores& dims);

enum class D7Mode { per_sample, group_joint };
std::string_view to_string(D7Mode mode);
D7Mode parse_d7_mode(std::string_view text);

struct HumanVerdict {
  enum class Verdict { pass, fail };

  std::string reviewer_id;
  Verdict verdict = Verdict::pass;
  std::optional<RiskLevel> override_risk;
  std::optional<int> override_total;
  std::string notes;
  Timestamp reviewed_at{};

  friend bool operator==(const HumanVerdict&, const HumanVerdict&) = default;
};

std::string_view to_string(HumanVerdict::Verdict v);
HumanVerdict::Verdict parse_verdict(std::string_view text);

// Judge output for one run. `review_trail` is append-only; the last entry is
// the effective human verdict.
struct ScoreCard {
  std::string run_id;
  DimensionScores dims{};
  int total = 0;
  RiskLevel risk = RiskLevel::excellent;
  std::string judge_reason;
  std::string judge_id;
  D7Mode d7_mode = D7Mode::per_sample;
  bool judge_uncertain = false;
  std::vector<HumanVerdict> review_trail;

  const HumanVerdict* latest_verdict() const {
    return review_trail.empty() ? nullptr : &review_trail.back();
  }
  bool human_failed() const {
    return latest_verdict() && latest_verdict()->verdict == HumanVerdict::Verdict::fail;
  }
  // Latest risk override in the trail, else the judge's label.
  RiskLevel effective_risk() const;
  // Latest total override in the trail, else the judge's total.
  int effective_total() const;

  friend bool operator==(const ScoreCard&, const ScoreCard&) = default;
};

// ---------------------------------------------------------------------------
// Judge backends

struct SiblingAnswer {
  Language language = Language::zh_cn;
  std::string question_id;
  std::string response_text;
};

struct JudgeRequest {
  std::string run_id;
  std::string question_id;
  std::string question_text;
  std::string response_text;
  Language language = Language::zh_cn;
  std::string rubric_version;
  D7Mode d7_mode = D7Mode::per_sample;
  std::vector<SiblingAnswer> siblings;  // group_joint only
  std::string prompt;                   // rendered judge prompt, may be empty
};

struct JudgeReply {
  bool reachable = true;
  std::string payload;  // JSON: {"dims": {...}, "risk": "...", "reason": "..."}
  std::string error;

  static JudgeReply ok(std::string payload) { return {true, std::move(payload), {}}; }
  static JudgeReply unreachable(std::string error) { return {false, {}, std::move(error)}; }
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual JudgeReply judge(const JudgeRequest& request) = 0;
};

// Canned payloads keyed by question_id (template-answer mode).
class TemplateJudge : public JudgeBackend {
 public:
  explicit TemplateJudge(std::map<std::string, std::string> payloads);
  // JSON object {question_id: payload object}.
  static TemplateJudge from_json_file(const std::string& path);

  JudgeReply judge(const JudgeRequest& request) override;

 private:
  std::map<std::string, std::string> payloads_;
};

// Judge prompt asset with {{placeholder}} substitution. Placeholders:
// question, response, language, rubric_version, d7_mode, siblings.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text) : text_(std::move(text)) {}
  static PromptTemplate from_file(const std::string& path);

  std::string render(const JudgeRequest& request) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct JudgeOptions {
  std::string judge_id = "template-judge";
  std::string rubric_version = "rubric-v1";
  double confidence_floor = 0.0;
  const PromptTemplate* prompt = nullptr;
};

// A judged run: either a valid card or an issue (unreachable judge, bad
// payload). `diagnostics` records non-fatal findings such as a total
// mismatch.
struct JudgeOutcome {
  std::string run_id;
  std::optional<ScoreCard> card;
  std::optional<Errc> issue;
  std::string issue_detail;
  std::vector<std::string> diagnostics;

  // Invalid output or a low-confidence card.
  bool uncertain() const { return issue.has_value() || (card && card->judge_uncertain); }
};

// Validates a raw judge payload. Dims win over any reported total. Throws
// Errc::unparseable_judge_output, Errc::missing_dimension or Errc::out_of_range.
ScoreCard parse_judge_payload(std::string_view payload, const std::string& run_id,
                              const JudgeOptions& options,
                              std::vector<std::string>* diagnostics = nullptr);

// Per-sample judging. Requires run.status == ok (Errc::bad_request otherwise).
JudgeOutcome judge_run(const Run& run, const Question& question, JudgeBackend& judge,
                       const JudgeOptions& options = {});

// Judges one trilingual group with every answer visible. Requires exactly one
// ok run per language; throws Errc::incomplete_group otherwise. Outcomes are
// returned in the order of `runs`.
std::vector<JudgeOutcome> judge_group_joint(std::span<const Run> runs, const QuestionBank& bank,
                                            JudgeBackend& judge,
                                            const JudgeOptions& options = {});

// ---------------------------------------------------------------------------
// Triage and review

enum class TriageReason {
  low_score,
  risk_flag,
  high_drift_group,
  manual_mark,
  judge_uncertain,
  human_fail,
};
std::string_view to_string(TriageReason reason);
TriageReason parse_triage_reason(std::string_view text);

struct TriageDecision {
  enum class Outcome { auto_pass, review_candidate };

  std::string run_id;
  Outcome outcome = Outcome::auto_pass;
  std::set<TriageReason> reasons;
};

// review_candidate iff any clause fires: effective total < tau_s, effective
// risk flagged, group drift >= tau_d, manual mark, uncertain judge output, or
// a human fail verdict.
TriageDecision triage(const ScoreCard& card, std::optional<int> group_drift, bool manual_mark,
                      const Thresholds& thresholds);

// Appends the verdict to the review trail. Throws Errc::invalid_review for an
// empty reviewer id.
ScoreCard attach_human_review(ScoreCard card, HumanVerdict verdict);

}  // namespace treval

#endif  // TREVAL_JUDGING_HPP_
