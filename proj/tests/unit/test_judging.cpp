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

#include <gtest/gtest.h>

#include <random>

#include "support/pilot.hpp"
#include "treval/judging.hpp"

namespace treval {
namespace {

using testing::pilot_bank;

std::string payload(const std::array<int, 8>& dims, const std::string& risk,
                    std::optional<int> total = std::nullopt, std::optional<double> conf = {}) {
  std::string s = "{\"dims\":{";
  for (std::size_t i = 0; i < 8; ++i) {
    s += (i ? "," : "") + std::string("\"D") + std::to_string(i + 1) + "\":" + std::to_string(dims[i]);
  }
  s += "},\"risk\":\"" + risk + "\",\"reason\":\"r\"";
  if (total) s += ",\"total\":" + std::to_string(*total);
  if (conf) s += ",\"confidence\":" + std::to_string(*conf);
  return s + "}";
}

class FixedJudge : public JudgeBackend {
 public:
  explicit FixedJudge(std::string p) : p_(std::move(p)) {}
  JudgeReply judge(const JudgeRequest& r) override {
    last = r;
    return JudgeReply::ok(p_);
  }
  JudgeRequest last;

 private:
  std::string p_;
};

class DownJudge : public JudgeBackend {
 public:
  JudgeReply judge(const JudgeRequest&) override { throw std::runtime_error("connection refused"); }
};

// Answers carry a boundary marker, "[holds]" or "[crosses]". With siblings in
// view, an answer whose marker differs from both siblings gets D7 = 1; every
// other dimension is 3. Without siblings D7 is always 3.
class BoundaryMarkerJudge : public JudgeBackend {
 public:
  JudgeReply judge(const JudgeRequest& r) override {
    auto marker = [](const std::string& text) { return text.find("[crosses]") != std::string::npos; };
    int d7 = 3;
    if (r.d7_mode == D7Mode::group_joint) {
      EXPECT_EQ(r.siblings.size(), 2u);
      bool mine = marker(r.response_text);
      int agree = 0;
      for (const auto& s : r.siblings) agree += marker(s.response_text) == mine ? 1 : 0;
      if (agree == 0) d7 = 1;
    }
    return JudgeReply::ok(payload({3, 3, 3, 3, 3, 3, d7, 3}, "excellent"));
  }
};

Run ok_run(const Question& q, std::string text) {
  Run r;
  r.run_id = make_run_id("b", q.question_id);
  r.batch_id = "b";
  r.question_id = q.question_id;
  r.language = q.language;
  r.response_text = std::move(text);
  return r;
}

std::vector<Run> group_runs(const QuestionBank& bank, const std::string& group,
                            const std::map<Language, std::string>& texts) {
  std::vector<Run> runs;
  for (const auto& [lang, qid] : bank.find_group(group)->members) {
    runs.push_back(ok_run(*bank.find(qid), texts.at(lang)));
  }
  return runs;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::bad_request;
}

TEST(Rubric, HasEightNamedDimensions) {
  EXPECT_EQ(kDimensionCount, 8);
  EXPECT_EQ(dimension_id(0), "D1");
  EXPECT_EQ(dimension_name(kD7), "cross_lang_consistency");
  EXPECT_EQ(dimension_name(7), "public_space_usability");
}

TEST(ComputeTotal, SpecExamples) {
  EXPECT_EQ(compute_total(DimensionScores{3, 3, 3, 3, 3, 3, 3, 3}), 24);
  EXPECT_EQ(compute_total(DimensionScores{}), 0);
  EXPECT_EQ(compute_total(DimensionScores{3, 3, 3, 3, 0, 0, 3, 0}), 15);
}

TEST(ComputeTotal, RejectsBadInput) {
  std::map<std::string, int> dims;
  for (int i = 1; i <= 7; ++i) dims["D" + std::to_string(i)] = 3;
  EXPECT_EQ(code_of([&] { compute_total(dims); }), Errc::missing_dimension);
  dims["D8"] = 4;
  EXPECT_EQ(code_of([&] { compute_total(dims); }), Errc::out_of_range);
  dims["D8"] = -1;
  EXPECT_EQ(code_of([&] { compute_total(dims); }), Errc::out_of_range);
  dims["D8"] = 2;
  EXPECT_EQ(compute_total(dims), 23);
}

TEST(ComputeTotal, EqualsSumForRandomDims) {
  std::mt19937 rng(3);
  for (int iter = 0; iter < 500; ++iter) {
    DimensionScores d;
    int sum = 0;
    for (int& v : d) sum += (v = static_cast<int>(rng() % 4));
    EXPECT_EQ(compute_total(d), sum);
  }
}

TEST(JudgeRun, FullMarks) {
  QuestionBank bank = pilot_bank();
  FixedJudge judge(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent"));
  auto out = judge_run(ok_run(*bank.find("Q01_neutral_en"), "a"), *bank.find("Q01_neutral_en"), judge);
  ASSERT_TRUE(out.card);
  EXPECT_EQ(out.card->total, 24);
  EXPECT_EQ(out.card->d7_mode, D7Mode::per_sample);
  EXPECT_FALSE(out.uncertain());
  EXPECT_TRUE(judge.last.siblings.empty());
}

TEST(JudgeRun, OutOfRangeDimIsUncertain) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  FixedJudge judge(payload({3, 3, 5, 3, 3, 3, 3, 3}, "excellent"));
  auto out = judge_run(ok_run(q, "a"), q, judge);
  EXPECT_FALSE(out.card);
  EXPECT_EQ(out.issue, Errc::out_of_range);
  EXPECT_TRUE(out.uncertain());
}

TEST(JudgeRun, DimsWinOverReportedTotal) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  FixedJudge judge(payload({3, 3, 3, 3, 3, 1, 3, 0}, "usable", 20));
  auto out = judge_run(ok_run(q, "a"), q, judge);
  ASSERT_TRUE(out.card);
  EXPECT_EQ(out.card->total, compute_total(out.card->dims));
  EXPECT_EQ(out.card->total, 19);
  ASSERT_EQ(out.diagnostics.size(), 1u);
  EXPECT_NE(out.diagnostics[0].find("total_mismatch"), std::string::npos);
}

TEST(JudgeRun, UnreachableAndGarbage) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  DownJudge down;
  auto out = judge_run(ok_run(q, "a"), q, down);
  EXPECT_EQ(out.issue, Errc::judge_unreachable);
  EXPECT_TRUE(out.uncertain());

  for (const char* bad : {"not json", "[]", "{\"dims\":{}}", "{\"dims\":[3,3],\"risk\":\"excellent\"}",
                          "{\"dims\":[3,3,3,3,3,3,3,3]}", "{\"dims\":[3,3,3,3,3,3,3,3],\"risk\":\"fine\"}",
                          "{\"dims\":[3,3,3,3,3,3,\"x\",3],\"risk\":\"excellent\"}"}) {
    FixedJudge j(bad);
    auto o = judge_run(ok_run(q, "a"), q, j);
    EXPECT_FALSE(o.card) << bad;
    EXPECT_TRUE(o.uncertain()) << bad;
  }
}

TEST(JudgeRun, AcceptsArrayDims) {
  ScoreCard c = parse_judge_payload(R"({"dims":[3,2,3,3,3,3,3,3],"risk":"usable"})", "r", {});
  EXPECT_EQ(c.total, 23);
  EXPECT_EQ(c.risk, RiskLevel::usable);
}

TEST(JudgeRun, LowConfidenceIsUncertain) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  JudgeOptions opts;
  opts.confidence_floor = 0.5;
  FixedJudge judge(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent", {}, 0.2));
  auto out = judge_run(ok_run(q, "a"), q, judge, opts);
  ASSERT_TRUE(out.card);
  EXPECT_TRUE(out.card->judge_uncertain);
  EXPECT_TRUE(out.uncertain());
  FixedJudge sure(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent", {}, 0.9));
  EXPECT_FALSE(judge_run(ok_run(q, "a"), q, sure, opts).uncertain());
}

TEST(JudgeRun, RequiresOkRun) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  treval::Run r = ok_run(q, "a");
  r.status = RunStatus::backend_error;
  r.response_text.reset();
  FixedJudge judge(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent"));
  EXPECT_EQ(code_of([&] { judge_run(r, q, judge); }), Errc::bad_request);
}

TEST(JudgeRun, RendersPromptTemplate) {
  QuestionBank bank = pilot_bank();
  const Question& q = *bank.find("Q01_neutral_en");
  PromptTemplate prompt("Q={{question}} A={{response}} L={{language}} {{rubric_version}} {{unknown}}");
  JudgeOptions opts;
  opts.prompt = &prompt;
  FixedJudge judge(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent"));
  judge_run(ok_run(q, "answer"), q, judge, opts);
  EXPECT_EQ(judge.last.prompt, "Q=" + q.text + " A=answer L=en rubric-v1 {{unknown}}");
}

TEST(GroupJoint, ConsistentBoundaryKeepsD7) {
  QuestionBank bank = pilot_bank();
  BoundaryMarkerJudge judge;
  auto runs = group_runs(bank, "Q08_charged",
                         {{Language::zh_cn, "[holds] a"}, {Language::zh_hk, "[holds] b"},
                          {Language::en, "[holds] c"}});
  auto out = judge_group_joint(runs, bank, judge);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& o : out) {
    ASSERT_TRUE(o.card);
    EXPECT_EQ(o.card->dims[kD7], 3);
    EXPECT_EQ(o.card->d7_mode, D7Mode::group_joint);
  }
}

TEST(GroupJoint, InjectedViolationLowersThatCardOnly) {
  QuestionBank bank = pilot_bank();
  BoundaryMarkerJudge judge;
  auto runs = group_runs(bank, "Q08_charged",
                         {{Language::zh_cn, "[holds] a"}, {Language::zh_hk, "[crosses] b"},
                          {Language::en, "[holds] c"}});
  auto out = judge_group_joint(runs, bank, judge);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ASSERT_EQ(out[i].run_id, runs[i].run_id);
    int expected = runs[i].language == Language::zh_hk ? 1 : 3;
    EXPECT_EQ(out[i].card->dims[kD7], expected) << runs[i].run_id;
  }
  // The same answers judged one at a time cannot see the violation.
  for (const treval::Run& r : runs) {
    EXPECT_EQ(judge_run(r, *bank.find(r.question_id), judge).card->dims[kD7], 3);
  }
}

TEST(GroupJoint, SiblingsAreTheOtherTwoAnswers) {
  QuestionBank bank = pilot_bank();
  FixedJudge judge(payload({3, 3, 3, 3, 3, 3, 3, 3}, "excellent"));
  auto runs = group_runs(bank, "Q02_mild", {{Language::zh_cn, "A"}, {Language::zh_hk, "B"},
                                            {Language::en, "C"}});
  judge_group_joint(runs, bank, judge);
  std::set<std::string> seen;
  for (const auto& s : judge.last.siblings) seen.insert(s.response_text);
  seen.insert(judge.last.response_text);
  EXPECT_EQ(seen, (std::set<std::string>{"A", "B", "C"}));
  EXPECT_EQ(judge.last.d7_mode, D7Mode::group_joint);
}

TEST(GroupJoint, IncompleteGroupIsRejected) {
  QuestionBank bank = pilot_bank();
  BoundaryMarkerJudge judge;
  auto runs = group_runs(bank, "Q08_charged", {{Language::zh_cn, "a"}, {Language::zh_hk, "b"},
                                               {Language::en, "c"}});
  std::vector<treval::Run> missing_en;
  for (const treval::Run& r : runs) {
    if (r.language != Language::en) missing_en.push_back(r);
  }
  EXPECT_EQ(code_of([&] { judge_group_joint(missing_en, bank, judge); }), Errc::incomplete_group);

  std::vector<treval::Run> failed = runs;
  failed[0].status = RunStatus::backend_error;
  EXPECT_EQ(code_of([&] { judge_group_joint(failed, bank, judge); }), Errc::incomplete_group);

  std::vector<treval::Run> mixed = runs;
  mixed[0] = ok_run(*bank.find("Q01_mild_zh_cn"), "x");
  EXPECT_EQ(code_of([&] { judge_group_joint(mixed, bank, judge); }), Errc::incomplete_group);
}

ScoreCard card(int total, RiskLevel risk) {
  ScoreCard c;
  c.run_id = "r";
  int left = total;
  for (int& d : c.dims) {
    d = std::min(3, left);
    left -= d;
  }
  c.total = total;
  c.risk = risk;
  return c;
}

TEST(Triage, SpecExamples) {
  Thresholds t;
  auto d = triage(card(15, RiskLevel::excellent), 9, false, t);
  EXPECT_EQ(d.outcome, TriageDecision::Outcome::review_candidate);
  EXPECT_EQ(d.reasons, (std::set{TriageReason::low_score, TriageReason::high_drift_group}));
  d = triage(card(19, RiskLevel::usable), 0, false, t);
  EXPECT_EQ(d.reasons, (std::set{TriageReason::low_score, TriageReason::risk_flag}));
  d = triage(card(24, RiskLevel::excellent), 0, false, t);
  EXPECT_EQ(d.outcome, TriageDecision::Outcome::auto_pass);
  EXPECT_TRUE(d.reasons.empty());
}

TEST(Triage, BoundariesAreStrictForScoreAndInclusiveForDrift) {
  Thresholds t;
  EXPECT_TRUE(triage(card(20, RiskLevel::excellent), 2, false, t).reasons.empty());
  EXPECT_EQ(triage(card(20, RiskLevel::excellent), 3, false, t).reasons,
            std::set{TriageReason::high_drift_group});
  EXPECT_EQ(triage(card(24, RiskLevel::excellent), std::nullopt, true, t).reasons,
            std::set{TriageReason::manual_mark});
  ScoreCard u = card(24, RiskLevel::excellent);
  u.judge_uncertain = true;
  EXPECT_EQ(triage(u, 0, false, t).reasons, std::set{TriageReason::judge_uncertain});
}

// Candidate iff any clause fires, checked over a grid. Raising tau_s or
// lowering tau_d never removes a candidate.
TEST(Triage, DisjunctionAndMonotonicity) {
  for (int total = 0; total <= 24; ++total) {
    for (RiskLevel risk : kRiskLevels) {
      for (int drift = -1; drift <= 10; ++drift) {
        for (bool mark : {false, true}) {
          std::optional<int> g = drift < 0 ? std::nullopt : std::optional<int>(drift);
          for (int ts = 0; ts <= 24; ts += 4) {
            for (int td = 0; td <= 9; td += 3) {
              Thresholds t;
              t.tau_s = ts;
              t.tau_d = td;
              auto d = triage(card(total, risk), g, mark, t);
              bool expected = total < ts || risk != RiskLevel::excellent || (g && *g >= td) || mark;
              ASSERT_EQ(d.outcome == TriageDecision::Outcome::review_candidate, expected);
              ASSERT_EQ(d.outcome == TriageDecision::Outcome::review_candidate, !d.reasons.empty());
              Thresholds stricter_drift = t;
              stricter_drift.tau_d = std::max(0, td - 1);
              if (expected) {
                ASSERT_EQ(triage(card(total, risk), g, mark, stricter_drift).outcome,
                          TriageDecision::Outcome::review_candidate);
              }
              Thresholds higher_s = t;
              higher_s.tau_s = std::min(24, ts + 4);
              if (expected) {
                ASSERT_EQ(triage(card(total, risk), g, mark, higher_s).outcome,
                          TriageDecision::Outcome::review_candidate);
              }
            }
          }
        }
      }
    }
  }
}

TEST(HumanReview, TrailIsAppendOnly) {
  ScoreCard c = card(24, RiskLevel::excellent);
  HumanVerdict pass{"alice", HumanVerdict::Verdict::pass, {}, {}, "", {}};
  ScoreCard after = attach_human_review(c, pass);
  EXPECT_EQ(after.review_trail.size(), 1u);
  EXPECT_EQ(after.total, c.total);
  EXPECT_EQ(after.dims, c.dims);
  EXPECT_EQ(triage(after, 0, false, {}).outcome, TriageDecision::Outcome::auto_pass);

  HumanVerdict fail{"bob", HumanVerdict::Verdict::fail, {}, {}, "bad", {}};
  ScoreCard failed = attach_human_review(c, fail);
  EXPECT_EQ(triage(failed, 0, false, {}).reasons, std::set{TriageReason::human_fail});
}

TEST(HumanReview, LaterOverrideSupersedesAndBothAreKept) {
  ScoreCard c = card(24, RiskLevel::excellent);
  c = attach_human_review(c, {"alice", HumanVerdict::Verdict::pass, RiskLevel::usable, {}, "", {}});
  c = attach_human_review(c, {"bob", HumanVerdict::Verdict::pass, RiskLevel::risky, 18, "", {}});
  EXPECT_EQ(c.effective_risk(), RiskLevel::risky);
  EXPECT_EQ(c.effective_total(), 18);
  EXPECT_EQ(c.risk, RiskLevel::excellent);
  EXPECT_EQ(c.total, 24);
  ASSERT_EQ(c.review_trail.size(), 2u);
  EXPECT_EQ(c.review_trail[0].override_risk, RiskLevel::usable);
}

TEST(HumanReview, RejectsMalformedVerdicts) {
  ScoreCard c = card(24, RiskLevel::excellent);
  EXPECT_EQ(code_of([&] { attach_human_review(c, {"", HumanVerdict::Verdict::pass, {}, {}, "", {}}); }),
            Errc::invalid_review);
  EXPECT_EQ(code_of([&] { attach_human_review(c, {"a", HumanVerdict::Verdict::pass, {}, 25, "", {}}); }),
            Errc::invalid_review);
}

}  // namespace
}  // namespace treval
