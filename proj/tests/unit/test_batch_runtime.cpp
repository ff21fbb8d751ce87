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

#include <atomic>
#include <thread>

#include "support/pilot.hpp"
#include "treval/batch_runtime.hpp"

namespace treval {
namespace {

using testing::pilot_bank;
using testing::pilot_config;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::bad_request;
}

// Echoes the question id; fails for listed ids; records the peak number of
// concurrent calls.
class EchoBackend : public AgentBackend {
 public:
  explicit EchoBackend(std::set<std::string> failing = {}, bool slow = false)
      : failing_(std::move(failing)), slow_(slow) {}

  AgentReply generate(const AgentRequest& r) override {
    int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {}
    if (slow_) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --active_;
    if (failing_.contains(r.question_id)) throw std::runtime_error("socket closed");
    return AgentReply::ok(r.model_id + ":" + r.question_id);
  }

  int peak() const { return peak_; }

 private:
  std::set<std::string> failing_;
  bool slow_;
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

TEST(Routing, FollowsLanguagePaths) {
  SystemConfig c = pilot_config();
  c.model_a_id = "mA";
  c.model_b_id = "mB";
  EXPECT_EQ(route_language(c, Language::zh_cn), "mA");
  EXPECT_EQ(route_language(c, Language::zh_hk), "mB");
  EXPECT_EQ(route_language(c, Language::en), "mB");
  c.model_a_id = c.model_b_id = "m0";
  for (Language l : kLanguages) EXPECT_EQ(route_language(c, l), "m0");
}

TEST(CreateBatch, FullSelectionIsPending) {
  QuestionBank bank = pilot_bank();
  Batch b = create_batch("b1", pilot_config(), bank.questions(), BatchKind::evaluation);
  EXPECT_EQ(b.status, BatchStatus::pending);
  ASSERT_EQ(b.question_ids.size(), 81u);
  EXPECT_EQ(b.question_ids.front(), bank.questions().front().question_id);
}

TEST(CreateBatch, SingleRegressionQuestion) {
  QuestionBank bank = pilot_bank();
  std::vector<Question> one = {*bank.find("Q08_charged_zh_hk")};
  Batch b = create_batch("r1", pilot_config(), one, BatchKind::regression);
  EXPECT_EQ(b.kind, BatchKind::regression);
  EXPECT_EQ(b.question_ids, std::vector<std::string>{"Q08_charged_zh_hk"});
}

TEST(CreateBatch, Errors) {
  QuestionBank bank = pilot_bank();
  EXPECT_EQ(code_of([&] { create_batch("e", pilot_config(), {}, BatchKind::evaluation); }),
            Errc::empty_selection);
  SystemConfig bad = pilot_config();
  bad.model_b_id.clear();
  EXPECT_EQ(code_of([&] { create_batch("e", bad, bank.questions(), BatchKind::evaluation); }),
            Errc::invalid_config);
}

TEST(CreateBatch, DropsDuplicateSelections) {
  QuestionBank bank = pilot_bank();
  std::vector<Question> sel = {bank.questions()[3], bank.questions()[1], bank.questions()[3]};
  Batch b = create_batch("d", pilot_config(), sel, BatchKind::evaluation);
  EXPECT_EQ(b.question_ids, (std::vector<std::string>{bank.questions()[3].question_id,
                                                      bank.questions()[1].question_id}));
}

TEST(ExecuteBatch, AllSucceed) {
  QuestionBank bank = pilot_bank();
  EchoBackend agent;
  Batch b = create_batch("b", pilot_config(), bank.questions(), BatchKind::evaluation);
  auto runs = execute_batch(b, bank, agent);
  EXPECT_EQ(b.status, BatchStatus::complete);
  ASSERT_EQ(runs.size(), 81u);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].question_id, b.question_ids[i]);
    EXPECT_EQ(runs[i].status, RunStatus::ok);
    EXPECT_EQ(runs[i].run_id, make_run_id("b", runs[i].question_id));
    EXPECT_EQ(runs[i].routed_model_id, route_language(b.config, runs[i].language));
    EXPECT_EQ(*runs[i].response_text, runs[i].routed_model_id + ":" + runs[i].question_id);
  }
}

TEST(ExecuteBatch, FailureOnOneRunMakesBatchPartial) {
  QuestionBank bank = pilot_bank();
  std::vector<Question> sel(bank.questions().begin(), bank.questions().begin() + 3);
  EchoBackend agent({sel[1].question_id});
  Batch b = create_batch("p", pilot_config(), sel, BatchKind::evaluation);
  auto runs = execute_batch(b, bank, agent);
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0].status, RunStatus::ok);
  EXPECT_EQ(runs[1].status, RunStatus::backend_error);
  EXPECT_FALSE(runs[1].response_text.has_value());
  EXPECT_TRUE(runs[1].error_detail.has_value());
  EXPECT_EQ(runs[2].status, RunStatus::ok);
  EXPECT_EQ(b.status, BatchStatus::partial);
}

TEST(ExecuteBatch, TemplateBackendFailureList) {
  QuestionBank bank = pilot_bank();
  TemplateAnswerBackend agent({{"Q01_neutral_zh_cn", "a"}}, {"Q01_neutral_zh_cn"});
  std::vector<Question> sel = {*bank.find("Q01_neutral_zh_cn"), *bank.find("Q01_neutral_en")};
  Batch b = create_batch("t", pilot_config(), sel, BatchKind::evaluation);
  auto runs = execute_batch(b, bank, agent);
  EXPECT_EQ(runs[0].status, RunStatus::backend_error);
  EXPECT_EQ(runs[1].status, RunStatus::backend_error);  // no canned answer
}

TEST(ExecuteBatch, SecondExecutionIsRejected) {
  QuestionBank bank = pilot_bank();
  EchoBackend agent;
  Batch b = create_batch("x", pilot_config(), bank.questions(), BatchKind::evaluation);
  execute_batch(b, bank, agent);
  EXPECT_EQ(code_of([&] { execute_batch(b, bank, agent); }), Errc::already_executed);
}

TEST(ExecuteBatch, ParallelRunsKeepQuestionOrder) {
  QuestionBank bank = pilot_bank();
  EchoBackend agent({"Q05_mild_en"}, true);
  Batch b = create_batch("par", pilot_config(), bank.questions(), BatchKind::evaluation);
  auto runs = execute_batch(b, bank, agent, {4, system_now});
  ASSERT_EQ(runs.size(), b.question_ids.size());
  for (std::size_t i = 0; i < runs.size(); ++i) EXPECT_EQ(runs[i].question_id, b.question_ids[i]);
  EXPECT_EQ(b.status, BatchStatus::partial);
  EXPECT_GE(agent.peak(), 1);
  EXPECT_LE(agent.peak(), 4);
}

}  // namespace
}  // namespace treval
