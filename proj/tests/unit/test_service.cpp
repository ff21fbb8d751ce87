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

#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "httplib.h"
#include "support/pilot.hpp"
#include "treval/config.hpp"
#include "treval/gateway.hpp"
#include "treval/http.hpp"
#include "treval/json_io.hpp"

namespace treval {
namespace {

using testing::fixture_path;
using testing::read_text;

constexpr const char* kToken = "secret";

// Answers for template_version tpl-2 carry a "[patched]" prefix; the judge
// gives those full marks and otherwise replays the pilot judgments.
class PatchAwareAgent : public AgentBackend {
 public:
  AgentReply generate(const AgentRequest& r) override {
    AgentReply reply = base_.generate(r);
    if (reply.response_text && r.template_version == "tpl-2") {
      reply.response_text = "[patched] " + *reply.response_text;
    }
    return reply;
  }

 private:
  TemplateAnswerBackend base_ = TemplateAnswerBackend::from_json_file(fixture_path("pilot/answers.json"));
};

class PatchAwareJudge : public JudgeBackend {
 public:
  JudgeReply judge(const JudgeRequest& r) override {
    if (r.response_text.starts_with("[patched]")) {
      return JudgeReply::ok(R"({"dims":[3,3,3,3,3,3,3,3],"risk":"excellent","reason":"ok"})");
    }
    return base_.judge(r);
  }

 private:
  TemplateJudge base_ = TemplateJudge::from_json_file(fixture_path("pilot/judgments.json"));
};

json config_json() { return json(testing::pilot_config()); }

struct Service {
  explicit Service(std::filesystem::path storage = {})
      : engine(options(std::move(storage)), agent, judge), gateway(engine, kToken) {}

  static EngineOptions options(std::filesystem::path storage) {
    EngineOptions o;
    o.storage = std::move(storage);
    o.clock = [] { return parse_timestamp("2026-04-01T00:00:00Z"); };
    return o;
  }

  Response call(const std::string& method, const std::string& path, const json& body = nullptr,
                std::map<std::string, std::string> query = {},
                std::map<std::string, std::string> headers = {}) {
    Request r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    r.headers = std::move(headers);
    r.headers.emplace("authorization", std::string("Bearer ") + kToken);
    if (!body.is_null()) r.body = body.dump();
    return gateway.handle(r);
  }

  json ok(const std::string& method, const std::string& path, const json& body = nullptr,
          std::map<std::string, std::string> query = {}) {
    Response r = call(method, path, body, std::move(query));
    EXPECT_LT(r.status, 300) << method << " " << path << ": " << r.body;
    return json::parse(r.body);
  }

  void seed(const std::string& batch = "pilot") {
    if (engine.bank_summary().questions == 0) {
      ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
    }
    ok("POST", "/batches", {{"batch_id", batch}, {"config", config_json()}});
    ok("POST", "/batches/" + batch + "/execute");
    ok("POST", "/batches/" + batch + "/judge");
  }

  PatchAwareAgent agent;
  PatchAwareJudge judge;
  Engine engine;
  Gateway gateway;
};

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("treval_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(Gateway, AuthRequiredExceptHealth) {
  Service s;
  Request r{"GET", "/health", {}, {}, ""};
  EXPECT_EQ(s.gateway.handle(r).status, 200);
  r.path = "/bank";
  EXPECT_EQ(s.gateway.handle(r).status, 401);
  r.headers["authorization"] = "Bearer wrong";
  Response denied = s.gateway.handle(r);
  EXPECT_EQ(denied.status, 401);
  EXPECT_EQ(json::parse(denied.body).at("error"), "unauthorized");
  EXPECT_EQ(s.call("GET", "/bank").status, 200);
  EXPECT_EQ(s.call("GET", "/nowhere").status, 404);
  EXPECT_EQ(s.call("DELETE", "/bank").status, 404);
}

TEST(Gateway, ErrorStatusMapping) {
  EXPECT_EQ(http_status(Errc::unknown_batch), 404);
  EXPECT_EQ(http_status(Errc::unknown_case), 404);
  EXPECT_EQ(http_status(Errc::duplicate_id), 409);
  EXPECT_EQ(http_status(Errc::illegal_transition), 409);
  EXPECT_EQ(http_status(Errc::judge_unreachable), 502);
  EXPECT_EQ(http_status(Errc::invalid_review), 400);
}

TEST(Gateway, BankImport) {
  Service s;
  json summary = s.ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
  EXPECT_EQ(summary.at("questions"), 81);
  EXPECT_EQ(summary.at("complete_groups"), 27);
  EXPECT_EQ(summary.at("version"), 1);

  Response as_csv = s.call("POST", "/bank/import", nullptr, {}, {{"content-type", "text/csv"}});
  EXPECT_EQ(as_csv.status, 200);
  EXPECT_EQ(json::parse(as_csv.body).at("questions"), 0);
  Request raw{"POST", "/bank/import", {}, {{"authorization", "Bearer secret"}, {"content-type", "text/csv"}},
              read_text(fixture_path("pilot/bank.csv"))};
  EXPECT_EQ(json::parse(s.gateway.handle(raw).body).at("version"), 3);

  std::string broken = read_text(fixture_path("pilot/bank.csv"));
  broken += "Q99_mild_xx,Q99_mild,xx,T1,mild,text\n";
  Response bad = s.call("POST", "/bank/import", {{"csv", broken}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_FALSE(json::parse(bad.body).at("rows").empty());
  EXPECT_EQ(s.ok("GET", "/bank").at("version"), 3);
  EXPECT_EQ(s.ok("GET", "/bank").at("questions"), 81);

  json t6 = s.ok("GET", "/bank/questions", nullptr, {{"topic", "T6"}});
  EXPECT_EQ(t6.size(), 9u);
  EXPECT_EQ(s.call("GET", "/bank/questions", nullptr, {{"topic", "T99"}}).status, 400);
}

TEST(Gateway, BatchLifecycle) {
  Service s;
  s.ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
  json b = s.ok("POST", "/batches", {{"batch_id", "pilot"}, {"config", config_json()}});
  EXPECT_EQ(b.at("question_ids").size(), 81u);
  EXPECT_EQ(s.call("POST", "/batches", {{"batch_id", "pilot"}, {"config", config_json()}}).status, 409);
  EXPECT_EQ(s.call("POST", "/batches", {{"batch_id", "x"}}).status, 400);
  json sub = s.ok("POST", "/batches", {{"batch_id", "sub"}, {"config", config_json()},
                                        {"filter", {{"language", "en"}, {"intensity", "charged"}}}});
  EXPECT_EQ(sub.at("question_ids").size(), 9u);

  json view = s.ok("POST", "/batches/pilot/execute");
  EXPECT_EQ(view.at("ok_runs"), 81);
  EXPECT_EQ(s.call("POST", "/batches/pilot/execute").status, 409);
  view = s.ok("POST", "/batches/pilot/judge", {{"d7_mode", "per_sample"}});
  EXPECT_EQ(view.at("judged"), 81);
  EXPECT_EQ(s.ok("GET", "/batches/pilot").at("judged"), 81);
  EXPECT_EQ(s.ok("GET", "/batches").size(), 2u);
  EXPECT_EQ(s.ok("GET", "/batches/pilot/runs").size(), 81u);
  json cards = s.ok("GET", "/batches/pilot/scorecards");
  EXPECT_EQ(cards.at("cards").size(), 81u);
  EXPECT_TRUE(cards.at("issues").empty());
  EXPECT_EQ(s.ok("GET", "/batches/pilot/candidates").size(), 16u);
  EXPECT_EQ(s.call("GET", "/batches/missing").status, 404);
  EXPECT_EQ(s.call("POST", "/batches/pilot/judge", {{"d7_mode", "sometimes"}}).status, 400);
}

TEST(Gateway, ReviewQueue) {
  Service s;
  s.seed();
  json q = s.ok("GET", "/review-queue");
  ASSERT_EQ(q.size(), 16u);
  EXPECT_EQ(q[0].at("ref").at("question_id"), "Q08_charged_zh_hk");
  EXPECT_EQ(q[0].at("card").at("total"), 15);
  ASSERT_FALSE(q[0].at("group").is_null());
  EXPECT_EQ(q[0].at("group").at("drift"), 9);
  std::map<std::string, int> siblings;
  for (const json& m : q[0].at("group").at("members")) {
    siblings[m.at("language").get<std::string>()] = m.at("total").get<int>();
  }
  EXPECT_EQ(siblings, (std::map<std::string, int>{{"en", 24}, {"zh_cn", 23}, {"zh_hk", 15}}));

  std::set<std::string> high = {"Q08_charged", "Q02_charged", "Q06_charged", "Q06_mild", "Q01_charged"};
  json drift = s.ok("GET", "/review-queue", nullptr, {{"reason", "high_drift_group"}});
  EXPECT_EQ(drift.size(), 15u);
  for (const json& e : drift) {
    EXPECT_TRUE(high.contains(e.at("ref").at("group_id").get<std::string>()));
    EXPECT_EQ(e.at("group").at("members").size(), 3u);
  }
  json t6 = s.ok("GET", "/review-queue", nullptr, {{"topic", "T6"}});
  EXPECT_EQ(t6.size(), 6u);
  for (const json& e : t6) EXPECT_TRUE(e.at("ref").at("question_id").get<std::string>().starts_with("Q06"));

  // Order is total ascending, reproducible.
  int last = -1;
  for (const json& e : q) {
    int total = e.at("card").at("total").get<int>();
    EXPECT_GE(total, last);
    last = total;
  }
  EXPECT_EQ(s.ok("GET", "/review-queue"), q);
}

TEST(Gateway, EmptyQueueForQuietBatch) {
  Service s;
  s.ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
  s.ok("POST", "/batches", {{"batch_id", "quiet"}, {"config", config_json()},
                            {"question_ids", {"Q01_neutral_zh_cn", "Q01_neutral_zh_hk", "Q01_neutral_en"}}});
  s.ok("POST", "/batches/quiet/execute");
  s.ok("POST", "/batches/quiet/judge");
  EXPECT_TRUE(s.ok("GET", "/review-queue").empty());
}

TEST(Gateway, SubmitReview) {
  Service s;
  s.seed();
  json pass = s.ok("POST", "/reviews", {{"run_id", "pilot:Q02_mild_zh_cn"}, {"reviewer_id", "r1"},
                                        {"verdict", "pass"}});
  EXPECT_TRUE(pass.at("case").is_null());
  EXPECT_EQ(pass.at("card").at("review_trail").size(), 1u);
  EXPECT_TRUE(s.ok("GET", "/cases").empty());
  // Reviewed entries leave the default queue.
  EXPECT_EQ(s.ok("GET", "/review-queue").size(), 15u);

  json fail = s.ok("POST", "/reviews", {{"run_id", "pilot:Q08_charged_zh_hk"}, {"reviewer_id", "r1"},
                                        {"verdict", "fail"}, {"notes", "boundary crossed"}, {"mark", true}});
  ASSERT_FALSE(fail.at("case").is_null());
  EXPECT_EQ(fail.at("case").at("case_id"), "FC-0001");
  EXPECT_EQ(fail.at("case").at("state"), "Marked");
  EXPECT_EQ(fail.at("card").at("review_trail").back().at("verdict"), "fail");

  EXPECT_EQ(s.call("POST", "/reviews", {{"run_id", "pilot:Q06_charged_en"}, {"reviewer_id", "r1"},
                                        {"verdict", "pass"}, {"mark", true}}).status, 400);
  EXPECT_EQ(s.call("POST", "/reviews", {{"run_id", "pilot:nope"}, {"reviewer_id", "r1"},
                                        {"verdict", "fail"}}).status, 404);
  EXPECT_EQ(s.call("POST", "/reviews", {{"run_id", "pilot:Q06_charged_en"}, {"verdict", "fail"}}).status, 400);
  EXPECT_EQ(s.call("POST", "/reviews", {{"run_id", "pilot:Q06_charged_en"}, {"reviewer_id", "r"},
                                        {"verdict", "fail"}, {"override_total", 30}}).status, 400);
  // Nothing from the rejected submissions was stored.
  json cards = s.ok("GET", "/batches/pilot/scorecards").at("cards");
  for (const json& c : cards) {
    if (c.at("run_id") == "pilot:Q06_charged_en") EXPECT_TRUE(c.at("review_trail").empty());
  }
}

TEST(Gateway, ConcurrentDuplicateSubmissionsHaveOneWinner) {
  for (int trial = 0; trial < 10; ++trial) {
    Service s;
    s.seed();
    json body = {{"run_id", "pilot:Q08_charged_zh_hk"}, {"reviewer_id", "r1"}, {"verdict", "fail"},
                 {"notes", "n"}, {"mark", true}};
    std::array<json, 2> out;
    std::vector<std::thread> clients;
    for (int i = 0; i < 2; ++i) {
      clients.emplace_back([&, i] { out[i] = s.ok("POST", "/reviews", body); });
    }
    for (auto& t : clients) t.join();
    EXPECT_EQ(out[0].at("card"), out[1].at("card"));
    EXPECT_NE(out[0].at("replayed").get<bool>(), out[1].at("replayed").get<bool>());
    EXPECT_EQ(out[0].at("card").at("review_trail").size(), 1u);
    int marked = 0;
    for (const json& e : s.ok("GET", "/events")) marked += e.at("to") == "Marked" ? 1 : 0;
    EXPECT_EQ(marked, 1);
    EXPECT_EQ(s.ok("GET", "/cases").size(), 1u);
  }
}

TEST(Gateway, IdempotencyKeyReplaysMutations) {
  Service s;
  s.ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
  json body = {{"batch_id", "b1"}, {"config", config_json()}};
  Response first = s.call("POST", "/batches", body, {}, {{"idempotency-key", "k1"}});
  Response again = s.call("POST", "/batches", body, {}, {{"idempotency-key", "k1"}});
  EXPECT_EQ(first.status, 201);
  EXPECT_EQ(again.status, first.status);
  EXPECT_EQ(again.body, first.body);
  EXPECT_EQ(s.call("POST", "/batches", body).status, 409);
  EXPECT_EQ(s.ok("GET", "/batches").size(), 1u);

  s.ok("POST", "/batches/b1/execute");
  s.ok("POST", "/batches/b1/judge");
  json mark = {{"run_id", "b1:Q08_charged_zh_hk"}, {"reviewer_id", "r"}};
  s.call("POST", "/cases/mark", mark);
  json patch = {{"kind", "prompt_line"}, {"description", "p"}};
  Response p1 = s.call("POST", "/cases/FC-0001/patch", patch, {}, {{"idempotency-key", "p"}});
  Response p2 = s.call("POST", "/cases/FC-0001/patch", patch, {}, {{"idempotency-key", "p"}});
  EXPECT_EQ(p1.body, p2.body);
  EXPECT_EQ(s.ok("GET", "/cases/FC-0001").at("patches").size(), 1u);
}

// Marks the top queue entry, patches it and runs three passing regression
// rounds; the board must show it Closed.
TEST(Gateway, BoardFollowsGovernanceScenario) {
  Service s;
  json board = s.ok("GET", "/board");
  EXPECT_EQ(board.at("total"), 0);
  for (const auto& [state, n] : board.at("counts").items()) EXPECT_EQ(n, 0) << state;

  s.seed();
  json top = s.ok("GET", "/review-queue")[0];
  std::string run_id = top.at("ref").at("run_id");
  s.ok("POST", "/reviews", {{"run_id", run_id}, {"reviewer_id", "r1"}, {"verdict", "fail"},
                            {"notes", "crossed"}, {"mark", true}});
  board = s.ok("GET", "/board");
  EXPECT_EQ(board.at("counts").at("Marked"), 1);
  EXPECT_EQ(board.at("total"), 1);

  EXPECT_EQ(s.call("POST", "/regressions", {{"case_ids", {"FC-0001"}}, {"batch_id", "early"}}).status, 409);
  s.ok("POST", "/cases/FC-0001/patch", {{"kind", "template_segment"}, {"description", "restate boundary"},
                                        {"target_template_version", "tpl-2"}});
  for (int round = 1; round <= 3; ++round) {
    std::string id = "reg-" + std::to_string(round);
    json batch = s.ok("POST", "/regressions", {{"case_ids", {"FC-0001"}}, {"batch_id", id}});
    EXPECT_EQ(batch.at("kind"), "regression");
    EXPECT_EQ(batch.at("config").at("template_version"), "tpl-2");
    EXPECT_EQ(batch.at("question_ids").size(), 3u);
    s.ok("POST", "/batches/" + id + "/execute");
    s.ok("POST", "/batches/" + id + "/judge");
    json recorded = s.ok("POST", "/regressions/" + id + "/record");
    ASSERT_EQ(recorded.size(), 1u);
    EXPECT_EQ(recorded[0].at("consecutive_passes"), round);
    EXPECT_EQ(recorded[0].at("state"), round < 3 ? "InRegression" : "Closed");
  }
  board = s.ok("GET", "/board");
  EXPECT_EQ(board.at("counts").at("Closed"), 1);
  EXPECT_EQ(board.at("counts").at("Marked"), 0);
  EXPECT_EQ(board.at("cases")[0].at("state"), "Closed");
  EXPECT_TRUE(s.ok("GET", "/audit").at("violations").empty());

  EXPECT_EQ(s.call("POST", "/cases/FC-0001/patch", {{"kind", "prompt_line"}, {"description", "x"}}).status, 409);
  EXPECT_EQ(s.call("POST", "/cases/FC-0001/reopen", {{"batch_id", ""}}).status, 400);
  json reopened = s.ok("POST", "/cases/FC-0001/reopen", {{"batch_id", "pilot"}});
  EXPECT_EQ(reopened.at("state"), "Marked");
  EXPECT_EQ(s.ok("GET", "/board").at("counts").at("Marked"), 1);
  EXPECT_EQ(s.call("GET", "/cases/FC-0404").status, 404);
}

TEST(Gateway, FailingRegressionReturnsCaseToPatched) {
  Service s;
  s.seed();
  s.ok("POST", "/cases/mark", {{"run_id", "pilot:Q08_charged_zh_hk"}, {"reviewer_id", "r"}});
  s.ok("POST", "/cases/FC-0001/patch", {{"kind", "prompt_line"}, {"description", "p"}});
  s.ok("POST", "/regressions", {{"case_ids", {"FC-0001"}}, {"batch_id", "reg-1"}});
  EXPECT_EQ(s.call("POST", "/regressions/reg-1/record").status, 400);
  s.ok("POST", "/batches/reg-1/execute");
  s.ok("POST", "/batches/reg-1/judge");
  json recorded = s.ok("POST", "/regressions/reg-1/record");
  EXPECT_EQ(recorded[0].at("state"), "Patched");
  EXPECT_EQ(recorded[0].at("consecutive_passes"), 0);
  EXPECT_EQ(s.call("POST", "/regressions/reg-1/record").status, 409);
  EXPECT_EQ(s.call("POST", "/cases/FC-0001/close").status, 409);
}

TEST(Gateway, Reports) {
  Service s;
  s.seed();
  Response text = s.call("GET", "/reports/pilot", nullptr,
                         {{"batch", "pilot"}, {"format", "text"}, {"period", "2026-04"}});
  EXPECT_EQ(text.status, 200);
  EXPECT_EQ(text.content_type.rfind("text/plain", 0), 0u);
  EXPECT_EQ(text.body, read_text(std::string(TREVAL_GOLDEN_DIR) + "/pilot_report.txt"));

  json pilot = s.ok("GET", "/reports/pilot", nullptr, {{"batch", "pilot"}});
  EXPECT_EQ(pilot.at("overall_avg"), "23.15");
  json stat = s.ok("GET", "/reports/static", nullptr, {{"batch", "pilot"}});
  EXPECT_EQ(stat.at("total_questions"), 81);
  for (const char* absent : {"group_count", "drift", "top_drift_groups", "regression_units"}) {
    EXPECT_FALSE(stat.contains(absent)) << absent;
  }
  json cmp = s.ok("GET", "/reports/comparison", nullptr, {{"batch", "pilot"}});
  EXPECT_EQ(cmp.at("rows").size(), 5u);
  EXPECT_EQ(s.call("GET", "/reports/weekly").status, 404);
  EXPECT_EQ(s.call("GET", "/reports/pilot", nullptr, {{"top_n", "many"}}).status, 400);
}

TEST(Gateway, CsvExchange) {
  Service a;
  a.seed();
  json exported = a.ok("GET", "/csv/export", nullptr, {{"batch", "pilot"}, {"scope", "batch_language_topic"}});
  ASSERT_EQ(exported.at("files").size(), 27u);

  Service b;
  b.ok("POST", "/bank/import", {{"csv", read_text(fixture_path("pilot/bank.csv"))}});
  json imported = b.ok("POST", "/csv/import", {{"files", exported.at("files")}});
  EXPECT_EQ(imported.at("imported"), 81);
  EXPECT_TRUE(imported.at("rejected").empty());
  EXPECT_EQ(b.call("POST", "/csv/import", {{"files", exported.at("files")}}).status, 409);
  EXPECT_EQ(b.call("GET", "/reports/pilot", nullptr, {{"format", "text"}}).body,
            a.call("GET", "/reports/pilot", nullptr, {{"format", "text"}}).body);
}

TEST(Engine, StatePersistsAcrossRestarts) {
  auto dir = temp_dir("store");
  std::string report;
  json cases;
  {
    Service s(dir);
    s.seed();
    s.ok("POST", "/reviews", {{"run_id", "pilot:Q08_charged_zh_hk"}, {"reviewer_id", "r1"},
                              {"verdict", "fail"}, {"mark", true}});
    s.ok("POST", "/cases/FC-0001/patch", {{"kind", "prompt_line"}, {"description", "p"}});
    s.ok("POST", "/runs/pilot:Q03_neutral_en/manual-mark", {{"marked", true}});
    report = s.call("GET", "/reports/pilot", nullptr, {{"format", "text"}}).body;
    cases = s.ok("GET", "/cases");
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "state.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "events.jsonl"));
  Service again(dir);
  EXPECT_EQ(again.ok("GET", "/cases"), cases);
  EXPECT_EQ(again.call("GET", "/reports/pilot", nullptr, {{"format", "text"}}).body, report);
  EXPECT_EQ(again.ok("GET", "/bank").at("questions"), 81);
  EXPECT_EQ(again.ok("GET", "/review-queue", nullptr, {{"reason", "manual_mark"}}).size(), 1u);
  json next = again.ok("POST", "/cases/mark", {{"run_id", "pilot:Q02_charged_zh_hk"}, {"reviewer_id", "r"}});
  EXPECT_EQ(next.at("case_id"), "FC-0002");
  std::filesystem::remove_all(dir);
}

// Serves the gateway on an ephemeral port and talks to it over real HTTP.
TEST(Http, ServerExposesGateway) {
  Service s;
  HttpServer server(s.gateway);
  int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(client.Get("/bank")->status, 401);
  httplib::Headers auth = {{"Authorization", "Bearer secret"}};
  auto imported = client.Post("/bank/import", auth, read_text(fixture_path("pilot/bank.csv")), "text/csv");
  ASSERT_TRUE(imported);
  EXPECT_EQ(imported->status, 200);
  auto questions = client.Get("/bank/questions?language=zh_hk&intensity=charged", auth);
  ASSERT_TRUE(questions);
  EXPECT_EQ(json::parse(questions->body).size(), 9u);
  server.stop();
  loop.join();
}

struct Stub {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<json> seen;
  std::mutex mutex;

  Stub() { port = server.bind_to_any_port("127.0.0.1"); }
  void start() {
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Stub() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

TEST(Http, AgentBackendWireFormat) {
  Stub stub;
  stub.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    {
      std::lock_guard lock(stub.mutex);
      stub.seen.push_back(body);
    }
    if (body.at("question_id") == "down") {
      res.set_content(R"({"error":{"code":"model_timeout","detail":"slow"}})", "application/json");
    } else if (body.at("question_id") == "500") {
      res.status = 500;
    } else {
      res.set_content(json{{"response_text", "answer to " + body.at("question_id").get<std::string>()}}.dump(),
                      "application/json");
    }
  });
  stub.start();
  HttpAgentBackend agent(stub.url("/generate"), std::chrono::seconds(5));
  AgentRequest req{"model-b", "policy-1", "tpl-1", Language::zh_hk, "Q01_neutral_zh_hk", "text",
                   {{"route", "default"}}};
  AgentReply ok = agent.generate(req);
  ASSERT_TRUE(ok.response_text);
  EXPECT_EQ(*ok.response_text, "answer to Q01_neutral_zh_hk");
  ASSERT_EQ(stub.seen.size(), 1u);
  EXPECT_EQ(stub.seen[0], json::parse(agent_request_json(req)));
  EXPECT_EQ(stub.seen[0].at("language"), "zh_hk");
  EXPECT_EQ(stub.seen[0].at("gateway_config").at("route"), "default");

  req.question_id = "down";
  AgentReply down = agent.generate(req);
  EXPECT_FALSE(down.response_text);
  EXPECT_EQ(down.error_code, "model_timeout");
  req.question_id = "500";
  EXPECT_EQ(agent.generate(req).error_code, "http_500");

  HttpAgentBackend nowhere("http://127.0.0.1:1/generate", std::chrono::seconds(2));
  EXPECT_EQ(nowhere.generate(req).error_code, "transport");
}

TEST(Http, JudgeBackendWireFormat) {
  Stub stub;
  stub.server.Post("/judge", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    {
      std::lock_guard lock(stub.mutex);
      stub.seen.push_back(body);
    }
    int d7 = body.at("siblings").empty() ? 3 : 2;
    res.set_content(json{{"dims", {3, 3, 3, 3, 3, 3, d7, 3}}, {"risk", "excellent"}, {"reason", "r"}}.dump(),
                    "application/json");
  });
  stub.start();
  HttpJudgeBackend judge(stub.url("/judge"), std::chrono::seconds(5));
  QuestionBank bank = testing::pilot_bank();
  std::vector<treval::Run> runs;
  for (const auto& [lang, qid] : bank.find_group("Q02_mild")->members) {
    treval::Run r;
    r.run_id = make_run_id("b", qid);
    r.batch_id = "b";
    r.question_id = qid;
    r.language = lang;
    r.response_text = "answer " + qid;
    runs.push_back(r);
  }
  JudgeOutcome single = judge_run(runs[0], *bank.find(runs[0].question_id), judge);
  ASSERT_TRUE(single.card);
  EXPECT_EQ(single.card->total, 24);
  EXPECT_EQ(stub.seen.back().at("d7_mode"), "per_sample");
  EXPECT_EQ(stub.seen.back().at("response_text"), "answer " + runs[0].question_id);

  auto joint = judge_group_joint(runs, bank, judge);
  for (const auto& o : joint) EXPECT_EQ(o.card->dims[kD7], 2);
  EXPECT_EQ(stub.seen.back().at("siblings").size(), 2u);
  EXPECT_EQ(stub.seen.back().at("d7_mode"), "group_joint");

  HttpJudgeBackend nowhere("http://127.0.0.1:1/judge", std::chrono::seconds(2));
  JudgeOutcome down = judge_run(runs[0], *bank.find(runs[0].question_id), nowhere);
  EXPECT_EQ(down.issue, Errc::judge_unreachable);
}

TEST(Config, ParsesAndResolvesRelativePaths) {
  ServiceConfig c = parse_service_config(R"({
    "thresholds": {"tau_s": 18, "tau_d": 4, "close_n": 2, "risk_flag_set": ["risky"]},
    "backends": {
      "agent": {"type": "template", "answers": "answers.json"},
      "judge": {"type": "http", "url": "http://127.0.0.1:9/judge", "timeout_seconds": 7,
                "judge_id": "j2", "rubric_version": "rubric-v2", "prompt": "p.txt"}
    },
    "storage": "store",
    "operator_token": "tok",
    "port": 9090,
    "parallelism": 4
  })", "/etc/treval");
  EXPECT_EQ(c.thresholds.tau_s, 18);
  EXPECT_EQ(c.thresholds.tau_d, 4);
  EXPECT_EQ(c.thresholds.close_n, 2);
  EXPECT_EQ(c.thresholds.risk_flag_set, std::set{RiskLevel::risky});
  EXPECT_EQ(c.agent.path, std::filesystem::path("/etc/treval/answers.json"));
  EXPECT_EQ(c.judge.type, "http");
  EXPECT_EQ(c.judge.timeout_seconds, 7);
  EXPECT_EQ(c.judge_id, "j2");
  EXPECT_EQ(c.rubric_version, "rubric-v2");
  EXPECT_EQ(c.judge_prompt, std::filesystem::path("/etc/treval/p.txt"));
  EXPECT_EQ(c.storage, std::filesystem::path("/etc/treval/store"));
  EXPECT_EQ(c.operator_token, "tok");
  EXPECT_EQ(c.port, 9090);
  EXPECT_EQ(c.parallelism, 4u);
  EXPECT_NE(dynamic_cast<HttpJudgeBackend*>(make_judge_backend(c.judge).get()), nullptr);

  EXPECT_THROW(parse_service_config(R"({"thresholds": {"tau_s": 30}})"), Error);
  EXPECT_THROW(parse_service_config(R"({"thresholds": {"close_n": 0}})"), Error);
  EXPECT_THROW(parse_service_config("not json"), Error);
}

TEST(Config, ShippedConfigsLoad) {
  ServiceConfig pilot = load_service_config(std::string(TREVAL_SOURCE_DIR) + "/config/pilot.json");
  EXPECT_EQ(pilot.thresholds.tau_s, 20);
  EXPECT_EQ(pilot.thresholds.tau_d, 3);
  EXPECT_EQ(pilot.thresholds.close_n, 3);
  EXPECT_TRUE(std::filesystem::exists(pilot.agent.path));
  EXPECT_TRUE(std::filesystem::exists(pilot.judge.path));
  EXPECT_TRUE(std::filesystem::exists(pilot.judge_prompt));
  auto agent = make_agent_backend(pilot.agent);
  AgentReply r = agent->generate({"m", "p", "tpl-1", Language::en, "Q01_neutral_en", "", {}});
  EXPECT_TRUE(r.response_text);

  ServiceConfig remote = load_service_config(std::string(TREVAL_SOURCE_DIR) + "/config/remote.example.json");
  EXPECT_EQ(remote.agent.type, "http");
  EXPECT_EQ(remote.operator_token, "change-me");

  auto dir = temp_dir("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "t.json") << R"({"tau_s": 22, "drift_source": "human_override"})";
  Thresholds t = load_thresholds(dir / "t.json");
  EXPECT_EQ(t.tau_s, 22);
  EXPECT_EQ(t.drift_source, DriftScoreSource::human_override);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace treval
