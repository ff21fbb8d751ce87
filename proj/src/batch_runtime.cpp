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

#include "treval/batch_runtime.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace treval {

void SystemConfig::validate() const {
  auto require = [](const std::string& v, const char* name) {
    if (v.empty()) throw Error(Errc::invalid_config, std::string(name) + " is empty");
  };
  require(model_a_id, "model_a_id");
  require(model_b_id, "model_b_id");
  require(policy_layer_id, "policy_layer_id");
  require(template_version, "template_version");
  require(system_version, "system_version");
  require(judge_id, "judge_id");
}

const std::string& route_language(const SystemConfig& config, Language language) {
  return language == Language::zh_cn ? config.model_a_id : config.model_b_id;
}

std::string_view to_string(BatchKind kind) {
  return kind == BatchKind::evaluation ? "evaluation" : "regression";
}

std::string_view to_string(BatchStatus status) {
  switch (status) {
    case BatchStatus::pending: return "pending";
    case BatchStatus::running: return "running";
    case BatchStatus::complete: return "complete";
    case BatchStatus::partial: return "partial";
  }
  return "?";
}

std::string_view to_string(RunStatus status) {
  return status == RunStatus::ok ? "ok" : "backend_error";
}

BatchKind parse_batch_kind(std::string_view text) {
  if (text == "evaluation") return BatchKind::evaluation;
  if (text == "regression") return BatchKind::regression;
  throw Error(Errc::unknown_code, "unknown batch kind '" + std::string(text) + "'");
}

BatchStatus parse_batch_status(std::string_view text) {
  for (auto s : {BatchStatus::pending, BatchStatus::running, BatchStatus::complete,
                 BatchStatus::partial}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::unknown_code, "unknown batch status '" + std::string(text) + "'");
}

RunStatus parse_run_status(std::string_view text) {
  if (text == "ok") return RunStatus::ok;
  if (text == "backend_error") return RunStatus::backend_error;
  throw Error(Errc::unknown_code, "unknown run status '" + std::string(text) + "'");
}

std::string make_run_id(std::string_view batch_id, std::string_view question_id) {
  std::string id;
  id.reserve(batch_id.size() + question_id.size() + 1);
  id.append(batch_id).append(":").append(question_id);
  return id;
}

TemplateAnswerBackend::TemplateAnswerBackend(std::map<std::string, std::string> answers,
                                             std::set<std::string> failing)
    : answers_(std::move(answers)), failing_(std::move(failing)) {}

TemplateAnswerBackend TemplateAnswerBackend::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  auto j = nlohmann::json::parse(in);
  return TemplateAnswerBackend(j.get<std::map<std::string, std::string>>());
}

AgentReply TemplateAnswerBackend::generate(const AgentRequest& request) {
  if (failing_.contains(request.question_id)) {
    return AgentReply::failure("unavailable", "forced failure for " + request.question_id);
  }
  auto it = answers_.find(request.question_id);
  if (it == answers_.end()) {
    return AgentReply::failure("no_template", "no canned answer for " + request.question_id);
  }
  return AgentReply::ok(it->second);
}

Batch create_batch(std::string batch_id, const SystemConfig& config,
                   std::span<const Question> selection, BatchKind kind, Timestamp created_at) {
  if (selection.empty()) throw Error(Errc::empty_selection, "batch selection is empty");
  config.validate();
  if (batch_id.empty()) throw Error(Errc::bad_request, "batch_id is empty");

  Batch batch;
  batch.batch_id = std::move(batch_id);
  batch.config = config;
  batch.kind = kind;
  batch.created_at = created_at;
  std::set<std::string_view> seen;
  for (const Question& q : selection) {
    if (seen.insert(q.question_id).second) batch.question_ids.push_back(q.question_id);
  }
  return batch;
}

std::vector<Run> execute_batch(Batch& batch, const QuestionBank& bank, AgentBackend& backend,
                               const ExecuteOptions& options) {
  if (batch.status != BatchStatus::pending) {
    throw Error(Errc::already_executed, "batch " + batch.batch_id + " already executed");
  }
  std::vector<const Question*> questions;
  questions.reserve(batch.question_ids.size());
  for (const auto& qid : batch.question_ids) {
    const Question* q = bank.find(qid);
    if (q == nullptr) throw Error(Errc::unknown_run, "question " + qid + " not in bank");
    questions.push_back(q);
  }

  batch.status = BatchStatus::running;
  std::vector<Run> runs(questions.size());

  auto run_one = [&](std::size_t i) {
    const Question& q = *questions[i];
    Run& run = runs[i];
    run.run_id = make_run_id(batch.batch_id, q.question_id);
    run.batch_id = batch.batch_id;
    run.question_id = q.question_id;
    run.language = q.language;
    run.routed_model_id = route_language(batch.config, q.language);

    AgentRequest req{run.routed_model_id, batch.config.policy_layer_id,
                     batch.config.template_version, q.language, q.question_id, q.text,
                     batch.config.gateway_config};
    run.started_at = options.clock();
    AgentReply reply;
    try {
      reply = backend.generate(req);
    } catch (const std::exception& e) {
      reply = AgentReply::failure("exception", e.what());
    }
    run.finished_at = options.clock();
    if (reply.response_text) {
      run.status = RunStatus::ok;
      run.response_text = std::move(reply.response_text);
    } else {
      run.status = RunStatus::backend_error;
      run.error_detail = reply.error_code.empty() ? std::string("backend_error")
                                                  : reply.error_code;
      if (!reply.error_detail.empty()) *run.error_detail += ": " + reply.error_detail;
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.parallelism, static_cast<unsigned>(runs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < runs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) run_one(i);
      });
    }
  }

  bool all_ok = std::all_of(runs.begin(), runs.end(),
                            [](const Run& r) { return r.status == RunStatus::ok; });
  batch.status = all_ok ? BatchStatus::complete : BatchStatus::partial;
  return runs;
}

}  // namespace treval
