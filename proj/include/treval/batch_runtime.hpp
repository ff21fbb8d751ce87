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

#ifndef TREVAL_BATCH_RUNTIME_HPP_
#define TREVAL_BATCH_RUNTIME_HPP_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treval/common.hpp"
#include "treval/question_bank.hpp"

namespace treval {

// The frozen configuration a batch runs under: the Mandarin-path model, the
// Cantonese/English-path model, the policy layer, the template version, the
// opaque gateway settings and the system version.
struct SystemConfig {
  std::string model_a_id;  // zh_cn path
  std::string model_b_id;  // zh_hk and en paths
  std::string policy_layer_id;
  std::string template_version;
  std::map<std::string, std::string> gateway_config;
  std::string system_version;
  std::string judge_id;

  // Throws Error(Errc::invalid_config) when an identifier is empty.
  void validate() const;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

// zh_cn goes to model A; zh_hk and en go to model B.
const std::string& route_language(const SystemConfig& config, Language language);

enum class BatchKind { evaluation, regression };
enum class BatchStatus { pending, running, complete, partial };
enum class RunStatus { ok, backend_error };

std::string_view to_string(BatchKind kind);
std::string_view to_string(BatchStatus status);
std::string_view to_string(RunStatus status);
BatchKind parse_batch_kind(std::string_view text);
BatchStatus parse_batch_status(std::string_view text);
RunStatus parse_run_status(std::string_view text);

struct Batch {
  std::string batch_id;
  SystemConfig config;
  std::vector<std::string> question_ids;
  BatchKind kind = BatchKind::evaluation;
  Timestamp created_at{};
  BatchStatus status = BatchStatus::pending;
};

struct Run {
  std::string run_id;
  std::string batch_id;
  std::string question_id;
  Language language = Language::zh_cn;
  std::string routed_model_id;
  std::optional<std::string> response_text;  // present iff status == ok
  RunStatus status = RunStatus::ok;
  std::optional<std::string> error_detail;
  Timestamp started_at{};
  Timestamp finished_at{};

  friend bool operator==(const Run&, const Run&) = default;
};

// Run identity is derived, so re-exports and imports agree on it.
std::string make_run_id(std::string_view batch_id, std::string_view question_id);

// ---------------------------------------------------------------------------
// Agent backends

struct AgentRequest {
  std::string model_id;
  std::string policy_layer_id;
  std::string template_version;
  Language language = Language::zh_cn;
  std::string question_id;
  std::string question_text;
  std::map<std::string, std::string> gateway_config;
};

struct AgentReply {
  std::optional<std::string> response_text;
  std::string error_code;  // set when response_text is absent
  std::string error_detail;

  static AgentReply ok(std::string text) { return {std::move(text), {}, {}}; }
  static AgentReply failure(std::string code, std::string detail = {}) {
    return {std::nullopt, std::move(code), std::move(detail)};
  }
};

// Text in, text out. Implementations must be safe to call concurrently.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentReply generate(const AgentRequest& request) = 0;
};

// Returns canned answers keyed by question_id. Unknown questions and
// questions listed in `failing` produce backend errors.
class TemplateAnswerBackend : public AgentBackend {
 public:
  explicit TemplateAnswerBackend(std::map<std::string, std::string> answers,
                                 std::set<std::string> failing = {});
  // JSON object {question_id: answer}.
  static TemplateAnswerBackend from_json_file(const std::string& path);

  AgentReply generate(const AgentRequest& request) override;

 private:
  std::map<std::string, std::string> answers_;
  std::set<std::string> failing_;
};

// ---------------------------------------------------------------------------
// Operations

// Duplicate questions in the selection are dropped (first occurrence wins).
// Throws Errc::empty_selection or Errc::invalid_config.
Batch create_batch(std::string batch_id, const SystemConfig& config,
                   std::span<const Question> selection, BatchKind kind,
                   Timestamp created_at = system_now());

struct ExecuteOptions {
  unsigned parallelism = 1;
  Clock clock = system_now;
};

// One attempt per run; backend failures become backend_error runs and never
// abort the batch. Results come back in question order. Throws
// Errc::already_executed unless the batch is pending, and Errc::unknown_run if
// a question id is missing from the bank.
std::vector<Run> execute_batch(Batch& batch, const QuestionBank& bank, AgentBackend& backend,
                               const ExecuteOptions& options = {});

}  // namespace treval

#endif  // TREVAL_BATCH_RUNTIME_HPP_
