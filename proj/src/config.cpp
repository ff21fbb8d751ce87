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

#include "treval/config.hpp"

#include <fstream>
#include <sstream>

#include "treval/http.hpp"
#include "treval/json_io.hpp"

namespace treval {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

BackendSpec backend(const json& j, const std::filesystem::path& base, const char* path_key) {
  BackendSpec s;
  s.type = j.value("type", std::string("template"));
  if (s.type == "template") {
    s.path = resolve(base, j.value(path_key, std::string()));
    if (s.path.empty()) {
      throw Error(Errc::invalid_config, std::string("template backend needs '") + path_key + "'");
    }
  } else if (s.type == "http") {
    s.url = j.value("url", std::string());
    Endpoint::parse(s.url);
  } else {
    throw Error(Errc::invalid_config, "unknown backend type '" + s.type + "'");
  }
  s.timeout_seconds = j.value("timeout_seconds", 60);
  if (s.timeout_seconds <= 0) throw Error(Errc::invalid_config, "timeout_seconds must be positive");
  return s;
}

}  // namespace

ServiceConfig parse_service_config(std::string_view json_text, const std::filesystem::path& base) {
  ServiceConfig c;
  try {
    json j = json::parse(json_text);
    if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<Thresholds>();
    const json backends = j.value("backends", json::object());
    if (!backends.contains("agent") || !backends.contains("judge")) {
      throw Error(Errc::invalid_config, "backends.agent and backends.judge are required");
    }
    c.agent = backend(backends.at("agent"), base, "answers");
    const json& judge = backends.at("judge");
    c.judge = backend(judge, base, "payloads");
    c.judge_id = judge.value("judge_id", c.judge_id);
    c.rubric_version = judge.value("rubric_version", c.rubric_version);
    c.judge_prompt = resolve(base, judge.value("prompt", std::string()));
    c.storage = resolve(base, j.value("storage", std::string()));
    c.operator_token = j.value("operator_token", std::string());
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.parallelism = j.value("parallelism", 1u);
    if (c.parallelism == 0) throw Error(Errc::invalid_config, "parallelism must be >= 1");
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  return parse_service_config(slurp(path), path.parent_path());
}

Thresholds load_thresholds(const std::filesystem::path& path) {
  try {
    return json::parse(slurp(path)).get<Thresholds>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
}

std::unique_ptr<AgentBackend> make_agent_backend(const BackendSpec& spec) {
  if (spec.type == "http") {
    return std::make_unique<HttpAgentBackend>(spec.url, std::chrono::seconds(spec.timeout_seconds));
  }
  return std::make_unique<TemplateAnswerBackend>(
      TemplateAnswerBackend::from_json_file(spec.path.string()));
}

std::unique_ptr<JudgeBackend> make_judge_backend(const BackendSpec& spec) {
  if (spec.type == "http") {
    return std::make_unique<HttpJudgeBackend>(spec.url, std::chrono::seconds(spec.timeout_seconds));
  }
  return std::make_unique<TemplateJudge>(TemplateJudge::from_json_file(spec.path.string()));
}

}  // namespace treval
