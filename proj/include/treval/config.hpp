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

#ifndef TREVAL_CONFIG_HPP_
#define TREVAL_CONFIG_HPP_

#include <filesystem>
#include <memory>
#include <string>

#include "treval/batch_runtime.hpp"
#include "treval/judging.hpp"
#include "treval/thresholds.hpp"

namespace treval {

// type "template": canned answers or judgments read from `path`.
// type "http": a remote endpoint at `url`.
struct BackendSpec {
  std::string type = "template";
  std::filesystem::path path;
  std::string url;
  int timeout_seconds = 60;
};

struct ServiceConfig {
  Thresholds thresholds;
  BackendSpec agent;
  BackendSpec judge;
  std::string judge_id = "template-judge";
  std::string rubric_version = "rubric-v1";
  std::filesystem::path judge_prompt;  // empty: no rendered prompt
  std::filesystem::path storage;
  std::string operator_token;
  std::string host = "127.0.0.1";
  int port = 8080;
  unsigned parallelism = 1;
};

// Relative paths resolve against `base_dir`. Throws Errc::invalid_config.
ServiceConfig parse_service_config(std::string_view json_text,
                                   const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);

// A thresholds JSON object; missing keys keep their defaults.
Thresholds load_thresholds(const std::filesystem::path& path);

std::unique_ptr<AgentBackend> make_agent_backend(const BackendSpec& spec);
std::unique_ptr<JudgeBackend> make_judge_backend(const BackendSpec& spec);

}  // namespace treval

#endif  // TREVAL_CONFIG_HPP_
