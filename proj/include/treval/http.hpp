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

#ifndef TREVAL_HTTP_HPP_
#define TREVAL_HTTP_HPP_

#include <chrono>
#include <memory>
#include <string>

#include "treval/batch_runtime.hpp"
#include "treval/gateway.hpp"
#include "treval/judging.hpp"

namespace treval {

// Splits "http://host:port/path" into a scheme+authority base and a path.
// Throws Errc::invalid_config.
struct Endpoint {
  std::string base;
  std::string path;
  static Endpoint parse(const std::string& url);
};

// POSTs AgentRequest as JSON and expects {"response_text": "..."} or
// {"error": {"code": "...", "detail": "..."}}. Transport failures and non-2xx
// replies become AgentReply failures.
class HttpAgentBackend : public AgentBackend {
 public:
  explicit HttpAgentBackend(const std::string& url,
                            std::chrono::seconds timeout = std::chrono::seconds(60));
  AgentReply generate(const AgentRequest& request) override;

 private:
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
};

// POSTs JudgeRequest as JSON; the 2xx reply body is the judge payload.
class HttpJudgeBackend : public JudgeBackend {
 public:
  explicit HttpJudgeBackend(const std::string& url,
                            std::chrono::seconds timeout = std::chrono::seconds(60));
  JudgeReply judge(const JudgeRequest& request) override;

 private:
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
};

std::string agent_request_json(const AgentRequest& request);
std::string judge_request_json(const JudgeRequest& request);

// Serves a Gateway over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(Gateway& gateway);
  ~HttpServer();

  // Binds to `port`, or to an ephemeral port when 0. Returns the bound port.
  // Throws Errc::io_error.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace treval

#endif  // TREVAL_HTTP_HPP_
