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

#ifndef TREVAL_GATEWAY_HPP_
#define TREVAL_GATEWAY_HPP_

#include <map>
#include <mutex>
#include <string>

#include "treval/engine.hpp"

namespace treval {

struct Request {
  std::string method;  // GET or POST
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP status for an error code. Unknown entities map to 404, state
// conflicts to 409, an unreachable judge to 502, everything else to 400.
int http_status(Errc code);

// Transport-independent request router over an Engine. Every error comes
// back as {"error": <code>, "message": <text>}. Mutating requests carrying an
// Idempotency-Key header replay the first response for that key.
class Gateway {
 public:
  // An empty token disables authentication.
  Gateway(Engine& engine, std::string operator_token = {});

  Response handle(const Request& request);

 private:
  Response route(const Request& request);

  Engine& engine_;
  std::string token_;
  std::mutex idempotency_mutex_;
  std::map<std::string, Response> replies_;
};

}  // namespace treval

#endif  // TREVAL_GATEWAY_HPP_
