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

#include "treval/http.hpp"

#include <regex>

#include "httplib.h"
#include "treval/json_io.hpp"

namespace treval {

Endpoint Endpoint::parse(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(Errc::invalid_config, "bad URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string agent_request_json(const AgentRequest& r) {
  json gateway = json::object();
  for (const auto& [k, v] : r.gateway_config) gateway[k] = v;
  return json{{"model_id", r.model_id},
              {"policy_layer_id", r.policy_layer_id},
              {"template_version", r.template_version},
              {"language", r.language},
              {"question_id", r.question_id},
              {"question_text", r.question_text},
              {"gateway_config", gateway}}
      .dump();
}

std::string judge_request_json(const JudgeRequest& r) {
  json siblings = json::array();
  for (const SiblingAnswer& s : r.siblings) {
    siblings.push_back({{"language", s.language},
                        {"question_id", s.question_id},
                        {"response_text", s.response_text}});
  }
  return json{{"run_id", r.run_id},
              {"question_id", r.question_id},
              {"question_text", r.question_text},
              {"response_text", r.response_text},
              {"language", r.language},
              {"rubric_version", r.rubric_version},
              {"d7_mode", to_string(r.d7_mode)},
              {"siblings", siblings},
              {"prompt", r.prompt}}
      .dump();
}

namespace {

std::unique_ptr<httplib::Client> client(const Endpoint& e, std::chrono::seconds timeout) {
  auto c = std::make_unique<httplib::Client>(e.base);
  c->set_connection_timeout(timeout);
  c->set_read_timeout(timeout);
  c->set_write_timeout(timeout);
  return c;
}

}  // namespace

HttpAgentBackend::HttpAgentBackend(const std::string& url, std::chrono::seconds timeout)
    : endpoint_(Endpoint::parse(url)), timeout_(timeout) {}

AgentReply HttpAgentBackend::generate(const AgentRequest& request) {
  auto c = client(endpoint_, timeout_);
  auto res = c->Post(endpoint_.path, agent_request_json(request), "application/json");
  if (!res) return AgentReply::failure("transport", httplib::to_string(res.error()));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_object() && body.contains("error")) {
    const json& err = body.at("error");
    if (err.is_object()) {
      return AgentReply::failure(err.value("code", std::string("agent_error")),
                                 err.value("detail", std::string()));
    }
    return AgentReply::failure("agent_error", err.dump());
  }
  if (res->status < 200 || res->status >= 300) {
    return AgentReply::failure("http_" + std::to_string(res->status), res->body);
  }
  if (!body.is_object() || !body.contains("response_text") || !body.at("response_text").is_string()) {
    return AgentReply::failure("bad_reply", "reply lacks response_text");
  }
  return AgentReply::ok(body.at("response_text").get<std::string>());
}

HttpJudgeBackend::HttpJudgeBackend(const std::string& url, std::chrono::seconds timeout)
    : endpoint_(Endpoint::parse(url)), timeout_(timeout) {}

JudgeReply HttpJudgeBackend::judge(const JudgeRequest& request) {
  auto c = client(endpoint_, timeout_);
  auto res = c->Post(endpoint_.path, judge_request_json(request), "application/json");
  if (!res) return JudgeReply::unreachable(httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    return JudgeReply::unreachable("judge replied HTTP " + std::to_string(res->status));
  }
  return JudgeReply::ok(res->body);
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Gateway& gateway) : impl_(std::make_unique<Impl>()) {
  auto handler = [&gateway](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    for (const auto& [k, v] : req.headers) {
      std::string name = k;
      for (char& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      r.headers[name] = v;
    }
    r.body = req.body;
    Response out = gateway.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::io_error, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace treval
