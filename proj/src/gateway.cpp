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

#include "treval/gateway.hpp"

#include <sstream>

#include "treval/json_io.hpp"

namespace treval {

int http_status(Errc code) {
  switch (code) {
    case Errc::unknown_batch:
    case Errc::unknown_run:
    case Errc::unknown_case:
    case Errc::not_found:
      return 404;
    case Errc::unauthorized:
      return 401;
    case Errc::duplicate_id:
    case Errc::already_executed:
    case Errc::duplicate_run:
    case Errc::closed_case:
    case Errc::not_patched:
    case Errc::not_in_regression:
    case Errc::not_closed:
    case Errc::illegal_transition:
    case Errc::not_a_candidate:
    case Errc::dataset_mismatch:
      return 409;
    case Errc::judge_unreachable:
      return 502;
    case Errc::io_error:
      return 500;
    default:
      return 400;
  }
}

namespace {

Response json_response(const json& body, int status = 200) {
  return {status, "application/json", body.dump()};
}

Response error_response(Errc code, const std::string& message, json extra = json::object()) {
  extra["error"] = to_string(code);
  extra["message"] = message;
  return json_response(extra, http_status(code));
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

json parse_body(const Request& r) {
  if (r.body.empty()) return json::object();
  try {
    json j = json::parse(r.body);
    if (!j.is_object()) throw Error(Errc::bad_request, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::bad_request, std::string("malformed JSON: ") + e.what());
  }
}

std::string required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(Errc::bad_request, std::string("'") + key + "' is required");
  }
  return it->get<std::string>();
}

std::optional<std::string> query(const Request& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::string> string_fields(const json& j) {
  std::map<std::string, std::string> out;
  if (!j.is_object()) return out;
  for (auto& [k, v] : j.items()) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return out;
}

json view_json(const BatchView& v) {
  json j = v.batch;
  j["runs"] = v.runs;
  j["ok_runs"] = v.ok_runs;
  j["backend_errors"] = v.backend_errors;
  j["judged"] = v.judged;
  j["judge_issues"] = v.judge_issues;
  return j;
}

json summary_json(const BankSummary& s) {
  return {{"version", s.version},
          {"questions", s.questions},
          {"groups", s.groups},
          {"complete_groups", s.complete_groups},
          {"violations", s.violations}};
}

json entry_json(const ReviewQueueEntry& e) {
  json j = {{"ref", e.ref}, {"reasons", e.reasons}, {"state", e.state},
            {"response_text", e.response_text}};
  j["card"] = e.card ? json(*e.card) : json(nullptr);
  if (e.group) {
    json members = json::array();
    for (const GroupMember& m : e.group->members) {
      members.push_back({{"language", m.language},
                         {"question_id", m.question_id},
                         {"run_id", m.run_id},
                         {"response_text", m.response_text},
                         {"total", m.total ? json(*m.total) : json(nullptr)},
                         {"risk", m.risk ? json(*m.risk) : json(nullptr)}});
    }
    j["group"] = {{"group_id", e.group->group_id},
                  {"drift", e.group->drift ? json(*e.group->drift) : json(nullptr)},
                  {"members", members}};
  } else {
    j["group"] = nullptr;
  }
  return j;
}

json board_json(const LifecycleBoard& b) {
  json counts = json::object();
  int total = 0;
  for (const auto& [state, n] : b.counts) {
    counts[std::string(to_string(state))] = n;
    total += n;
  }
  json cases = json::array();
  for (const FailureCase& c : b.cases) {
    cases.push_back({{"case_id", c.case_id},
                     {"state", c.state},
                     {"question_id", c.provenance.question_id},
                     {"batch_id", c.provenance.batch_id},
                     {"language", c.provenance.language},
                     {"topic", c.provenance.topic},
                     {"intensity", c.provenance.intensity},
                     {"consecutive_passes", c.consecutive_passes},
                     {"patches", c.patches.size()}});
  }
  return {{"counts", counts}, {"total", total}, {"cases", cases}};
}

HumanVerdict verdict_from(const json& j) {
  HumanVerdict v;
  v.reviewer_id = required(j, "reviewer_id");
  v.verdict = parse_verdict(required(j, "verdict"));
  if (j.contains("override_risk") && !j.at("override_risk").is_null()) {
    v.override_risk = parse_risk(j.at("override_risk").get<std::string>());
  }
  if (j.contains("override_total") && !j.at("override_total").is_null()) {
    if (!j.at("override_total").is_number_integer()) {
      throw Error(Errc::invalid_review, "override_total must be an integer");
    }
    v.override_total = j.at("override_total").get<int>();
  }
  v.notes = j.value("notes", std::string());
  return v;
}

Response report(Engine& engine, const std::string& kind, const Request& r) {
  std::optional<std::string> batch = query(r, "batch");
  const bool text = query(r, "format").value_or("json") == "text";
  auto out = [&](const auto& rep) {
    if (text) return Response{200, "text/plain; charset=utf-8", render_text(rep)};
    return json_response(json(rep));
  };
  if (kind == "pilot") {
    ReportOptions opts;
    if (auto m = query(r, "mode")) opts.mode_label = *m;
    if (auto p = query(r, "period")) opts.period = *p;
    if (auto n = query(r, "top_n")) {
      try {
        opts.top_n = std::stoul(*n);
      } catch (const std::exception&) {
        throw Error(Errc::bad_request, "top_n must be a number");
      }
    }
    return out(engine.pilot_report(batch, opts));
  }
  if (kind == "static") return out(engine.static_report(batch));
  if (kind == "comparison") return out(engine.comparison(batch));
  throw Error(Errc::not_found, "unknown report '" + kind + "'");
}

}  // namespace

Gateway::Gateway(Engine& engine, std::string operator_token)
    : engine_(engine), token_(std::move(operator_token)) {}

Response Gateway::handle(const Request& request) {
  if (!token_.empty() && request.path != "/health") {
    auto it = request.headers.find("authorization");
    if (it == request.headers.end() || it->second != "Bearer " + token_) {
      return error_response(Errc::unauthorized, "missing or wrong operator token");
    }
  }
  std::string key;
  if (request.method != "GET") {
    if (auto it = request.headers.find("idempotency-key"); it != request.headers.end()) {
      key = request.method + " " + request.path + " " + it->second;
    }
  }
  if (key.empty()) return route(request);

  std::lock_guard lock(idempotency_mutex_);
  if (auto it = replies_.find(key); it != replies_.end()) return it->second;
  Response response = route(request);
  if (response.status < 500) replies_[key] = response;
  return response;
}

Response Gateway::route(const Request& r) {
  try {
    const std::vector<std::string> p = split_path(r.path);
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";
    const std::size_t n = p.size();
    auto is = [&](std::initializer_list<const char*> parts) {
      if (parts.size() != n) return false;
      std::size_t i = 0;
      for (const char* part : parts) {
        if (std::string_view(part) != "*" && p[i] != part) return false;
        ++i;
      }
      return true;
    };

    if (get && is({"health"})) return json_response({{"status", "ok"}});

    // Bank
    if (post && is({"bank", "import"})) {
      std::string csv_text;
      BoundaryTable table = default_boundary_table();
      auto ct = r.headers.find("content-type");
      if (ct != r.headers.end() && ct->second.starts_with("text/csv")) {
        csv_text = r.body;
      } else {
        json body = parse_body(r);
        csv_text = required(body, "csv");
        if (body.contains("boundaries")) {
          for (auto& [code, value] : body.at("boundaries").items()) {
            table[static_cast<std::size_t>(TopicType::parse(code).index() - 1)] =
                parse_boundary(value.get<std::string>());
          }
        }
      }
      try {
        return json_response(summary_json(engine_.import_bank(csv_text, table)));
      } catch (const BankImportError& e) {
        json rows = json::array();
        for (const RowError& re : e.errors()) {
          rows.push_back({{"row", re.row}, {"column", re.column}, {"message", re.message}});
        }
        return error_response(e.code(), e.what(), {{"rows", rows}});
      }
    }
    if (get && is({"bank"})) return json_response(summary_json(engine_.bank_summary()));
    if (get && is({"bank", "questions"})) {
      return json_response(engine_.list_questions(QuestionFilter::parse(r.query)));
    }

    // Batches
    if (get && is({"batches"})) {
      json out = json::array();
      for (const BatchView& v : engine_.list_batches()) out.push_back(view_json(v));
      return json_response(out);
    }
    if (post && is({"batches"})) {
      json body = parse_body(r);
      std::string id = required(body, "batch_id");
      if (!body.contains("config")) throw Error(Errc::bad_request, "'config' is required");
      SystemConfig config = body.at("config").get<SystemConfig>();
      BatchKind kind = parse_batch_kind(body.value("kind", std::string("evaluation")));
      Batch b = body.contains("question_ids")
                    ? engine_.create_batch(id, config,
                                           body.at("question_ids").get<std::vector<std::string>>(),
                                           kind)
                    : engine_.create_batch(
                          id, config,
                          QuestionFilter::parse(string_fields(body.value("filter", json::object()))),
                          kind);
      return json_response(b, 201);
    }
    if (get && is({"batches", "*"})) return json_response(view_json(engine_.batch_status(p[1])));
    if (post && is({"batches", "*", "execute"})) {
      return json_response(view_json(engine_.execute_batch(p[1])));
    }
    if (post && is({"batches", "*", "judge"})) {
      json body = parse_body(r);
      D7Mode mode = parse_d7_mode(body.value("d7_mode", std::string("per_sample")));
      return json_response(view_json(engine_.judge_batch(p[1], mode)));
    }
    if (get && is({"batches", "*", "runs"})) return json_response(engine_.runs(p[1]));
    if (get && is({"batches", "*", "scorecards"})) {
      return json_response({{"cards", engine_.scorecards(p[1])},
                            {"issues", engine_.judge_issues(p[1])}});
    }
    if (get && is({"batches", "*", "candidates"})) return json_response(engine_.candidates(p[1]));

    // Review
    if (get && is({"review-queue"})) {
      json out = json::array();
      for (const ReviewQueueEntry& e : engine_.review_queue(QueueFilter::parse(r.query))) {
        out.push_back(entry_json(e));
      }
      return json_response(out);
    }
    if (post && is({"reviews"})) {
      json body = parse_body(r);
      ReviewSubmission s;
      s.run_id = required(body, "run_id");
      s.verdict = verdict_from(body);
      s.mark = body.value("mark", false);
      s.idempotency_key = body.value("idempotency_key", std::string());
      ReviewResult result = engine_.submit_review(s);
      json out = {{"card", result.card}, {"replayed", result.replayed}};
      out["case"] = result.created_case ? json(*result.created_case) : json(nullptr);
      return json_response(out);
    }
    if (post && is({"runs", "*", "manual-mark"})) {
      json body = parse_body(r);
      engine_.set_manual_mark(p[1], body.value("marked", true));
      return json_response({{"run_id", p[1]}, {"marked", body.value("marked", true)}});
    }

    // Failure cases
    if (get && is({"cases"})) return json_response(engine_.cases());
    if (post && is({"cases", "mark"})) {
      json body = parse_body(r);
      return json_response(engine_.mark_case(required(body, "run_id"),
                                             body.value("notes", std::string()),
                                             required(body, "reviewer_id")),
                           201);
    }
    if (get && is({"cases", "*"})) return json_response(engine_.find_case(p[1]));
    if (post && is({"cases", "*", "patch"})) {
      json body = parse_body(r);
      PatchDescriptor d;
      d.patch_id = body.value("patch_id", std::string());
      d.kind = parse_patch_kind(required(body, "kind"));
      d.description = required(body, "description");
      d.target_template_version = body.value("target_template_version", std::string());
      return json_response(engine_.attach_patch(p[1], d));
    }
    if (post && is({"cases", "*", "close"})) return json_response(engine_.close_case(p[1]));
    if (post && is({"cases", "*", "reopen"})) {
      json body = parse_body(r);
      return json_response(engine_.reopen_case(p[1], body.value("batch_id", std::string())));
    }

    // Regression
    if (post && is({"regressions"})) {
      json body = parse_body(r);
      std::optional<SystemConfig> config;
      if (body.contains("config")) config = body.at("config").get<SystemConfig>();
      return json_response(
          engine_.generate_regression(body.value("case_ids", std::vector<std::string>{}),
                                      required(body, "batch_id"), config),
          201);
    }
    if (post && is({"regressions", "*", "record"})) {
      return json_response(engine_.record_regression(p[1]));
    }

    if (get && is({"board"})) return json_response(board_json(engine_.lifecycle_board()));
    if (get && is({"events"})) return json_response(engine_.events());
    if (get && is({"audit"})) return json_response({{"violations", engine_.audit()}});

    if (get && is({"reports", "*"})) return report(engine_, p[1], r);

    // CSV
    if (get && is({"csv", "export"})) {
      ExportScope scope = parse_export_scope(query(r, "scope").value_or("batch"));
      bool text = query(r, "include_text").value_or("false") == "true";
      json files = json::array();
      for (const CsvFile& f : engine_.export_csv(query(r, "batch"), scope, text)) {
        files.push_back({{"name", f.name}, {"content", f.content}});
      }
      return json_response({{"schema_version", kResultSchemaVersion}, {"files", files}});
    }
    if (post && is({"csv", "import"})) {
      json body = parse_body(r);
      std::vector<CsvFile> files;
      for (const json& f : body.value("files", json::array())) {
        files.push_back({f.at("name").get<std::string>(), f.at("content").get<std::string>()});
      }
      CsvImportResult result = engine_.import_csv(files);
      json rejected = json::array();
      for (const RowDiagnostic& d : result.rejected) {
        rejected.push_back({{"file", d.file}, {"row", d.row}, {"message", d.message}});
      }
      return json_response({{"imported", result.dataset.size()}, {"rejected", rejected}});
    }

    return error_response(Errc::not_found, r.method + " " + r.path + " is not an endpoint");
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response(Errc::bad_request, e.what());
  } catch (const std::exception& e) {
    return error_response(Errc::io_error, e.what());
  }
}

}  // namespace treval
