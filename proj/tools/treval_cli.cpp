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

// Command-line front end. Every subcommand is translated into one gateway
// request, served in-process against --store or forwarded to --remote.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "treval/config.hpp"
#include "treval/engine.hpp"
#include "treval/gateway.hpp"
#include "treval/http.hpp"
#include "treval/json_io.hpp"

namespace {

using treval::json;

class NoAgent : public treval::AgentBackend {
 public:
  treval::AgentReply generate(const treval::AgentRequest&) override {
    return treval::AgentReply::failure("unconfigured", "no agent backend configured");
  }
};

class NoJudge : public treval::JudgeBackend {
 public:
  treval::JudgeReply judge(const treval::JudgeRequest&) override {
    return treval::JudgeReply::unreachable("no judge backend configured");
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw treval::Error(treval::Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Globals {
  std::string config;
  std::string store;
  std::string thresholds;
  std::string answers;
  std::string judgments;
  std::string remote;
  std::string token;
};

treval::Request make(std::string method, std::string path, json body = nullptr) {
  treval::Request r;
  r.method = std::move(method);
  r.path = std::move(path);
  if (!body.is_null()) {
    r.body = body.dump();
    r.headers["content-type"] = "application/json";
  }
  return r;
}

treval::Response send_remote(const Globals& g, const treval::Request& r) {
  treval::Endpoint e = treval::Endpoint::parse(g.remote);
  httplib::Client client(e.base);
  client.set_read_timeout(std::chrono::seconds(600));
  httplib::Headers headers;
  if (!g.token.empty()) headers.emplace("Authorization", "Bearer " + g.token);
  for (const auto& [k, v] : r.headers) {
    if (k != "content-type") headers.emplace(k, v);
  }
  httplib::Params params(r.query.begin(), r.query.end());
  std::string path = e.path == "/" ? r.path : e.path + r.path;
  httplib::Result res = r.method == "GET"
                            ? client.Get(path, params, headers)
                            : client.Post(path, headers, r.body, "application/json");
  if (!res) {
    throw treval::Error(treval::Errc::io_error, "remote unreachable: " + httplib::to_string(res.error()));
  }
  return {res->status, res->get_header_value("Content-Type"), res->body};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trilingual evaluation engine: batches, judging, drift, failure cases, reports"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Service config JSON");
  app.add_option("--store", g.store, "Storage directory (overrides the config)");
  app.add_option("--thresholds", g.thresholds, "Thresholds JSON (overrides the config)");
  app.add_option("--answers", g.answers, "Template answers JSON (template-answer mode)");
  app.add_option("--judgments", g.judgments, "Template judgments JSON");
  app.add_option("--remote", g.remote, "Send requests to a running server instead");
  app.add_option("--token", g.token, "Operator token for --remote");

  std::vector<treval::Request> requests;
  std::string output;
  bool serve = false;
  std::string serve_host;
  int serve_port = -1;

  // bank
  auto* bank = app.add_subcommand("bank", "Question bank")->require_subcommand(1);
  std::string bank_file;
  auto* bank_import = bank->add_subcommand("import", "Import a bank CSV");
  bank_import->add_option("--bank", bank_file, "Bank CSV")->required();
  bank_import->callback([&] {
    treval::Request r = make("POST", "/bank/import");
    r.headers["content-type"] = "text/csv";
    r.body = slurp(bank_file);
    requests.push_back(r);
  });
  std::map<std::string, std::string> qfilter;
  auto* bank_list = bank->add_subcommand("list", "List questions");
  for (const char* key : {"topic", "language", "intensity", "group"}) {
    bank_list->add_option(std::string("--") + key, qfilter[key]);
  }
  bank_list->callback([&] {
    treval::Request r = make("GET", "/bank/questions");
    for (const auto& [k, v] : qfilter) {
      if (!v.empty()) r.query[k] = v;
    }
    requests.push_back(r);
  });
  bank->add_subcommand("show", "Bank summary")->callback([&] {
    requests.push_back(make("GET", "/bank"));
  });

  // batch
  auto* batch = app.add_subcommand("batch", "Batches")->require_subcommand(1);
  std::string batch_id, system_file, question_list, d7_mode = "per_sample";
  treval::SystemConfig system;
  std::map<std::string, std::string> bfilter;
  auto add_system = [&](CLI::App* sub) {
    sub->add_option("--system", system_file, "SystemConfig JSON");
    sub->add_option("--model-a", system.model_a_id, "Mandarin-path model");
    sub->add_option("--model-b", system.model_b_id, "Cantonese/English-path model");
    sub->add_option("--policy", system.policy_layer_id);
    sub->add_option("--template-version", system.template_version);
    sub->add_option("--system-version", system.system_version);
    sub->add_option("--judge-id", system.judge_id);
  };
  auto system_json = [&]() -> json {
    if (!system_file.empty()) return json::parse(slurp(system_file));
    return json(system);
  };
  auto* batch_create = batch->add_subcommand("create", "Create a batch");
  batch_create->add_option("--batch", batch_id)->required();
  batch_create->add_option("--questions", question_list, "Comma-separated question ids");
  for (const char* key : {"topic", "language", "intensity", "group"}) {
    batch_create->add_option(std::string("--") + key, bfilter[key]);
  }
  add_system(batch_create);
  batch_create->callback([&] {
    json body = {{"batch_id", batch_id}, {"config", system_json()}};
    if (!question_list.empty()) {
      body["question_ids"] = split_csv_list(question_list);
    } else {
      json f = json::object();
      for (const auto& [k, v] : bfilter) {
        if (!v.empty()) f[k] = v;
      }
      body["filter"] = f;
    }
    requests.push_back(make("POST", "/batches", body));
  });
  auto* batch_exec = batch->add_subcommand("execute", "Execute a pending batch");
  batch_exec->add_option("--batch", batch_id)->required();
  batch_exec->callback([&] { requests.push_back(make("POST", "/batches/" + batch_id + "/execute")); });
  auto* batch_judge = batch->add_subcommand("judge", "Judge an executed batch");
  batch_judge->add_option("--batch", batch_id)->required();
  batch_judge->add_option("--d7-mode", d7_mode)->check(CLI::IsMember({"per_sample", "group_joint"}));
  batch_judge->callback([&] {
    requests.push_back(make("POST", "/batches/" + batch_id + "/judge", {{"d7_mode", d7_mode}}));
  });
  auto* batch_run = batch->add_subcommand("run", "Create, execute and judge in one go");
  batch_run->add_option("--batch", batch_id)->required();
  batch_run->add_option("--questions", question_list);
  batch_run->add_option("--d7-mode", d7_mode)->check(CLI::IsMember({"per_sample", "group_joint"}));
  add_system(batch_run);
  batch_run->callback([&] {
    json body = {{"batch_id", batch_id}, {"config", system_json()}};
    if (!question_list.empty()) body["question_ids"] = split_csv_list(question_list);
    requests.push_back(make("POST", "/batches", body));
    requests.push_back(make("POST", "/batches/" + batch_id + "/execute"));
    requests.push_back(make("POST", "/batches/" + batch_id + "/judge", {{"d7_mode", d7_mode}}));
  });
  auto* batch_status = batch->add_subcommand("status", "Batch status");
  batch_status->add_option("--batch", batch_id)->required();
  batch_status->callback([&] { requests.push_back(make("GET", "/batches/" + batch_id)); });
  batch->add_subcommand("list", "List batches")->callback([&] {
    requests.push_back(make("GET", "/batches"));
  });

  auto* cards = app.add_subcommand("scorecards", "Score cards of a batch");
  cards->add_option("--batch", batch_id)->required();
  cards->callback([&] { requests.push_back(make("GET", "/batches/" + batch_id + "/scorecards")); });

  // review
  std::map<std::string, std::string> queue_filter;
  bool include_reviewed = false;
  auto* queue = app.add_subcommand("queue", "Review queue");
  for (const char* key : {"batch", "language", "topic", "reason"}) {
    queue->add_option(std::string("--") + key, queue_filter[key]);
  }
  queue->add_flag("--include-reviewed", include_reviewed);
  queue->callback([&] {
    treval::Request r = make("GET", "/review-queue");
    for (const auto& [k, v] : queue_filter) {
      if (!v.empty()) r.query[k] = v;
    }
    if (include_reviewed) r.query["include_reviewed"] = "true";
    requests.push_back(r);
  });
  std::string run_id, reviewer, verdict, notes, override_risk, idem_key;
  int override_total = -1;
  bool mark = false;
  auto* review = app.add_subcommand("review", "Submit a human verdict");
  review->add_option("--run", run_id)->required();
  review->add_option("--reviewer", reviewer)->required();
  review->add_option("--verdict", verdict)->required()->check(CLI::IsMember({"pass", "fail"}));
  review->add_option("--notes", notes);
  review->add_option("--override-risk", override_risk);
  review->add_option("--override-total", override_total);
  review->add_flag("--mark", mark, "Open a failure case (fail only)");
  review->add_option("--key", idem_key, "Idempotency key");
  review->callback([&] {
    json body = {{"run_id", run_id}, {"reviewer_id", reviewer}, {"verdict", verdict},
                 {"notes", notes},   {"mark", mark}};
    if (!override_risk.empty()) body["override_risk"] = override_risk;
    if (override_total >= 0) body["override_total"] = override_total;
    treval::Request r = make("POST", "/reviews", body);
    if (!idem_key.empty()) r.headers["idempotency-key"] = idem_key;
    requests.push_back(r);
  });

  // cases
  auto* cases = app.add_subcommand("case", "Failure cases")->require_subcommand(1);
  std::string case_id, patch_kind, patch_desc, patch_id, target_version, evidence_batch;
  cases->add_subcommand("list", "List cases")->callback([&] {
    requests.push_back(make("GET", "/cases"));
  });
  auto* case_show = cases->add_subcommand("show", "Show one case");
  case_show->add_option("--case", case_id)->required();
  case_show->callback([&] { requests.push_back(make("GET", "/cases/" + case_id)); });
  auto* case_mark = cases->add_subcommand("mark", "Mark a triaged candidate");
  case_mark->add_option("--run", run_id)->required();
  case_mark->add_option("--reviewer", reviewer)->required();
  case_mark->add_option("--notes", notes);
  case_mark->callback([&] {
    requests.push_back(make("POST", "/cases/mark",
                            {{"run_id", run_id}, {"reviewer_id", reviewer}, {"notes", notes}}));
  });
  auto* case_patch = cases->add_subcommand("patch", "Attach a patch");
  case_patch->add_option("--case", case_id)->required();
  case_patch->add_option("--kind", patch_kind)->required();
  case_patch->add_option("--description", patch_desc)->required();
  case_patch->add_option("--patch-id", patch_id);
  case_patch->add_option("--target-template-version", target_version);
  case_patch->callback([&] {
    requests.push_back(make("POST", "/cases/" + case_id + "/patch",
                            {{"kind", patch_kind},
                             {"description", patch_desc},
                             {"patch_id", patch_id},
                             {"target_template_version", target_version}}));
  });
  auto* case_close = cases->add_subcommand("close", "Close when enough passes accrued");
  case_close->add_option("--case", case_id)->required();
  case_close->callback([&] { requests.push_back(make("POST", "/cases/" + case_id + "/close")); });
  auto* case_reopen = cases->add_subcommand("reopen", "Reopen a closed case on recurrence");
  case_reopen->add_option("--case", case_id)->required();
  case_reopen->add_option("--batch", evidence_batch)->required();
  case_reopen->callback([&] {
    requests.push_back(make("POST", "/cases/" + case_id + "/reopen", {{"batch_id", evidence_batch}}));
  });

  // regression
  auto* regression = app.add_subcommand("regression", "Regression batches")->require_subcommand(1);
  std::string case_list;
  auto* reg_gen = regression->add_subcommand("generate", "Generate a regression batch");
  reg_gen->add_option("--cases", case_list, "Comma-separated case ids")->required();
  reg_gen->add_option("--batch", batch_id)->required();
  reg_gen->callback([&] {
    requests.push_back(make("POST", "/regressions",
                            {{"case_ids", split_csv_list(case_list)}, {"batch_id", batch_id}}));
  });
  auto* reg_rec = regression->add_subcommand("record", "Record an executed, judged regression batch");
  reg_rec->add_option("--batch", batch_id)->required();
  reg_rec->callback([&] {
    requests.push_back(make("POST", "/regressions/" + batch_id + "/record"));
  });

  // reports
  std::string report_kind = "pilot", format = "text", mode_label, period, report_batch;
  auto* report = app.add_subcommand("report", "Pilot, static or comparison report");
  report->add_option("kind", report_kind)->check(CLI::IsMember({"pilot", "static", "comparison"}));
  report->add_option("--batch", report_batch);
  report->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
  report->add_option("--mode", mode_label);
  report->add_option("--period", period);
  report->add_option("--report", output, "Write the report to this file");
  report->callback([&] {
    treval::Request r = make("GET", "/reports/" + report_kind);
    r.query["format"] = format;
    if (!report_batch.empty()) r.query["batch"] = report_batch;
    if (!mode_label.empty()) r.query["mode"] = mode_label;
    if (!period.empty()) r.query["period"] = period;
    requests.push_back(r);
  });

  // csv
  auto* csv = app.add_subcommand("csv", "CSV exchange")->require_subcommand(1);
  std::string export_dir, scope = "batch_language_topic";
  bool include_text = false;
  auto* csv_export = csv->add_subcommand("export", "Export results");
  csv_export->add_option("--export-dir", export_dir)->required();
  csv_export->add_option("--batch", report_batch);
  csv_export->add_option("--scope", scope)
      ->check(CLI::IsMember({"all", "batch", "batch_language", "batch_language_topic"}));
  csv_export->add_flag("--include-text", include_text);
  csv_export->callback([&] {
    treval::Request r = make("GET", "/csv/export");
    r.query["scope"] = scope;
    if (!report_batch.empty()) r.query["batch"] = report_batch;
    if (include_text) r.query["include_text"] = "true";
    requests.push_back(r);
  });
  auto* csv_import = csv->add_subcommand("import", "Import result CSV files");
  csv_import->add_option("--export-dir", export_dir)->required();
  csv_import->callback([&] {
    json files = json::array();
    for (const auto& f : treval::read_csv_files(export_dir)) {
      files.push_back({{"name", f.name}, {"content", f.content}});
    }
    requests.push_back(make("POST", "/csv/import", {{"files", files}}));
  });

  app.add_subcommand("board", "Lifecycle board")->callback([&] {
    requests.push_back(make("GET", "/board"));
  });
  app.add_subcommand("events", "Ledger event log")->callback([&] {
    requests.push_back(make("GET", "/events"));
  });
  app.add_subcommand("audit", "Re-check every recorded transition")->callback([&] {
    requests.push_back(make("GET", "/audit"));
  });

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--port", serve_port);
  serve_cmd->callback([&] { serve = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (!g.remote.empty()) {
      if (serve) throw treval::Error(treval::Errc::bad_request, "serve cannot be combined with --remote");
      int rc = 0;
      for (const auto& r : requests) {
        treval::Response res = send_remote(g, r);
        if (res.status >= 400) rc = 1;
        if (export_dir.empty() || res.status >= 400 || r.path != "/csv/export") {
          std::cout << res.body << (res.body.ends_with('\n') ? "" : "\n");
        }
      }
      return rc;
    }

    treval::ServiceConfig cfg;
    std::unique_ptr<treval::AgentBackend> agent = std::make_unique<NoAgent>();
    std::unique_ptr<treval::JudgeBackend> judge = std::make_unique<NoJudge>();
    std::unique_ptr<treval::PromptTemplate> prompt;
    if (!g.config.empty()) {
      cfg = treval::load_service_config(g.config);
      agent = treval::make_agent_backend(cfg.agent);
      judge = treval::make_judge_backend(cfg.judge);
      if (!cfg.judge_prompt.empty()) {
        prompt = std::make_unique<treval::PromptTemplate>(
            treval::PromptTemplate::from_file(cfg.judge_prompt.string()));
      }
    }
    if (!g.answers.empty()) {
      agent = treval::make_agent_backend({"template", g.answers, "", 60});
    }
    if (!g.judgments.empty()) {
      judge = treval::make_judge_backend({"template", g.judgments, "", 60});
    }
    if (!g.thresholds.empty()) cfg.thresholds = treval::load_thresholds(g.thresholds);
    if (!g.store.empty()) cfg.storage = g.store;
    if (cfg.storage.empty()) {
      throw treval::Error(treval::Errc::invalid_config, "a storage directory is required (--store)");
    }

    treval::EngineOptions opts;
    opts.thresholds = cfg.thresholds;
    opts.judge.judge_id = cfg.judge_id;
    opts.judge.rubric_version = cfg.rubric_version;
    opts.judge.confidence_floor = cfg.thresholds.confidence_floor;
    opts.judge.prompt = prompt.get();
    opts.parallelism = cfg.parallelism;
    opts.storage = cfg.storage;
    treval::Engine engine(opts, *agent, *judge);
    treval::Gateway gateway(engine, cfg.operator_token);

    if (serve) {
      treval::HttpServer server(gateway);
      int port = server.bind(serve_host.empty() ? cfg.host : serve_host,
                             serve_port >= 0 ? serve_port : cfg.port);
      std::cerr << "listening on " << (serve_host.empty() ? cfg.host : serve_host) << ":" << port
                << "\n";
      server.listen();
      return 0;
    }

    int rc = 0;
    for (auto r : requests) {
      if (!cfg.operator_token.empty()) r.headers["authorization"] = "Bearer " + cfg.operator_token;
      treval::Response res = gateway.handle(r);
      if (res.status >= 400) {
        std::cerr << res.body << "\n";
        return 1;
      }
      if (r.path == "/csv/export" && !export_dir.empty()) {
        json body = json::parse(res.body);
        std::vector<treval::CsvFile> files;
        for (const json& f : body.at("files")) {
          files.push_back({f.at("name").get<std::string>(), f.at("content").get<std::string>()});
        }
        treval::write_csv_files(export_dir, files);
        std::cout << files.size() << " files written to " << export_dir << "\n";
        continue;
      }
      if (!output.empty()) {
        std::ofstream out(output, std::ios::binary);
        out << res.body;
        if (!out) throw treval::Error(treval::Errc::io_error, "cannot write " + output);
        continue;
      }
      std::cout << res.body << (res.body.ends_with('\n') ? "" : "\n");
    }
    return rc;
  } catch (const treval::Error& e) {
    std::cerr << "error (" << treval::to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
