#include "costorm/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "costorm/errors.hpp"
#include "costorm/eval.hpp"
#include "costorm/live_gateways.hpp"
#include "costorm/scripted.hpp"
#include "costorm/service.hpp"
#include "costorm/session.hpp"
#include "costorm/text.hpp"

namespace costorm {
namespace {

namespace fs = std::filesystem;

struct GatewayFlags {
  std::string scripted;
  std::string config;
};

void add_gateway_flags(CLI::App* cmd, GatewayFlags& g) {
  cmd->add_option("--scripted", g.scripted, "Fixture directory with lm.json, search.json, embed.json")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--config", g.config, "Gateway configuration file for live endpoints")
      ->check(CLI::ExistingFile);
}

Gateways make_gateways(const GatewayFlags& g) {
  if (!g.scripted.empty()) return load_scripted_gateways(g.scripted);
  auto cfg = g.config.empty() ? GatewayConfig::defaults() : GatewayConfig::from_file(g.config);
  return make_live_gateways(cfg);
}

Config load_settings(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open " + path);
  return config_from_json(Json::parse(in));
}

void write_text(const std::string& path, const std::string& content) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::string snapshot_text(const Session& s) { return s.snapshot()->dump(2) + "\n"; }

void print_utterance(std::ostream& out, const Utterance& u) {
  out << "[" << u.turn_index << "] " << u.speaker << " (" << to_string(u.intent) << "): " << u.text
      << "\n";
}

std::atomic<SessionService*> g_service{nullptr};
extern "C" void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collaborative discourse engine with a live mind map and cited reports", "costorm"};
  app.require_subcommand(1);

  // session run / replay
  auto* session = app.add_subcommand("session", "Run or replay a session")->require_subcommand(1);

  auto* run = session->add_subcommand("run", "Run a session from a topic");
  std::string topic, goal, log_path, snapshot_path, report_path, settings;
  int auto_turns = 10;
  int budget = 0;
  std::vector<std::string> inject_at;
  GatewayFlags run_gw;
  run->add_option("--topic", topic, "Topic to explore")->required();
  run->add_option("--goal", goal, "Goal of the information seeker");
  run->add_option("--auto-turns", auto_turns, "Turns to run")->check(CLI::NonNegativeNumber);
  run->add_option("--budget", budget, "Search budget (overrides settings)")->check(CLI::PositiveNumber);
  run->add_option("--settings", settings, "Engine settings JSON")->check(CLI::ExistingFile);
  run->add_option("--log", log_path, "Event log output (JSON lines)");
  run->add_option("--snapshot", snapshot_path, "Snapshot output (JSON)");
  run->add_option("--report", report_path, "Write the final report (Markdown)");
  run->add_option("--inject-at", inject_at, "TURN:TEXT user utterance before the given turn");
  add_gateway_flags(run, run_gw);

  auto* replay = session->add_subcommand("replay", "Re-execute an event log and verify it");
  std::string replay_log, replay_expect, replay_out;
  GatewayFlags replay_gw;
  replay->add_option("--log", replay_log, "Event log to replay")->required()->check(CLI::ExistingFile);
  replay->add_option("--expect-snapshot", replay_expect, "Snapshot the replay must reproduce byte for byte")
      ->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Write the reconstructed snapshot");
  add_gateway_flags(replay, replay_gw);

  // eval run / insertion
  auto* ev = app.add_subcommand("eval", "Automatic evaluation")->require_subcommand(1);
  auto* ev_run = ev->add_subcommand("run", "Budgeted runs over information-seeking cases");
  std::string cases_path, pipeline = "costorm", csv_path, summary_path, logs_dir, rubric_path;
  int ev_budget = 30, jobs = 1, max_cases = 0;
  bool grade = false;
  GatewayFlags ev_gw;
  ev_run->add_option("--cases", cases_path, "Cases (JSON lines)")->required()->check(CLI::ExistingFile);
  ev_run->add_option("--pipeline", pipeline, "costorm, rag or both")
      ->check(CLI::IsMember({"costorm", "rag", "both"}));
  ev_run->add_option("--budget", ev_budget, "Search queries per case")->check(CLI::PositiveNumber);
  ev_run->add_option("--jobs", jobs, "Cases run concurrently")->check(CLI::PositiveNumber);
  ev_run->add_option("--limit", max_cases, "Only the first N cases")->check(CLI::NonNegativeNumber);
  ev_run->add_option("--out", csv_path, "Per-case metrics CSV (default: stdout)");
  ev_run->add_option("--summary", summary_path, "JSON summary");
  ev_run->add_option("--logs-dir", logs_dir, "Write each case's event log and report here");
  ev_run->add_flag("--grade", grade, "Grade reports with the rubric evaluator");
  ev_run->add_option("--rubrics", rubric_path, "Report rubric file")->check(CLI::ExistingFile);
  add_gateway_flags(ev_run, ev_gw);

  auto* ev_ins = ev->add_subcommand("insertion", "Mind map insertion benchmark");
  std::string tasks_path, method = "hybrid", table_path, ins_json;
  int cand_m = 5;
  GatewayFlags ins_gw;
  ev_ins->add_option("--tasks", tasks_path, "Tasks (JSON lines)")->required()->check(CLI::ExistingFile);
  ev_ins->add_option("--method", method, "embedding_only, lm_only, hybrid or all")
      ->check(CLI::IsMember({"embedding_only", "lm_only", "hybrid", "all"}));
  ev_ins->add_option("--candidates", cand_m, "Candidate concepts shown to the LM")->check(CLI::PositiveNumber);
  ev_ins->add_option("--out", table_path, "Markdown table (default: stdout)");
  ev_ins->add_option("--json", ins_json, "Per-level counts and placements");
  add_gateway_flags(ev_ins, ins_gw);

  // report
  auto* rep = app.add_subcommand("report", "Rebuild a session from its log and write the report");
  std::string rep_log, rep_out, rep_json;
  GatewayFlags rep_gw;
  rep->add_option("--log", rep_log, "Event log")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Markdown output (default: stdout)");
  rep->add_option("--json", rep_json, "JSON output");
  add_gateway_flags(rep, rep_gw);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  std::string bind = "127.0.0.1:8080", data_dir, settings_serve;
  int auto_ms = 1500;
  GatewayFlags serve_gw;
  if (const char* b = std::getenv("BIND_ADDR"); b && *b) bind = b;
  serve->add_option("--bind", bind, "HOST:PORT (default from BIND_ADDR)");
  serve->add_option("--data-dir", data_dir, "Event logs and snapshots");
  serve->add_option("--settings", settings_serve, "Engine settings JSON")->check(CLI::ExistingFile);
  serve->add_option("--auto-step-ms", auto_ms, "Auto-step interval")->check(CLI::PositiveNumber);
  add_gateway_flags(serve, serve_gw);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = &app;
    for (auto* s = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front(); s;
         s = s->get_subcommands().empty() ? nullptr : s->get_subcommands().front())
      sub = s;
    err << sub->help();
    return 2;
  }

  try {
    if (*run) {
      Config cfg = load_settings(settings);
      if (budget > 0) cfg.search_budget = budget;
      std::map<int, std::vector<std::string>> injections;
      for (const auto& spec : inject_at) {
        auto colon = spec.find(':');
        if (colon == std::string::npos || colon == 0)
          throw PreconditionError("--inject-at expects TURN:TEXT, got " + spec);
        injections[std::stoi(spec.substr(0, colon))].push_back(spec.substr(colon + 1));
      }
      SessionOptions so;
      so.topic = topic;
      if (!goal.empty()) so.goal = goal;
      so.config = cfg;
      if (!log_path.empty()) so.log_path = log_path;
      Session s(so, make_gateways(run_gw));
      for (const auto& p : s.state().personas) out << "expert: " << p.role << ": " << p.description << "\n";
      for (int t = 0; t < auto_turns && !s.terminated(); ++t) {
        if (auto it = injections.find(t); it != injections.end())
          for (const auto& text : it->second) s.inject(text);
        try {
          print_utterance(out, s.step());
        } catch (const BudgetExhausted&) {
          out << "search budget exhausted\n";
        }
      }
      if (s.terminated()) out << "session terminated (budget used " << s.state().budget.used() << ")\n";
      if (!snapshot_path.empty()) write_text(snapshot_path, snapshot_text(s));
      if (!report_path.empty()) write_text(report_path, s.report()->to_markdown());
      return 0;
    }

    if (*replay) {
      auto events = EventLog::read_jsonl(replay_log);
      auto s = Session::replay(events, make_gateways(replay_gw));
      const auto snap = snapshot_text(*s);
      if (!replay_out.empty()) write_text(replay_out, snap);
      out << "replayed " << events.size() << " events, " << s->turns() << " turns\n";
      if (!replay_expect.empty()) {
        std::ifstream in(replay_expect, std::ios::binary);
        std::string expected((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (expected != snap) {
          err << "error: reconstructed snapshot differs from " << replay_expect << "\n";
          return 1;
        }
        out << "snapshot identical\n";
      }
      return 0;
    }

    if (*ev_run) {
      auto cases = eval::load_wildseek(cases_path);
      if (max_cases > 0 && static_cast<std::size_t>(max_cases) < cases.size()) cases.resize(max_cases);
      std::vector<eval::Pipeline> pipes;
      if (pipeline == "both") pipes = {eval::Pipeline::CoStorm, eval::Pipeline::Rag};
      else pipes = {eval::parse_pipeline(pipeline)};
      const Gateways gw = make_gateways(ev_gw);
      std::shared_ptr<LmGateway> evaluator;
      std::vector<eval::Rubric> rubrics;
      if (grade) {
        evaluator = ev_gw.scripted.empty()
                        ? make_live_grader(ev_gw.config.empty() ? GatewayConfig::defaults()
                                                                : GatewayConfig::from_file(ev_gw.config))
                        : gw.lm;
        rubrics = eval::load_rubrics(rubric_path.empty() ? "data/rubrics/report.json" : rubric_path);
      }
      eval::RunOptions ro;

      struct Job {
        eval::Pipeline p;
        std::size_t case_index;
      };
      std::vector<Job> work;
      for (auto p : pipes)
        for (std::size_t i = 0; i < cases.size(); ++i) work.push_back({p, i});
      std::vector<eval::CaseMetrics> rows(work.size());
      std::atomic<std::size_t> next{0};
      std::mutex log_mu;
      auto worker = [&] {
        for (std::size_t k; (k = next++) < work.size();) {
          const auto& c = cases[work[k].case_index];
          auto tr = eval::run_budgeted(work[k].p, c, ev_budget, gw, ro);
          rows[k] = eval::measure(tr, *gw.embed, rubrics, evaluator.get());
          if (!logs_dir.empty()) {
            const auto stem = (fs::path(logs_dir) / (std::string(eval::to_string(work[k].p)) + "_" +
                                                     std::to_string(work[k].case_index)))
                                  .string();
            std::string jsonl;
            for (const auto& e : tr.events) jsonl += e.to_line() + "\n";
            write_text(stem + ".events.jsonl", jsonl);
            if (tr.report) write_text(stem + ".report.md", tr.report->to_markdown());
          }
          std::lock_guard lock(log_mu);
          err << eval::to_string(work[k].p) << " case " << work[k].case_index << ": "
              << rows[k].searches << " searches, " << rows[k].turns << " turns\n";
        }
      };
      std::vector<std::future<void>> pool;
      for (int j = 0; j < std::min<int>(jobs, static_cast<int>(work.size())); ++j)
        pool.push_back(std::async(std::launch::async, worker));
      for (auto& f : pool) f.get();

      const auto csv = eval::metrics_csv(rows);
      if (csv_path.empty()) out << csv;
      else write_text(csv_path, csv);
      if (!summary_path.empty()) write_text(summary_path, eval::metrics_summary(rows).dump(2) + "\n");
      return 0;
    }

    if (*ev_ins) {
      auto tasks = eval::load_insertion_tasks(tasks_path);
      const Gateways gw = make_gateways(ins_gw);
      std::vector<eval::InsertMethod> methods;
      if (method == "all")
        methods = {eval::InsertMethod::EmbeddingOnly, eval::InsertMethod::LmOnly,
                   eval::InsertMethod::Hybrid};
      else methods = {eval::parse_insert_method(method)};
      std::vector<eval::AccuracyReport> reps;
      Json j = Json::array();
      for (auto m : methods) {
        reps.push_back(eval::insertion_benchmark(tasks, m, gw, cand_m));
        j.push_back(eval::to_json(reps.back()));
      }
      const auto table = eval::accuracy_table(reps);
      if (table_path.empty()) out << table;
      else write_text(table_path, table);
      if (!ins_json.empty()) write_text(ins_json, j.dump(2) + "\n");
      return 0;
    }

    if (*rep) {
      auto s = Session::replay(EventLog::read_jsonl(rep_log), make_gateways(rep_gw));
      auto r = s->report();
      if (rep_out.empty()) out << r->to_markdown();
      else write_text(rep_out, r->to_markdown());
      if (!rep_json.empty()) write_text(rep_json, r->to_json().dump(2) + "\n");
      return 0;
    }

    if (*serve) {
      ServiceOptions so;
      auto colon = bind.rfind(':');
      so.bind_addr = colon == std::string::npos ? bind : bind.substr(0, colon);
      so.port = colon == std::string::npos ? 8080 : std::stoi(bind.substr(colon + 1));
      so.base_config = load_settings(settings_serve);
      so.auto_step_interval_ms = auto_ms;
      if (!data_dir.empty()) so.data_dir = data_dir;
      if (!serve_gw.scripted.empty()) {
        auto shared = load_scripted_gateways(serve_gw.scripted);
        so.gateway_factory = [shared] { return shared; };
      } else {
        auto cfg = serve_gw.config.empty() ? GatewayConfig::defaults()
                                           : GatewayConfig::from_file(serve_gw.config);
        so.gateway_factory = [cfg] { return make_live_gateways(cfg); };
      }
      SessionService svc(so);
      const int port = svc.bind();
      if (port < 0) throw Error("cannot bind " + bind);
      out << "listening on " << so.bind_addr << ":" << port << std::endl;
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.listen_after_bind();
      g_service = nullptr;
      return 0;
    }
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace costorm
