#include "costorm/service.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <httplib.h>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {
namespace {

ApiResponse error(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Maps engine exceptions onto status codes.
template <class F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const PreconditionError& e) {
    return error(400, e.what());
  } catch (const StateError& e) {
    return error(409, e.what());
  } catch (const EmptyMapError& e) {
    return error(409, e.what());
  } catch (const BudgetExhausted& e) {
    return error(409, e.what());
  } catch (const GatewayError& e) {
    return error(503, e.what());
  } catch (const RetriableError& e) {
    return error(503, e.what());
  } catch (const Json::exception& e) {
    return error(400, std::string("invalid JSON: ") + e.what());
  }
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  auto j = Json::parse(body);
  if (!j.is_object()) throw PreconditionError("request body must be a JSON object");
  return j;
}

}  // namespace

SessionService::SessionService(ServiceOptions opts)
    : opts_(std::move(opts)), rng_(std::random_device{}()) {
  if (!opts_.gateway_factory) throw PreconditionError("service needs a gateway factory");
  if (opts_.data_dir) std::filesystem::create_directories(*opts_.data_dir);
}

SessionService::~SessionService() {
  stop();
  std::lock_guard lock(mu_);
  for (auto& [id, rec] : sessions_) {
    rec->auto_thread.request_stop();
    rec->wake.notify_all();
  }
  sessions_.clear();
}

std::string SessionService::new_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  std::uint64_t v = rng_();
  for (int i = 0; i < 16; ++i, v >>= 4) id += kHex[v & 0xf];
  return id;
}

std::shared_ptr<SessionService::Record> SessionService::record(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session " + id);
  return it->second;
}

std::shared_ptr<Session> SessionService::find(const std::string& id) const {
  return record(id)->session;
}

ApiResponse SessionService::handle_create(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json req = parse_body(body);
    SessionOptions so;
    so.topic = req.value("topic", "");
    if (text::trim(so.topic).empty()) throw PreconditionError("topic must be nonempty");
    if (req.contains("goal") && !req["goal"].is_null()) so.goal = req["goal"].get<std::string>();
    so.config = req.contains("config") ? config_from_json(req["config"], opts_.base_config)
                                       : opts_.base_config;
    so.config.validate();

    Gateways gw = opts_.gateway_factory();
    auto rec = std::make_shared<Record>();
    {
      std::lock_guard lock(mu_);
      do rec->id = new_id();
      while (sessions_.count(rec->id));
    }
    rec->created_at = utc_now();
    Json record_json{{"session_id", rec->id}, {"created_at", rec->created_at}};
    if (opts_.data_dir) {
      auto base = std::filesystem::path(*opts_.data_dir) / rec->id;
      so.log_path = base.string() + ".events.jsonl";
      so.snapshot_path = base.string() + ".snapshot.json";
      record_json["log"] = *so.log_path;
      record_json["snapshot"] = *so.snapshot_path;
    }
    rec->session = std::make_shared<Session>(so, std::move(gw));
    if (opts_.data_dir) {
      std::ofstream out(std::filesystem::path(*opts_.data_dir) / (rec->id + ".record.json"));
      out << record_json.dump(2) << "\n";
    }
    {
      std::lock_guard lock(mu_);
      sessions_[rec->id] = rec;
    }
    if (req.value("auto_step", false)) start_auto_step(rec);
    return {201, {{"session_id", rec->id},
                  {"created_at", rec->created_at},
                  {"phase", std::string(to_string(rec->session->phase()))}}};
  });
}

void SessionService::start_auto_step(const std::shared_ptr<Record>& rec) {
  rec->auto_step = true;
  const int interval = opts_.auto_step_interval_ms;
  Record* r = rec.get();
  rec->auto_thread = std::jthread([r, interval](std::stop_token st) {
    while (!st.stop_requested()) {
      {
        std::unique_lock lock(r->wake_mu);
        r->wake.wait_for(lock, st, std::chrono::milliseconds(interval), [] { return false; });
      }
      if (st.stop_requested() || r->session->terminated()) break;
      try {
        r->session->step();
      } catch (const BudgetExhausted&) {
        break;
      } catch (const StateError&) {
        break;
      } catch (const std::exception& e) {
        std::cerr << "auto-step " << r->id << ": " << e.what() << "\n";
      }
    }
    r->auto_step = false;
  });
}

ApiResponse SessionService::handle_step(const std::string& id) {
  return guarded([&]() -> ApiResponse {
    auto s = find(id);
    if (s->terminated()) throw StateError("session is terminated");
    return {200, to_json(s->step())};
  });
}

ApiResponse SessionService::handle_inject(const std::string& id, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    auto s = find(id);
    const Json req = parse_body(body);
    if (!req.contains("text") || !req["text"].is_string())
      throw PreconditionError("body needs a text field");
    s->inject(req["text"].get<std::string>());
    return {202, {{"accepted", true}}};
  });
}

ApiResponse SessionService::handle_snapshot(const std::string& id) {
  return guarded([&]() -> ApiResponse {
    auto rec = record(id);
    Json body = *rec->session->snapshot();
    body["session_id"] = rec->id;
    body["created_at"] = rec->created_at;
    return {200, std::move(body)};
  });
}

ApiResponse SessionService::handle_mindmap(const std::string& id) {
  return guarded([&]() -> ApiResponse { return {200, find(id)->mind_map_json()}; });
}

ApiResponse SessionService::handle_report(const std::string& id, bool markdown) {
  return guarded([&]() -> ApiResponse {
    auto r = find(id)->report();
    if (markdown) return ApiResponse::raw(200, "text/markdown; charset=utf-8", r->to_markdown());
    return {200, r->to_json()};
  });
}

std::string SessionService::sse_frame(const Event& e) {
  return "id: " + std::to_string(e.index) + "\nevent: " + e.type + "\ndata: " + e.to_line() +
         "\n\n";
}

ApiResponse SessionService::handle_events(const std::string& id, std::uint64_t since) {
  return guarded([&]() -> ApiResponse {
    std::string out;
    for (const auto& e : find(id)->log().events_since(since)) out += sse_frame(e);
    return ApiResponse::raw(200, "text/event-stream", out);
  });
}

void SessionService::install(httplib::Server& svr) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    if (!r.text.empty() || r.content_type != "application/json")
      res.set_content(r.text, r.content_type);
    else
      res.set_content(r.body.dump(), "application/json");
  };

  svr.Post("/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_create(req.body));
  });
  svr.Post(R"(/sessions/([^/]+)/step)",
           [this, reply](const httplib::Request& req, httplib::Response& res) {
             reply(res, handle_step(req.matches[1]));
           });
  svr.Post(R"(/sessions/([^/]+)/utterance)",
           [this, reply](const httplib::Request& req, httplib::Response& res) {
             reply(res, handle_inject(req.matches[1], req.body));
           });
  svr.Get(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_snapshot(req.matches[1]));
  });
  svr.Get(R"(/sessions/([^/]+)/mindmap)",
          [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_mindmap(req.matches[1]));
          });
  svr.Get(R"(/sessions/([^/]+)/report)",
          [this, reply](const httplib::Request& req, httplib::Response& res) {
            bool md = req.get_param_value("format") == "markdown";
            reply(res, handle_report(req.matches[1], md));
          });
  svr.Get(R"(/sessions/([^/]+)/events)",
          [this, reply](const httplib::Request& req, httplib::Response& res) {
            std::shared_ptr<Session> s;
            try {
              s = find(req.matches[1]);
            } catch (const NotFoundError& e) {
              reply(res, error(404, e.what()));
              return;
            }
            std::uint64_t since = 0;
            if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
            else if (req.has_header("Last-Event-ID"))
              since = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
            const bool follow = req.get_param_value("follow") != "0";
            auto next = std::make_shared<std::uint64_t>(since);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [this, s, next, follow](std::size_t, httplib::DataSink& sink) {
                  for (const auto& e : s->log().events_since(*next)) {
                    auto frame = sse_frame(e);
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *next = e.index + 1;
                  }
                  const bool idle = s->terminated() && *next >= s->log().size();
                  if (!follow || idle || stopping_) {
                    sink.done();
                    return true;
                  }
                  if (!s->log().wait_for_more(*next, 1000)) {
                    static constexpr char kPing[] = ": ping\n\n";
                    if (!sink.write(kPing, sizeof kPing - 1)) return false;
                  }
                  return true;
                });
          });
  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"ok":true})", "application/json");
  });
}

int SessionService::bind() {
  if (!server_) {
    server_ = std::make_unique<httplib::Server>();
    install(*server_);
  }
  if (opts_.port == 0) return server_->bind_to_any_port(opts_.bind_addr);
  return server_->bind_to_port(opts_.bind_addr, opts_.port) ? opts_.port : -1;
}

bool SessionService::listen_after_bind() { return server_ && server_->listen_after_bind(); }

bool SessionService::listen() { return bind() >= 0 && listen_after_bind(); }

void SessionService::stop() {
  stopping_ = true;
  if (server_) server_->stop();
}

}  // namespace costorm
