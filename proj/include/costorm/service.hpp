#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/session.hpp"

namespace httplib {
class Server;
}

namespace costorm {

struct ServiceOptions {
  std::string bind_addr = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Called once per created session; may throw GatewayError when misconfigured.
  std::function<Gateways()> gateway_factory;
  Config base_config;
  std::optional<std::string> data_dir;  // event logs, snapshots and records
  int auto_step_interval_ms = 1500;
};

struct ApiResponse {
  ApiResponse() = default;
  ApiResponse(int s, Json b) : status(s), body(std::move(b)) {}
  static ApiResponse raw(int s, std::string content_type, std::string text) {
    ApiResponse r(s, nullptr);
    r.content_type = std::move(content_type);
    r.text = std::move(text);
    return r;
  }

  int status = 200;
  Json body;
  std::string content_type = "application/json";
  std::string text;  // used instead of body when nonempty
};

// HTTP front end over Session objects. Handlers are callable directly, which is
// how the routes and tests reach them.
class SessionService {
 public:
  explicit SessionService(ServiceOptions opts);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  ApiResponse handle_create(const std::string& body);
  ApiResponse handle_step(const std::string& id);
  ApiResponse handle_inject(const std::string& id, const std::string& body);
  ApiResponse handle_snapshot(const std::string& id);
  ApiResponse handle_mindmap(const std::string& id);
  ApiResponse handle_report(const std::string& id, bool markdown = false);
  // Server-sent-event frames for events with index >= since.
  ApiResponse handle_events(const std::string& id, std::uint64_t since);

  std::shared_ptr<Session> find(const std::string& id) const;

  // Registers the routes on `server`.
  void install(httplib::Server& server);
  // Binds and serves until stop(). Returns false when binding fails.
  bool listen();
  // Binds without blocking; returns the bound port or -1.
  int bind();
  bool listen_after_bind();
  void stop();

  static std::string sse_frame(const Event& e);

 private:
  struct Record {
    std::string id;
    std::string created_at;
    std::shared_ptr<Session> session;
    std::atomic<bool> auto_step{false};
    std::jthread auto_thread;
    std::mutex wake_mu;
    std::condition_variable_any wake;
  };

  std::shared_ptr<Record> record(const std::string& id) const;
  std::string new_id();
  void start_auto_step(const std::shared_ptr<Record>& rec);

  ServiceOptions opts_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Record>> sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> stopping_{false};
  std::mt19937_64 rng_;
};

}  // namespace costorm
