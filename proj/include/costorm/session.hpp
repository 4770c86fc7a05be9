#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "costorm/discourse.hpp"
#include "costorm/errors.hpp"
#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/report.hpp"
#include "costorm/session_state.hpp"

namespace costorm {

struct SessionOptions {
  std::string topic;
  std::optional<std::string> goal;
  Config config;
  std::optional<std::string> log_path;       // JSON-lines mirror of the event log
  std::optional<std::string> snapshot_path;  // rewritten after every command
};

// Thrown by Session::replay when regenerated events differ from the log.
class ReplayDivergence : public Error {
 public:
  ReplayDivergence(std::size_t index, const std::string& what)
      : Error("replay diverged at event " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// One session with a single writer. Commands are serialized; snapshot reads
// return an immutable copy taken at the last turn boundary.
class Session {
 public:
  Session(SessionOptions opts, Gateways gw);

  Utterance step();
  void inject(const std::string& text);
  // Cached until the next map mutation. Throws EmptyMapError on an empty map.
  std::shared_ptr<const Report> report();

  std::shared_ptr<const Json> snapshot() const;
  Json mind_map_json() const;
  Phase phase() const;
  bool terminated() const { return phase() == Phase::Terminated; }
  std::size_t turns() const;
  // Copy of the committed state.
  SessionState state() const;

  const EventLog& log() const { return log_; }
  EventLog& log() { return log_; }
  const Gateways& gateways() const { return gw_; }

  // Re-executes the commands recorded in `events` against `gw` and checks that
  // every regenerated event equals the recorded one.
  static std::unique_ptr<Session> replay(const std::vector<Event>& events, Gateways gw);

 private:
  struct ReplayTag {};
  Session(ReplayTag, Gateways gw);
  void begin(const SessionOptions& opts);
  void publish();

  Gateways gw_;
  EventLog log_;
  std::optional<std::string> snapshot_path_;

  mutable std::mutex writer_;
  SessionState state_;
  std::shared_ptr<const Report> report_;
  std::uint64_t report_version_ = 0;

  mutable std::mutex published_mu_;
  std::shared_ptr<const Json> published_;
  std::shared_ptr<const Json> published_map_;
  Phase published_phase_ = Phase::WarmUp;
  std::size_t published_turns_ = 0;
};

}  // namespace costorm
