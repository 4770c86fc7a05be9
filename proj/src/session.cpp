#include "costorm/session.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "costorm/errors.hpp"

namespace costorm {

Session::Session(SessionOptions opts, Gateways gw) : gw_(std::move(gw)) {
  if (opts.log_path) log_.open_file(*opts.log_path, true);
  snapshot_path_ = opts.snapshot_path;
  begin(opts);
}

Session::Session(ReplayTag, Gateways gw) : gw_(std::move(gw)) {}

void Session::begin(const SessionOptions& opts) {
  std::lock_guard lock(writer_);
  state_ = start_session(opts.topic, opts.goal, opts.config, gw_, log_);
  publish();
}

void Session::publish() {
  auto snap = std::make_shared<const Json>(to_json(state_));
  auto map = std::make_shared<const Json>((*snap)["mind_map"]);
  if (snapshot_path_) {
    const std::string tmp = *snapshot_path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cannot write snapshot " + tmp);
      out << snap->dump(2) << "\n";
    }
    std::filesystem::rename(tmp, *snapshot_path_);
  }
  std::lock_guard lock(published_mu_);
  published_ = std::move(snap);
  published_map_ = std::move(map);
  published_phase_ = state_.phase;
  published_turns_ = state_.history.size();
}

Utterance Session::step() {
  std::lock_guard lock(writer_);
  if (state_.phase == Phase::Terminated) throw StateError("session is terminated");
  try {
    auto u = advance(state_, gw_, log_);
    publish();
    return u;
  } catch (const BudgetExhausted&) {
    publish();
    throw;
  }
}

void Session::inject(const std::string& text) {
  std::lock_guard lock(writer_);
  inject_user_utterance(state_, text, log_);
  publish();
}

std::shared_ptr<const Report> Session::report() {
  std::lock_guard lock(writer_);
  if (report_ && report_version_ == state_.map_version) return report_;
  EventBuffer warnings;
  auto r = std::make_shared<const Report>(
      generate_report(state_.mind_map, state_, gw_, warnings.sink()));
  log_.append(events::kReport, {{"map_version", state_.map_version},
                                {"sections", r->sections.size()},
                                {"references", r->references.size()}});
  log_.append_all(warnings.take());
  report_ = r;
  report_version_ = state_.map_version;
  return r;
}

std::shared_ptr<const Json> Session::snapshot() const {
  std::lock_guard lock(published_mu_);
  return published_;
}

Json Session::mind_map_json() const {
  std::lock_guard lock(published_mu_);
  return *published_map_;
}

Phase Session::phase() const {
  std::lock_guard lock(published_mu_);
  return published_phase_;
}

std::size_t Session::turns() const {
  std::lock_guard lock(published_mu_);
  return published_turns_;
}

SessionState Session::state() const {
  std::lock_guard lock(writer_);
  return state_;
}

std::unique_ptr<Session> Session::replay(const std::vector<Event>& events, Gateways gw) {
  if (events.empty() || events.front().type != events::kSessionStart)
    throw ReplayDivergence(0, "log must open with session_start");
  std::unique_ptr<Session> s(new Session(ReplayTag{}, std::move(gw)));

  std::size_t i = 0;
  while (i < events.size()) {
    const Event& e = events[i];
    try {
      if (e.type == events::kSessionStart) {
        if (i != 0) throw ReplayDivergence(i, "unexpected session_start");
        SessionOptions opts;
        opts.topic = e.payload.at("topic").get<std::string>();
        if (!e.payload.at("goal").is_null()) opts.goal = e.payload.at("goal").get<std::string>();
        opts.config = config_from_json(e.payload.at("config"));
        s->begin(opts);
      } else if (e.type == events::kInject) {
        s->inject(e.payload.at("text").get<std::string>());
      } else if (e.type == events::kReport) {
        s->report();
      } else {
        try {
          s->step();
        } catch (const BudgetExhausted&) {
        }
      }
    } catch (const ReplayDivergence&) {
      throw;
    } catch (const std::exception& ex) {
      throw ReplayDivergence(i, std::string("command failed: ") + ex.what());
    }

    const auto regenerated = s->log_.events_since(i);
    if (regenerated.empty()) throw ReplayDivergence(i, "command produced no events");
    for (const auto& r : regenerated) {
      if (r.index >= events.size())
        throw ReplayDivergence(r.index, "extra event of type " + r.type);
      const auto& want = events[r.index];
      if (r.to_json() != want.to_json())
        throw ReplayDivergence(r.index, "expected " + want.to_line() + " got " + r.to_line());
    }
    i += regenerated.size();
  }
  return s;
}

}  // namespace costorm
