#include "costorm/event_log.hpp"

#include <chrono>
#include <condition_variable>
#include <sstream>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {

Json Event::to_json() const { return Json{{"index", index}, {"type", type}, {"payload", payload}}; }

Event Event::from_json(const Json& j) {
  Event e;
  e.index = j.at("index").get<std::uint64_t>();
  e.type = j.at("type").get<std::string>();
  e.payload = j.value("payload", Json::object());
  return e;
}

std::string Event::to_line() const { return to_json().dump(); }

EventSink EventBuffer::sink() {
  return [this](std::string_view type, Json payload) { emit(type, std::move(payload)); };
}

void EventBuffer::emit(std::string_view type, Json payload) {
  pending_.emplace_back(std::string(type), std::move(payload));
}

std::vector<std::pair<std::string, Json>> EventBuffer::take() { return std::exchange(pending_, {}); }

void EventLog::open_file(const std::string& path, bool truncate) {
  std::lock_guard lock(mu_);
  auto mode = std::ios::out | (truncate ? std::ios::trunc : std::ios::app);
  file_ = std::make_unique<std::ofstream>(path, mode);
  if (!*file_) throw PreconditionError("cannot open event log for writing: " + path);
}

std::uint64_t EventLog::append(std::string_view type, Json payload) {
  std::uint64_t idx;
  {
    std::lock_guard lock(mu_);
    Event e{events_.size(), std::string(type), std::move(payload)};
    idx = e.index;
    if (file_) {
      *file_ << e.to_line() << '\n';
      file_->flush();
    }
    events_.push_back(std::move(e));
  }
  cv_.notify_all();
  return idx;
}

void EventLog::append_all(std::vector<std::pair<std::string, Json>> batch) {
  {
    std::lock_guard lock(mu_);
    for (auto& [type, payload] : batch) {
      Event e{events_.size(), std::move(type), std::move(payload)};
      if (file_) *file_ << e.to_line() << '\n';
      events_.push_back(std::move(e));
    }
    if (file_) file_->flush();
  }
  cv_.notify_all();
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<Event> EventLog::events_since(std::uint64_t first_index) const {
  std::lock_guard lock(mu_);
  if (first_index >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(first_index), events_.end()};
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::size_t EventLog::count(std::string_view type) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : events_) n += e.type == type ? 1 : 0;
  return n;
}

std::string EventLog::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) {
    out += e.to_line();
    out += '\n';
  }
  return out;
}

bool EventLog::wait_for_more(std::size_t known, int timeout_ms) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                      [&] { return events_.size() > known; });
}

std::vector<Event> EventLog::parse_jsonl(std::string_view content) {
  std::vector<Event> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(Event::from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw SchemaError(line_no, std::string("malformed event: ") + e.what());
    }
    if (out.back().index != out.size() - 1)
      throw SchemaError(line_no, "event index out of sequence");
  }
  return out;
}

std::vector<Event> EventLog::read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open event log: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

}  // namespace costorm
