#pragma once

#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace costorm {

using Json = nlohmann::json;

// Event types written to the session log.
namespace events {
inline constexpr std::string_view kSessionStart = "session_start";
inline constexpr std::string_view kTurn = "turn";
inline constexpr std::string_view kSearch = "search";
inline constexpr std::string_view kInsert = "insert";
inline constexpr std::string_view kReorganize = "reorganize";
inline constexpr std::string_view kPersonaUpdate = "persona_update";
inline constexpr std::string_view kInject = "inject";
inline constexpr std::string_view kReport = "report";
inline constexpr std::string_view kWarning = "warning";
inline constexpr std::string_view kTerminate = "terminate";
}  // namespace events

struct Event {
  std::uint64_t index = 0;
  std::string type;
  Json payload;

  Json to_json() const;
  static Event from_json(const Json& j);
  // One JSON-lines record, keys sorted, no trailing newline.
  std::string to_line() const;
};

// Receives events produced inside an operation. Indices are assigned by the
// log when the operation commits.
using EventSink = std::function<void(std::string_view type, Json payload)>;

// Collects events for one in-flight operation so they can be committed or
// dropped together.
class EventBuffer {
 public:
  EventSink sink();
  void emit(std::string_view type, Json payload);
  std::vector<std::pair<std::string, Json>> take();
  bool empty() const noexcept { return pending_.empty(); }

 private:
  std::vector<std::pair<std::string, Json>> pending_;
};

// Append-only session log. Optionally mirrors every record to a JSON-lines file.
class EventLog {
 public:
  EventLog() = default;

  // Appends to `path`, truncating it first when `truncate` is set.
  void open_file(const std::string& path, bool truncate = true);

  std::uint64_t append(std::string_view type, Json payload);
  void append_all(std::vector<std::pair<std::string, Json>> batch);

  std::vector<Event> events() const;
  std::vector<Event> events_since(std::uint64_t first_index) const;
  std::size_t size() const;
  std::size_t count(std::string_view type) const;

  std::string to_jsonl() const;

  // Blocks until the log holds more than `known` events or the timeout passes.
  bool wait_for_more(std::size_t known, int timeout_ms) const;

  static std::vector<Event> read_jsonl(const std::string& path);
  static std::vector<Event> parse_jsonl(std::string_view content);

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable_any cv_;
  std::vector<Event> events_;
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace costorm
