#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/types.hpp"

namespace costorm {

enum class Phase { WarmUp, Steady, Terminated };
std::string_view to_string(Phase phase);

struct SessionState {
  std::string topic;
  std::optional<std::string> goal;
  Config config;
  std::vector<Persona> personas;
  std::size_t next_expert_cursor = 0;
  std::vector<Utterance> history;
  MindMap mind_map;
  BudgetCounter budget;
  std::optional<std::string> pending_user_text;
  Phase phase = Phase::WarmUp;

  std::deque<int> warmup_queue;               // experts still owed a warm-up turn
  std::size_t steady_start = 0;               // history index where answer runs start counting
  std::optional<std::size_t> last_moderator_turn;
  SnippetId next_snippet_id = 1;
  std::uint64_t map_version = 0;              // bumped by every committed map mutation
  std::vector<WebResult> background;
};

Json to_json(const SessionState& state);

// Mutable view of the working copy used while one turn is produced.
struct TurnContext {
  SessionState& state;
  const Gateways& gw;
  EventSink sink;

  // Budgeted search; every call is logged as a search event.
  std::vector<WebResult> search(const std::string& query);
  InfoSnippet snippet_from(const WebResult& r, const std::string& question,
                           const std::string& query);
  // Last W words of the discourse, one "speaker (intent): text" line per turn.
  std::string history_window() const;
  void emit(std::string_view type, Json payload) const;
};

std::string render_history(const std::vector<Utterance>& history, std::size_t max_words);

}  // namespace costorm
