#pragma once

#include <optional>
#include <span>
#include <string>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/session_state.hpp"
#include "costorm/types.hpp"

namespace costorm {

// Runs the background search and persona generation. A budget that runs out
// during the background search yields a Terminated session.
SessionState start_session(const std::string& topic, const std::optional<std::string>& goal,
                           const Config& config, const Gateways& gw, EventLog& log);

// Length of the longest history suffix made only of expert answers
// (Potential Answer / Further Details).
std::size_t consecutive_answer_run(std::span<const Utterance> history);

struct ActorAssignment {
  Actor actor;
  bool warmup = false;
  friend bool operator==(const ActorAssignment&, const ActorAssignment&) = default;
};

// User if text is pending, then the warm-up queue, then the moderator once the
// steady-state answer run reaches L, else the expert under the cursor.
ActorAssignment next_actor(const SessionState& state);

// Produces and commits one turn. Gateway failures leave `state` and `log`
// untouched. BudgetExhausted terminates the session (searches already issued
// stay on the ledger) and is rethrown.
Utterance advance(SessionState& state, const Gateways& gw, EventLog& log);

// Queues user text for the next turn; a second call before the next advance
// replaces the first.
void inject_user_utterance(SessionState& state, const std::string& text, EventLog& log);

Intent classify_user_intent(const std::string& text, const std::string& history_window,
                            const Gateways& gw);

}  // namespace costorm
