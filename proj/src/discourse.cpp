#include "costorm/discourse.hpp"

#include "costorm/agents.hpp"
#include "costorm/errors.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/text.hpp"

namespace costorm {
namespace {

Json personas_json(const std::vector<Persona>& ps) {
  Json out = Json::array();
  for (const auto& p : ps) out.push_back(to_json(p));
  return out;
}

void terminate(SessionState& state, EventLog& log, std::string_view reason) {
  if (state.phase == Phase::Terminated) return;
  state.phase = Phase::Terminated;
  log.append(events::kTerminate, {{"reason", reason}, {"budget_used", state.budget.used()}});
}

agents::TurnOutput user_turn(TurnContext& ctx) {
  auto& state = ctx.state;
  const std::string text = *state.pending_user_text;
  agents::TurnOutput out;
  auto& u = out.utterance;
  u.turn_index = state.history.size();
  u.actor = Actor::user();
  u.speaker = "User";
  u.intent = classify_user_intent(text, ctx.history_window(), ctx.gw);
  u.text = text;
  auto results = ctx.search(text);
  u.queries_issued.push_back(text);
  for (const auto& r : results) out.snippets.push_back(ctx.snippet_from(r, text, text));
  out.personas = agents::generate_experts(state.topic, results, state.config.n_experts, text, ctx.gw);
  return out;
}

agents::TurnOutput moderator_utterance(TurnContext& ctx) {
  auto mod = agents::moderator_turn(ctx);
  agents::TurnOutput out;
  auto& u = out.utterance;
  u.turn_index = ctx.state.history.size();
  u.actor = Actor::moderator();
  u.speaker = "Moderator";
  u.intent = Intent::OriginalQuestion;
  u.text = mod.question;
  u.citations = mod.citations;
  out.personas = std::move(mod.personas);
  out.details["pool"] = mod.pool;
  out.details["inspired_by"] = mod.inspired_by;
  out.details["degraded"] = mod.degraded;
  return out;
}

}  // namespace

SessionState start_session(const std::string& topic, const std::optional<std::string>& goal,
                           const Config& config, const Gateways& gw, EventLog& log) {
  if (text::trim(topic).empty()) throw PreconditionError("start_session: topic must be nonempty");
  config.validate();
  SessionState state;
  state.topic = topic;
  state.goal = goal;
  state.config = config;
  state.mind_map = MindMap(topic);
  state.budget = BudgetCounter::of(config.search_budget);
  state.phase = Phase::WarmUp;

  EventBuffer buffer;
  TurnContext ctx{state, gw, buffer.sink()};
  buffer.emit(events::kSessionStart,
              {{"topic", topic}, {"goal", goal ? Json(*goal) : Json(nullptr)},
               {"config", to_json(config)}});
  state.background = ctx.search(topic);
  state.personas =
      agents::generate_experts(topic, state.background, config.n_experts, goal, gw);
  buffer.emit(events::kPersonaUpdate, {{"personas", personas_json(state.personas)}, {"by", "start"}});
  for (int i = 0; i < config.n_experts; ++i) state.warmup_queue.push_back(i);
  log.append_all(buffer.take());
  if (state.budget.exhausted()) terminate(state, log, "budget");
  return state;
}

std::size_t consecutive_answer_run(std::span<const Utterance> history) {
  std::size_t run = 0;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->actor.kind != Actor::Kind::Expert || !is_question_answering(it->intent)) break;
    ++run;
  }
  return run;
}

ActorAssignment next_actor(const SessionState& state) {
  if (state.phase == Phase::Terminated) throw StateError("session is terminated");
  if (state.pending_user_text) return {Actor::user(), false};
  if (state.phase == Phase::WarmUp && !state.warmup_queue.empty())
    return {Actor::expert(state.warmup_queue.front()), true};
  std::span<const Utterance> steady(state.history);
  steady = steady.subspan(std::min(state.steady_start, state.history.size()));
  if (consecutive_answer_run(steady) >= static_cast<std::size_t>(state.config.answer_run_l))
    return {Actor::moderator(), false};
  return {Actor::expert(static_cast<int>(state.next_expert_cursor)), false};
}

Utterance advance(SessionState& state, const Gateways& gw, EventLog& log) {
  const auto who = next_actor(state);

  SessionState work = state;
  EventBuffer buffer;
  TurnContext ctx{work, gw, buffer.sink()};
  agents::TurnOutput out;
  try {
    switch (who.actor.kind) {
      case Actor::Kind::User: out = user_turn(ctx); break;
      case Actor::Kind::Moderator: out = moderator_utterance(ctx); break;
      case Actor::Kind::Expert:
        out = agents::expert_turn(who.actor.persona_index, ctx,
                                  who.warmup ? std::optional(Intent::PotentialAnswer) : std::nullopt);
        break;
    }

    InsertOptions opts{work.config.insert_candidates_m, work.config.reorg_threshold_k, true};
    for (auto& s : out.snippets) insert(work.mind_map, std::move(s), gw, opts, ctx.sink);
  } catch (const BudgetExhausted&) {
    // Keep the ledger of searches that did happen; drop the partial turn.
    state.budget = work.budget;
    std::vector<std::pair<std::string, Json>> searches;
    for (auto& e : buffer.take())
      if (e.first == events::kSearch) searches.push_back(std::move(e));
    log.append_all(std::move(searches));
    terminate(state, log, "budget");
    throw;
  }

  bool map_changed = !out.snippets.empty();
  // Sources cited by a moderator question are already on the map.
  for (SnippetId id : out.utterance.citations) {
    if (!work.mind_map.has_snippet(id) || work.mind_map.snippet(id).cited) continue;
    work.mind_map.snippet(id).cited = true;
    map_changed = true;
  }
  if (map_changed) ++work.map_version;
  if (out.personas) {
    work.personas = std::move(*out.personas);
    if (work.next_expert_cursor >= work.personas.size()) work.next_expert_cursor = 0;
    ctx.emit(events::kPersonaUpdate,
             {{"personas", personas_json(work.personas)},
              {"by", std::string(to_string(who.actor.kind))}});
  }

  switch (who.actor.kind) {
    case Actor::Kind::User: work.pending_user_text.reset(); break;
    case Actor::Kind::Moderator: work.last_moderator_turn = out.utterance.turn_index; break;
    case Actor::Kind::Expert:
      if (who.warmup) {
        work.warmup_queue.pop_front();
      } else {
        work.next_expert_cursor = (work.next_expert_cursor + 1) % work.personas.size();
      }
      break;
  }
  work.history.push_back(out.utterance);
  if (work.phase == Phase::WarmUp && work.warmup_queue.empty()) {
    work.phase = Phase::Steady;
    work.steady_start = work.history.size();
  }

  Json payload = to_json(out.utterance);
  payload["warmup"] = who.warmup;
  payload["details"] = out.details;
  ctx.emit(events::kTurn, std::move(payload));

  state = std::move(work);
  log.append_all(buffer.take());
  if (state.budget.exhausted()) terminate(state, log, "budget");
  return state.history.back();
}

void inject_user_utterance(SessionState& state, const std::string& text, EventLog& log) {
  if (text::trim(text).empty()) throw PreconditionError("user utterance must be nonempty");
  if (state.phase == Phase::Terminated) throw StateError("session is terminated");
  Json payload{{"text", text}, {"replaced", state.pending_user_text.has_value()}};
  if (state.pending_user_text) payload["previous"] = *state.pending_user_text;
  state.pending_user_text = text;
  log.append(events::kInject, std::move(payload));
}

Intent classify_user_intent(const std::string& text, const std::string& history_window,
                            const Gateways& gw) {
  if (text::trim(text).empty()) throw PreconditionError("classify_user_intent: empty text");
  PromptSpec spec{std::string(prompts::kUserIntent),
                  {{"history", history_window.empty() ? "N/A" : history_window}, {"utterance", text}},
                  20};
  try {
    if (auto i = complete_parsed(*gw.lm, spec, [](const std::string& o) { return parse_intent(o); }))
      return *i;
  } catch (const GatewayError&) {
  }
  return Intent::OriginalQuestion;
}

}  // namespace costorm
