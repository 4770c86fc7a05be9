#include "costorm/types.hpp"

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {

namespace {
constexpr std::pair<Intent, std::string_view> kIntentNames[] = {
    {Intent::OriginalQuestion, "Original Question"},
    {Intent::InformationRequest, "Information Request"},
    {Intent::PotentialAnswer, "Potential Answer"},
    {Intent::FurtherDetails, "Further Details"},
};
}  // namespace

std::string_view to_string(Intent intent) {
  for (const auto& [i, name] : kIntentNames)
    if (i == intent) return name;
  return "?";
}

std::optional<Intent> parse_intent(std::string_view s) {
  auto lower = text::to_lower(s);
  std::optional<Intent> best;
  std::size_t best_pos = std::string::npos;
  auto consider = [&](Intent i, std::string_view name) {
    auto pos = lower.find(text::to_lower(name));
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best = i;
    }
  };
  for (const auto& [i, name] : kIntentNames) consider(i, name);
  consider(Intent::InformationRequest, "Request Information");
  return best;
}

std::string_view to_string(Actor::Kind kind) {
  switch (kind) {
    case Actor::Kind::User: return "User";
    case Actor::Kind::Expert: return "Expert";
    case Actor::Kind::Moderator: return "Moderator";
  }
  return "?";
}

void Config::validate() const {
  if (n_experts < 1) throw PreconditionError("config: n_experts must be >= 1");
  if (reorg_threshold_k < 2) throw PreconditionError("config: reorg_threshold_k must be >= 2");
  if (answer_run_l < 1) throw PreconditionError("config: answer_run_l must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("config: alpha must be in [0, 1]");
  if (insert_candidates_m < 1) throw PreconditionError("config: insert_candidates_m must be >= 1");
  if (history_window_words < 1)
    throw PreconditionError("config: history_window_words must be >= 1");
  if (search_budget < 1) throw PreconditionError("config: search_budget must be >= 1");
  if (moderator_top_r < 1) throw PreconditionError("config: moderator_top_r must be >= 1");
}

Json to_json(const Persona& p) { return {{"role", p.role}, {"description", p.description}}; }

Persona persona_from_json(const Json& j) {
  return {j.at("role").get<std::string>(), j.value("description", std::string{})};
}

Json to_json(const Utterance& u) {
  return {{"turn_index", u.turn_index},
          {"actor", std::string(to_string(u.actor.kind))},
          {"persona_index", u.actor.persona_index},
          {"speaker", u.speaker},
          {"intent", std::string(to_string(u.intent))},
          {"text", u.text},
          {"citations", u.citations},
          {"queries_issued", u.queries_issued}};
}

Utterance utterance_from_json(const Json& j) {
  Utterance u;
  u.turn_index = j.at("turn_index").get<std::size_t>();
  auto actor = j.at("actor").get<std::string>();
  if (actor == "User")
    u.actor = Actor::user();
  else if (actor == "Moderator")
    u.actor = Actor::moderator();
  else if (actor == "Expert")
    u.actor = Actor::expert(j.value("persona_index", 0));
  else
    throw PreconditionError("unknown actor: " + actor);
  u.speaker = j.value("speaker", std::string{});
  auto intent = parse_intent(j.at("intent").get<std::string>());
  if (!intent) throw PreconditionError("unknown intent in utterance");
  u.intent = *intent;
  u.text = j.at("text").get<std::string>();
  u.citations = j.value("citations", std::vector<SnippetId>{});
  u.queries_issued = j.value("queries_issued", std::vector<std::string>{});
  return u;
}

Json to_json(const Config& c) {
  return {{"n_experts", c.n_experts},
          {"reorg_threshold_k", c.reorg_threshold_k},
          {"answer_run_l", c.answer_run_l},
          {"alpha", c.alpha},
          {"insert_candidates_m", c.insert_candidates_m},
          {"history_window_words", c.history_window_words},
          {"search_budget", c.search_budget},
          {"moderator_top_r", c.moderator_top_r}};
}

Config config_from_json(const Json& j, Config c) {
  if (!j.is_object()) throw PreconditionError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "n_experts") c.n_experts = value.get<int>();
      else if (key == "reorg_threshold_k") c.reorg_threshold_k = value.get<int>();
      else if (key == "answer_run_l") c.answer_run_l = value.get<int>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "insert_candidates_m") c.insert_candidates_m = value.get<int>();
      else if (key == "history_window_words") c.history_window_words = value.get<int>();
      else if (key == "search_budget") c.search_budget = value.get<int>();
      else if (key == "moderator_top_r") c.moderator_top_r = value.get<int>();
      else throw PreconditionError("unknown config key: " + key);
    } catch (const Json::exception& e) {
      throw PreconditionError("config key " + key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

}  // namespace costorm
