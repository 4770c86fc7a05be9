#include "costorm/session_state.hpp"

#include "costorm/text.hpp"

namespace costorm {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::WarmUp: return "WarmUp";
    case Phase::Steady: return "Steady";
    case Phase::Terminated: return "Terminated";
  }
  return "?";
}

Json to_json(const SessionState& s) {
  Json personas = Json::array();
  for (const auto& p : s.personas) personas.push_back(to_json(p));
  Json history = Json::array();
  for (const auto& u : s.history) history.push_back(to_json(u));
  return {{"topic", s.topic},
          {"goal", s.goal ? Json(*s.goal) : Json(nullptr)},
          {"config", to_json(s.config)},
          {"phase", std::string(to_string(s.phase))},
          {"personas", personas},
          {"next_expert_cursor", s.next_expert_cursor},
          {"history", history},
          {"mind_map", s.mind_map.to_json()},
          {"budget", {{"initial", s.budget.initial}, {"remaining", s.budget.remaining},
                      {"used", s.budget.used()}}},
          {"pending_user_text",
           s.pending_user_text ? Json(*s.pending_user_text) : Json(nullptr)},
          {"map_version", s.map_version}};
}

std::vector<WebResult> TurnContext::search(const std::string& query) {
  auto results = gw.search->search(query, state.budget);
  Json urls = Json::array();
  for (const auto& r : results) urls.push_back(r.url);
  emit(events::kSearch,
       {{"query", query}, {"results", urls}, {"remaining", state.budget.remaining}});
  return results;
}

InfoSnippet TurnContext::snippet_from(const WebResult& r, const std::string& question,
                                      const std::string& query) {
  InfoSnippet s;
  s.id = state.next_snippet_id++;
  s.url = r.url;
  s.title = r.title;
  for (const auto& part : r.snippets) {
    if (!s.excerpt.empty()) s.excerpt += '\n';
    s.excerpt += part;
  }
  if (text::trim(s.excerpt).empty()) s.excerpt = r.title.empty() ? r.url : r.title;
  s.question = question;
  s.query = query;
  s.question_embedding = gw.embed->embed(question);
  s.retrieved_at_turn = state.history.size();
  return s;
}

std::string render_history(const std::vector<Utterance>& history, std::size_t max_words) {
  std::string all;
  for (const auto& u : history) {
    all += u.speaker + " (" + std::string(to_string(u.intent)) + "): " + u.text + "\n";
  }
  if (text::word_count(all) <= max_words) return all;
  return text::last_words(all, max_words);
}

std::string TurnContext::history_window() const {
  return render_history(state.history, static_cast<std::size_t>(state.config.history_window_words));
}

void TurnContext::emit(std::string_view type, Json payload) const {
  if (sink) sink(type, std::move(payload));
}

}  // namespace costorm
