#include "costorm/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "costorm/errors.hpp"
#include "costorm/prompts.hpp"
#include "costorm/text.hpp"

namespace costorm::agents {

std::string info_block(std::span<const InfoSnippet> snippets) {
  std::string out;
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    out += "[" + std::to_string(i + 1) + "]: " + snippets[i].title + "\n" + snippets[i].url + "\n" +
           snippets[i].excerpt + "\n\n";
  }
  return out;
}

namespace {

constexpr std::size_t kMaxQueries = 5;
constexpr std::size_t kBackgroundWords = 1000;
const std::string kAnswerStyle = "informative and concise, with inline citations";

std::string background_block(const std::vector<WebResult>& background) {
  std::string out;
  for (const auto& r : background) {
    out += r.title + ": ";
    for (const auto& s : r.snippets) out += s + " ";
    out += "\n";
  }
  if (text::word_count(out) > kBackgroundWords) out = text::last_words(out, kBackgroundWords);
  return out.empty() ? "N/A" : out;
}

std::multiset<int> marker_multiset(std::string_view s) {
  auto v = text::citation_indices(s);
  return {v.begin(), v.end()};
}

std::string strip_role_decoration(std::string s) {
  s = text::trim(s);
  std::erase(s, '*');
  while (!s.empty() && (s.front() == '[' || s.front() == '"')) s.erase(s.begin());
  while (!s.empty() && (s.back() == ']' || s.back() == '"')) s.pop_back();
  return text::trim(s);
}

}  // namespace

bool is_consistent(const CitedText& c) {
  std::set<int> used;
  for (int i : text::citation_indices(c.text)) {
    if (!c.citation_map.count(i)) return false;
    used.insert(i);
  }
  for (const auto& [k, v] : c.citation_map)
    if (!used.count(k)) return false;
  return true;
}

std::pair<std::string, std::vector<SnippetId>> finalize_citations(const CitedText& c) {
  std::map<int, int> renumber;
  std::vector<SnippetId> ids;
  auto out = text::rewrite_citations(c.text, [&](int k) -> std::optional<int> {
    auto it = c.citation_map.find(k);
    if (it == c.citation_map.end()) return std::nullopt;
    auto [pos, fresh] = renumber.emplace(k, static_cast<int>(ids.size()) + 1);
    if (fresh) ids.push_back(it->second);
    return pos->second;
  });
  return {out, ids};
}

std::vector<Persona> parse_personas(const std::string& completion) {
  std::vector<Persona> out;
  std::set<std::string> seen;
  for (const auto& raw : text::split_lines(completion)) {
    auto line = text::trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || line[i] != '.') continue;
    auto body = text::trim(std::string_view(line).substr(i + 1));
    auto colon = body.find(':');
    std::string role = strip_role_decoration(colon == std::string::npos ? body : body.substr(0, colon));
    std::string desc = colon == std::string::npos ? "" : text::trim(body.substr(colon + 1));
    if (role.empty()) continue;
    if (!seen.insert(text::to_lower(role)).second) continue;
    out.push_back({role, desc});
  }
  return out;
}

std::vector<Persona> generate_experts(const std::string& topic,
                                      const std::vector<WebResult>& background, int n,
                                      const std::optional<std::string>& focus, const Gateways& gw) {
  if (n < 1) throw PreconditionError("generate_experts: n must be >= 1");
  PromptSpec spec{std::string(prompts::kGenerateExperts),
                  {{"topic", topic},
                   {"background_info", background_block(background)},
                   {"focus", focus.value_or(topic)},
                   {"topN", std::to_string(n)}},
                  500};
  auto personas = complete_parsed(*gw.lm, spec, [&](const std::string& out) {
    auto ps = parse_personas(out);
    if (ps.size() < static_cast<std::size_t>(n)) return std::optional<std::vector<Persona>>{};
    ps.resize(static_cast<std::size_t>(n));
    return std::optional(ps);
  });
  if (!personas)
    throw GatewayError("could not parse " + std::to_string(n) + " distinct expert personas");
  return *personas;
}

Intent decide_intent(const Persona& persona, const std::string& topic,
                     const std::string& history_window, const Gateways& gw) {
  PromptSpec spec{std::string(prompts::kIntentDecision),
                  {{"topic", topic},
                   {"persona", persona.role + ": " + persona.description},
                   {"history", history_window.empty() ? "N/A" : history_window}},
                  20};
  try {
    if (auto i = complete_parsed(*gw.lm, spec, [](const std::string& o) { return parse_intent(o); }))
      return *i;
  } catch (const GatewayError&) {
  }
  return Intent::PotentialAnswer;
}

std::vector<std::string> parse_queries(const std::string& completion) {
  std::vector<std::string> out;
  for (const auto& raw : text::split_lines(completion)) {
    auto line = text::trim(raw);
    if (line.rfind("- ", 0) != 0 && line.rfind("* ", 0) != 0) continue;
    auto q = text::trim(std::string_view(line).substr(2));
    if (!q.empty()) out.push_back(q);
    if (out.size() == kMaxQueries) break;
  }
  return out;
}

std::vector<std::string> generate_queries(const std::string& topic, const std::string& question,
                                          const Gateways& gw) {
  if (text::trim(question).empty()) throw PreconditionError("generate_queries: empty question");
  PromptSpec spec{std::string(prompts::kQuestionToQuery),
                  {{"topic", topic}, {"question", question}},
                  200};
  try {
    auto qs = complete_parsed(*gw.lm, spec, [](const std::string& o) {
      auto v = parse_queries(o);
      return v.empty() ? std::nullopt : std::optional(v);
    });
    if (qs) return *qs;
  } catch (const GatewayError&) {
  }
  return {question};
}

CitedText grounded_answer(const std::string& topic, const std::string& question,
                          std::span<const InfoSnippet> snippets, const std::string& style,
                          const Gateways& gw, const EventSink& sink) {
  if (snippets.empty()) throw PreconditionError("grounded_answer: no gathered information");
  PromptSpec spec{std::string(prompts::kAnswerQuestion),
                  {{"topic", topic}, {"question", question}, {"info", info_block(snippets)},
                   {"style", style}},
                  1000};
  auto raw = text::trim(gw.lm->complete(spec));
  if (text::starts_with_ci(raw, prompts::kHedgeSentence))
    raw = std::string(prompts::kHedgeSentence) + raw.substr(prompts::kHedgeSentence.size());

  CitedText out;
  std::vector<int> dangling;
  out.text = text::rewrite_citations(raw, [&](int k) -> std::optional<int> {
    if (static_cast<std::size_t>(k) > snippets.size()) {
      dangling.push_back(k);
      return std::nullopt;
    }
    out.citation_map[k] = snippets[static_cast<std::size_t>(k - 1)].id;
    return k;
  });
  if (!dangling.empty() && sink)
    sink(events::kWarning, {{"kind", "grounding_violation"}, {"indices", dangling},
                            {"available", snippets.size()}});
  return out;
}

CitedText polish_utterance(const Persona& persona, const std::string& action,
                           const std::string& prev_utterance, const CitedText& content,
                           const Gateways& gw, const EventSink& sink) {
  if (!is_consistent(content)) throw PreconditionError("polish_utterance: inconsistent citations");
  PromptSpec spec{std::string(prompts::kConvertStyle),
                  {{"expert", persona.role + ": " + persona.description},
                   {"action", action},
                   {"prev", prev_utterance.empty() ? "N/A" : prev_utterance},
                   {"content", content.text}},
                  1000};
  std::string polished;
  try {
    polished = text::trim(gw.lm->complete(spec));
  } catch (const GatewayError&) {
    if (sink) sink(events::kWarning, {{"kind", "polish_failed"}});
    return content;
  }
  if (marker_multiset(polished) != marker_multiset(content.text)) {
    if (sink) sink(events::kWarning, {{"kind", "polish_citation_mismatch"}});
    return content;
  }
  return CitedText{polished, content.citation_map};
}

double rerank_score(double cos_it, double cos_iq, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("rerank: alpha must be in [0, 1]");
  const double relevance = std::clamp(cos_it, 0.0, 1.0);
  const double novelty = 1.0 - std::clamp(cos_iq, 0.0, 1.0);
  // Exponents sum to one, so equal bases give the base back exactly.
  if (relevance == novelty) return relevance;
  return std::pow(relevance, alpha) * std::pow(novelty, 1.0 - alpha);
}

std::vector<std::pair<SnippetId, double>> moderator_rerank(std::span<const RerankItem> items,
                                                           const Embedding& topic, double alpha) {
  struct Scored {
    SnippetId id;
    std::size_t turn;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(items.size());
  for (const auto& it : items)
    scored.push_back({it.id, it.retrieved_at_turn,
                      rerank_score(cosine(it.excerpt, topic), cosine(it.excerpt, it.question), alpha)});
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.turn != b.turn) return a.turn < b.turn;
    return a.id < b.id;
  });
  std::vector<std::pair<SnippetId, double>> out;
  for (const auto& s : scored) out.emplace_back(s.id, s.score);
  return out;
}

ModeratorOutput moderator_turn(TurnContext& ctx) {
  auto& state = ctx.state;
  const auto& map = state.mind_map;
  ModeratorOutput out;

  std::vector<RerankItem> items;
  for (const auto& [id, s] : map.snippets()) {
    if (s.cited) continue;
    if (state.last_moderator_turn && s.retrieved_at_turn <= *state.last_moderator_turn) continue;
    out.pool.push_back(id);
    items.push_back({id, s.retrieved_at_turn, ctx.gw.embed->embed(s.excerpt), s.question_embedding});
  }

  const auto structure = render_structure(map);
  std::string information;
  std::vector<WebResult> inspiration;
  if (items.empty()) {
    out.degraded = true;
    ctx.emit(events::kWarning, {{"kind", "moderator_degraded"}});
  } else {
    auto ranked = moderator_rerank(items, ctx.gw.embed->embed(state.topic), state.config.alpha);
    std::size_t r = std::min(ranked.size(), static_cast<std::size_t>(state.config.moderator_top_r));
    for (std::size_t i = 0; i < r; ++i) {
      const auto& s = map.snippet(ranked[i].first);
      out.inspired_by.push_back(s.id);
      information += "[" + std::to_string(i + 1) + "]: " + s.excerpt + "\n";
      inspiration.push_back({s.url, s.title, {s.excerpt}, true});
    }
  }
  if (!structure.empty()) information += "\nConcepts already discussed:\n" + structure + "\n";
  if (information.empty()) information = "N/A";

  std::string summary = "N/A";
  if (!structure.empty()) {
    PromptSpec kb{std::string(prompts::kKbSummary), {{"topic", state.topic}, {"structure", structure}},
                  500};
    summary = text::trim(ctx.gw.lm->complete(kb));
  }

  PromptSpec spec{std::string(prompts::kGroundedQuestion),
                  {{"topic", state.topic},
                   {"summary", summary},
                   {"information", information},
                   {"last_utterance", state.history.empty() ? "N/A" : state.history.back().text}},
                  200};
  auto raw = ctx.gw.lm->complete(spec);
  for (const auto& line : text::split_lines(raw)) {
    // Markers index the inspiration list; renumber them by first appearance.
    std::vector<SnippetId> cites;
    auto t = text::trim(text::rewrite_citations(line, [&](int k) -> std::optional<int> {
      if (k < 1 || static_cast<std::size_t>(k) > out.inspired_by.size()) return std::nullopt;
      const SnippetId id = out.inspired_by[static_cast<std::size_t>(k - 1)];
      auto it = std::find(cites.begin(), cites.end(), id);
      if (it == cites.end()) it = cites.insert(cites.end(), id);
      return static_cast<int>(it - cites.begin()) + 1;
    }));
    if (!text::strip_citations(t).empty()) {
      out.question = t;
      out.citations = std::move(cites);
      break;
    }
  }
  if (out.question.empty()) throw GatewayError("moderator produced no question");

  out.personas = generate_experts(state.topic, inspiration.empty() ? state.background : inspiration,
                                  state.config.n_experts, out.question, ctx.gw);
  return out;
}

namespace {

std::string current_question(const SessionState& state) {
  for (auto it = state.history.rbegin(); it != state.history.rend(); ++it)
    if (is_question_asking(it->intent)) return it->text;
  return state.topic;
}

std::string action_text(Intent intent, const std::string& question) {
  return std::string(to_string(intent)) + " on: " + question;
}

}  // namespace

TurnOutput expert_turn(int persona_index, TurnContext& ctx, std::optional<Intent> forced) {
  auto& state = ctx.state;
  if (state.phase == Phase::Terminated) throw StateError("expert_turn: session terminated");
  const auto& persona = state.personas.at(static_cast<std::size_t>(persona_index));
  TurnOutput out;
  auto& u = out.utterance;
  u.turn_index = state.history.size();
  u.actor = Actor::expert(persona_index);
  u.speaker = persona.role;
  u.intent = forced ? *forced : decide_intent(persona, state.topic, ctx.history_window(), ctx.gw);
  const std::string prev = state.history.empty() ? "" : state.history.back().text;

  if (is_question_asking(u.intent)) {
    PromptSpec spec{std::string(prompts::kDirectQuestion),
                    {{"topic", state.topic},
                     {"persona", persona.role + ": " + persona.description},
                     {"action", std::string(to_string(u.intent))},
                     {"history", state.history.empty() ? "N/A" : ctx.history_window()}},
                    200};
    CitedText q{text::trim(text::strip_citations(ctx.gw.lm->complete(spec))), {}};
    auto polished = polish_utterance(persona, std::string(to_string(u.intent)), prev, q, ctx.gw, ctx.sink);
    u.text = text::trim(text::strip_citations(polished.text));
    out.details["polish_length_delta"] =
        static_cast<long>(polished.text.size()) - static_cast<long>(q.text.size());
    return out;
  }

  const std::string question = forced ? state.topic : current_question(state);
  auto queries = generate_queries(state.topic, question, ctx.gw);
  for (const auto& q : queries) {
    std::vector<WebResult> results;
    try {
      results = ctx.search(q);
    } catch (const BudgetExhausted&) {
      if (out.snippets.empty()) throw;
      break;
    }
    u.queries_issued.push_back(q);
    for (const auto& r : results) out.snippets.push_back(ctx.snippet_from(r, question, q));
  }

  if (out.snippets.empty()) {
    u.text = std::string(prompts::kHedgeSentence) + " The searches returned no usable sources.";
    ctx.emit(events::kWarning, {{"kind", "no_search_results"}, {"queries", u.queries_issued}});
    return out;
  }

  auto answer = grounded_answer(state.topic, question, out.snippets, kAnswerStyle, ctx.gw, ctx.sink);
  auto polished =
      polish_utterance(persona, action_text(u.intent, question), prev, answer, ctx.gw, ctx.sink);
  out.details["polish_length_delta"] =
      static_cast<long>(polished.text.size()) - static_cast<long>(answer.text.size());
  auto [final_text, ids] = finalize_citations(polished);
  u.text = std::move(final_text);
  u.citations = std::move(ids);
  std::set<SnippetId> cited(u.citations.begin(), u.citations.end());
  for (auto& s : out.snippets) s.cited = cited.count(s.id) != 0;
  return out;
}

}  // namespace costorm::agents
