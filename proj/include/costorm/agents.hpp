#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "costorm/gateways.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/session_state.hpp"
#include "costorm/types.hpp"

namespace costorm::agents {

// Text with inline [k] markers; citation_map resolves each k to a snippet.
struct CitedText {
  std::string text;
  std::map<int, SnippetId> citation_map;
  friend bool operator==(const CitedText&, const CitedText&) = default;
};

// True iff every marker has a mapping and every mapping is used.
bool is_consistent(const CitedText& c);

// Numbered "[k]: title / url / excerpt" block; [k] is snippets[k-1].
std::string info_block(std::span<const InfoSnippet> snippets);

// Renumbers markers 1..n by first appearance; returns the rewritten text and
// the snippet ids in marker order.
std::pair<std::string, std::vector<SnippetId>> finalize_citations(const CitedText& c);

std::vector<Persona> parse_personas(const std::string& completion);

std::vector<Persona> generate_experts(const std::string& topic,
                                      const std::vector<WebResult>& background, int n,
                                      const std::optional<std::string>& focus, const Gateways& gw);

Intent decide_intent(const Persona& persona, const std::string& topic,
                     const std::string& history_window, const Gateways& gw);

std::vector<std::string> parse_queries(const std::string& completion);
std::vector<std::string> generate_queries(const std::string& topic, const std::string& question,
                                          const Gateways& gw);

CitedText grounded_answer(const std::string& topic, const std::string& question,
                          std::span<const InfoSnippet> snippets, const std::string& style,
                          const Gateways& gw, const EventSink& sink = {});

CitedText polish_utterance(const Persona& persona, const std::string& action,
                           const std::string& prev_utterance, const CitedText& content,
                           const Gateways& gw, const EventSink& sink = {});

// cos(i,t)^alpha * (1 - cos(i,q))^(1 - alpha), cosines clamped to [0, 1].
double rerank_score(double cos_it, double cos_iq, double alpha);

struct RerankItem {
  SnippetId id = 0;
  std::size_t retrieved_at_turn = 0;
  Embedding excerpt;
  Embedding question;
};

// Descending score; ties by earlier retrieval turn, then snippet id.
std::vector<std::pair<SnippetId, double>> moderator_rerank(std::span<const RerankItem> items,
                                                           const Embedding& topic, double alpha);

struct ModeratorOutput {
  std::string question;                // [k] refers to citations[k-1]
  std::vector<SnippetId> citations;    // inspiration sources the question cites
  std::vector<Persona> personas;
  std::vector<SnippetId> pool;         // uncited snippets considered this turn
  std::vector<SnippetId> inspired_by;  // reranked snippets shown to the LM
  bool degraded = false;
};

ModeratorOutput moderator_turn(TurnContext& ctx);

struct TurnOutput {
  Utterance utterance;
  std::vector<InfoSnippet> snippets;  // retrieved this turn, cited flags set
  std::optional<std::vector<Persona>> personas;
  Json details = Json::object();
};

// Question asking: direct question. Question answering: queries, budgeted
// search, grounded answer, polish. `forced` overrides the intent decision.
TurnOutput expert_turn(int persona_index, TurnContext& ctx, std::optional<Intent> forced = {});

}  // namespace costorm::agents
