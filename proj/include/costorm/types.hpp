#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "costorm/event_log.hpp"

namespace costorm {

using NodeId = std::uint64_t;
using SnippetId = std::uint64_t;

enum class Intent { OriginalQuestion, InformationRequest, PotentialAnswer, FurtherDetails };

std::string_view to_string(Intent intent);
// Finds the earliest intent name mentioned in `text` (case-insensitive).
std::optional<Intent> parse_intent(std::string_view text);
inline bool is_question_asking(Intent i) {
  return i == Intent::OriginalQuestion || i == Intent::InformationRequest;
}
inline bool is_question_answering(Intent i) { return !is_question_asking(i); }

struct Persona {
  std::string role;
  std::string description;
  friend bool operator==(const Persona&, const Persona&) = default;
};

struct Actor {
  enum class Kind { User, Expert, Moderator };
  Kind kind = Kind::Expert;
  int persona_index = -1;  // Expert only

  static Actor user() { return {Kind::User, -1}; }
  static Actor moderator() { return {Kind::Moderator, -1}; }
  static Actor expert(int i) { return {Kind::Expert, i}; }
  friend bool operator==(const Actor&, const Actor&) = default;
};

std::string_view to_string(Actor::Kind kind);

struct Utterance {
  std::size_t turn_index = 0;
  Actor actor;
  std::string speaker;  // display name: persona role, "User" or "Moderator"
  Intent intent = Intent::OriginalQuestion;
  std::string text;  // [k] refers to citations[k-1]
  std::vector<SnippetId> citations;
  std::vector<std::string> queries_issued;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Config {
  int n_experts = 3;
  int reorg_threshold_k = 10;
  int answer_run_l = 2;
  double alpha = 0.5;
  int insert_candidates_m = 5;
  int history_window_words = 2000;
  int search_budget = 30;
  int moderator_top_r = 10;

  // Throws PreconditionError when a bound is violated.
  void validate() const;
  friend bool operator==(const Config&, const Config&) = default;
};

Json to_json(const Persona& p);
Persona persona_from_json(const Json& j);
Json to_json(const Utterance& u);
Utterance utterance_from_json(const Json& j);
Json to_json(const Config& c);
// Missing keys keep their defaults; unknown keys are rejected.
Config config_from_json(const Json& j, Config base = {});

}  // namespace costorm
