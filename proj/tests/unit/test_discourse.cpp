#include <gtest/gtest.h>

#include "costorm/discourse.hpp"
#include "costorm/errors.hpp"
#include "costorm/text.hpp"
#include "helpers.hpp"

using namespace costorm;
using costorm::testing::answering_gateways;
using costorm::testing::fixture_gateways;

namespace {

Utterance utt(Actor a, Intent i) {
  Utterance u;
  u.actor = a;
  u.intent = i;
  return u;
}

SessionState steady_state(int l) {
  SessionState s;
  s.config.answer_run_l = l;
  s.personas = {{"A", ""}, {"B", ""}, {"C", ""}};
  s.phase = Phase::Steady;
  return s;
}

Config cfg(int budget = 30) {
  Config c;
  c.search_budget = budget;
  return c;
}

}  // namespace

TEST(Discourse, AnswerRunCountsTrailingExpertAnswers) {
  std::vector<Utterance> h = {utt(Actor::expert(0), Intent::PotentialAnswer),
                              utt(Actor::moderator(), Intent::OriginalQuestion),
                              utt(Actor::expert(1), Intent::FurtherDetails),
                              utt(Actor::expert(2), Intent::PotentialAnswer)};
  EXPECT_EQ(consecutive_answer_run(h), 2u);
  h.push_back(utt(Actor::user(), Intent::PotentialAnswer));
  EXPECT_EQ(consecutive_answer_run(h), 0u);
  h.push_back(utt(Actor::expert(0), Intent::InformationRequest));
  EXPECT_EQ(consecutive_answer_run(h), 0u);
}

TEST(Discourse, NextActorPriority) {
  auto s = steady_state(2);
  s.next_expert_cursor = 1;
  EXPECT_EQ(next_actor(s), (ActorAssignment{Actor::expert(1), false}));
  s.history = {utt(Actor::expert(0), Intent::PotentialAnswer),
               utt(Actor::expert(1), Intent::PotentialAnswer)};
  EXPECT_EQ(next_actor(s).actor, Actor::moderator());
  s.steady_start = 1;
  EXPECT_EQ(next_actor(s).actor, Actor::expert(1));
  s.pending_user_text = "hi";
  EXPECT_EQ(next_actor(s).actor, Actor::user());
  s.phase = Phase::Terminated;
  EXPECT_THROW(next_actor(s), StateError);
}

TEST(Discourse, WarmUpQueueBeforeModerator) {
  auto s = steady_state(1);
  s.phase = Phase::WarmUp;
  s.warmup_queue = {2, 0};
  s.history = {utt(Actor::expert(1), Intent::PotentialAnswer)};
  EXPECT_EQ(next_actor(s), (ActorAssignment{Actor::expert(2), true}));
}

TEST(Discourse, StartSessionLogsBackgroundAndPersonas) {
  EventLog log;
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), fixture_gateways(), log);
  EXPECT_EQ(s.phase, Phase::WarmUp);
  EXPECT_EQ(s.personas.size(), 3u);
  EXPECT_EQ(s.budget.used(), 1);
  auto ev = log.events();
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].type, "session_start");
  EXPECT_EQ(ev[1].type, "search");
  EXPECT_EQ(ev[2].type, "persona_update");
  EXPECT_THROW(start_session(" ", std::nullopt, cfg(), fixture_gateways(), log), PreconditionError);
}

TEST(Discourse, ModeratorEveryThirdTurnWhenExpertsAnswer) {
  EventLog log;
  auto gw = answering_gateways();
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), gw, log);
  std::vector<Actor::Kind> kinds;
  for (int t = 0; t < 12; ++t) kinds.push_back(advance(s, gw, log).actor.kind);
  using K = Actor::Kind;
  std::vector<K> want = {K::Expert, K::Expert, K::Expert, K::Expert, K::Expert, K::Moderator,
                         K::Expert, K::Expert, K::Moderator, K::Expert, K::Expert, K::Moderator};
  EXPECT_EQ(kinds, want);
  EXPECT_EQ(s.phase, Phase::Steady);
  EXPECT_EQ(s.steady_start, 3u);
  EXPECT_EQ(s.history[0].intent, Intent::PotentialAnswer);
  EXPECT_EQ(s.history[1].actor, Actor::expert(1));
  EXPECT_EQ(s.history[2].actor, Actor::expert(2));
  s.mind_map.check_invariants();
}

TEST(Discourse, CitationsResolveToMapSnippets) {
  EventLog log;
  auto gw = answering_gateways();
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), gw, log);
  for (int t = 0; t < 6; ++t) advance(s, gw, log);
  for (const auto& u : s.history) {
    auto idx = text::citation_indices(u.text);
    for (int k : idx) {
      ASSERT_LE(static_cast<std::size_t>(k), u.citations.size());
      EXPECT_TRUE(s.mind_map.has_snippet(u.citations[static_cast<std::size_t>(k - 1)]));
      EXPECT_TRUE(s.mind_map.snippet(u.citations[static_cast<std::size_t>(k - 1)]).cited);
    }
  }
}

TEST(Discourse, ModeratorQuestionCitesItsInspiration) {
  EventLog log;
  auto gw = answering_gateways();
  std::dynamic_pointer_cast<ScriptedLm>(gw.lm)->add("grounded_question", "*",
                                                    "Why would [2] matter here? Compare [1][2][9].");
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), gw, log);
  for (int t = 0; t < 5; ++t) advance(s, gw, log);
  const auto version = s.map_version;
  const auto u = advance(s, gw, log);
  ASSERT_EQ(u.actor.kind, Actor::Kind::Moderator);
  EXPECT_EQ(u.text, "Why would [1] matter here? Compare [2][1].");
  ASSERT_EQ(u.citations.size(), 2u);
  EXPECT_NE(u.citations[0], u.citations[1]);
  for (SnippetId id : u.citations) {
    ASSERT_TRUE(s.mind_map.has_snippet(id));
    EXPECT_TRUE(s.mind_map.snippet(id).cited);
    EXPECT_LT(s.mind_map.snippet(id).retrieved_at_turn, 5u);
  }
  EXPECT_EQ(s.map_version, version + 1);
  const auto inspired = log.events().back().payload["details"]["inspired_by"];
  EXPECT_EQ(inspired[0], u.citations[1]);
  EXPECT_EQ(inspired[1], u.citations[0]);
}

TEST(Discourse, FailedTurnLeavesStateAndLogUntouched) {
  EventLog log;
  auto gw = answering_gateways();
  auto lm = std::dynamic_pointer_cast<ScriptedLm>(gw.lm);
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), gw, log);
  advance(s, gw, log);
  const auto before = to_json(s);
  const auto log_size = log.size();
  lm->set_responder([](const PromptSpec& spec) -> std::optional<std::string> {
    if (spec.template_id == "answer_question") throw GatewayError("model unavailable");
    return std::nullopt;
  });
  EXPECT_THROW(advance(s, gw, log), GatewayError);
  EXPECT_EQ(to_json(s), before);
  EXPECT_EQ(log.size(), log_size);
  lm->set_responder({});
  advance(s, gw, log);
  EXPECT_EQ(s.history.size(), 2u);
}

TEST(Discourse, BudgetRunsOutAfterCommittedTurn) {
  EventLog log;
  auto gw = answering_gateways();
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(2), gw, log);
  advance(s, gw, log);
  EXPECT_EQ(s.phase, Phase::Terminated);
  EXPECT_EQ(log.events().back().type, "terminate");
  EXPECT_EQ(log.count("search"), 2u);
  EXPECT_THROW(advance(s, gw, log), StateError);
}

TEST(Discourse, BudgetOfOneEndsAtStart) {
  EventLog log;
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(1), fixture_gateways(), log);
  EXPECT_EQ(s.phase, Phase::Terminated);
  EXPECT_EQ(log.count("search"), 1u);
}

TEST(Discourse, ExhaustionMidTurnKeepsSearchLedger) {
  costorm::testing::Scripted sc;
  sc.lm = std::dynamic_pointer_cast<ScriptedLm>(answering_gateways().lm);
  sc.lm->add("question_to_query", "*", "- one\n- two\n- three");
  sc.search->add("T", {{"https://example.org/bg", "bg", {"background"}}});
  EventLog log;
  auto gw = sc.gw();
  auto s = start_session("T", std::nullopt, cfg(3), gw, log);
  EXPECT_THROW(advance(s, gw, log), BudgetExhausted);
  EXPECT_EQ(s.phase, Phase::Terminated);
  EXPECT_TRUE(s.history.empty());
  EXPECT_EQ(s.budget.remaining, 0);
  EXPECT_EQ(log.count("search"), 3u);
  EXPECT_EQ(log.count("turn"), 0u);
  EXPECT_EQ(log.events().back().type, "terminate");
}

TEST(Discourse, InjectReplacesPendingText) {
  EventLog log;
  auto gw = answering_gateways();
  auto s = start_session("AlphaFold 3", std::nullopt, cfg(), gw, log);
  inject_user_utterance(s, "first", log);
  inject_user_utterance(s, "second", log);
  auto ev = log.events();
  EXPECT_EQ(ev.back().payload["replaced"], true);
  EXPECT_EQ(ev.back().payload["previous"], "first");
  EXPECT_THROW(inject_user_utterance(s, "  ", log), PreconditionError);
  auto u = advance(s, gw, log);
  EXPECT_EQ(u.actor, Actor::user());
  EXPECT_EQ(u.text, "second");
  EXPECT_EQ(u.intent, Intent::OriginalQuestion);
  EXPECT_FALSE(s.pending_user_text);
  // The user turn does not consume a warm-up slot.
  EXPECT_EQ(s.warmup_queue.size(), 3u);
  EXPECT_EQ(advance(s, gw, log).actor, Actor::expert(0));
}
