#include <gtest/gtest.h>

#include "costorm/errors.hpp"
#include "costorm/types.hpp"

using namespace costorm;

TEST(Types, IntentNamesRoundTrip) {
  for (auto i : {Intent::OriginalQuestion, Intent::InformationRequest, Intent::PotentialAnswer,
                 Intent::FurtherDetails})
    EXPECT_EQ(parse_intent(to_string(i)), i);
}

TEST(Types, ParseIntentTakesEarliestMention) {
  EXPECT_EQ(parse_intent("potential answer, not further details"), Intent::PotentialAnswer);
  EXPECT_EQ(parse_intent("Intent: Further Details. (Potential Answer rejected)"),
            Intent::FurtherDetails);
  EXPECT_EQ(parse_intent("nothing here"), std::nullopt);
}

TEST(Types, IntentClasses) {
  EXPECT_TRUE(is_question_asking(Intent::OriginalQuestion));
  EXPECT_TRUE(is_question_asking(Intent::InformationRequest));
  EXPECT_TRUE(is_question_answering(Intent::PotentialAnswer));
  EXPECT_TRUE(is_question_answering(Intent::FurtherDetails));
}

TEST(Types, DefaultsMatchPublishedSettings) {
  Config c;
  EXPECT_EQ(c.n_experts, 3);
  EXPECT_EQ(c.reorg_threshold_k, 10);
  EXPECT_EQ(c.answer_run_l, 2);
  EXPECT_DOUBLE_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.search_budget, 30);
  EXPECT_NO_THROW(c.validate());
}

TEST(Types, ConfigValidation) {
  Config c;
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = Config{};
  c.n_experts = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = Config{};
  c.answer_run_l = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(Types, ConfigJsonOverridesAndRejectsUnknownKeys) {
  auto c = config_from_json(Json{{"answer_run_l", 3}});
  EXPECT_EQ(c.answer_run_l, 3);
  EXPECT_EQ(c.n_experts, 3);
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_THROW(config_from_json(Json{{"bogus", 1}}), PreconditionError);
}

TEST(Types, UtteranceJsonRoundTrip) {
  Utterance u;
  u.turn_index = 4;
  u.actor = Actor::expert(2);
  u.speaker = "Economist";
  u.intent = Intent::FurtherDetails;
  u.text = "Costs fall [1][2].";
  u.citations = {7, 9};
  u.queries_issued = {"q"};
  EXPECT_EQ(utterance_from_json(to_json(u)), u);
}
