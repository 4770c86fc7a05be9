#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <random>

#include "costorm/errors.hpp"
#include "costorm/gateways.hpp"
#include "costorm/scripted.hpp"
#include "costorm/types.hpp"
#include "helpers.hpp"

using namespace costorm;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

Big big_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  Big dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += Big(a[i]) * Big(b[i]);
    na += Big(a[i]) * Big(a[i]);
    nb += Big(b[i]) * Big(b[i]);
  }
  return dot / (sqrt(na) * sqrt(nb));
}

class CountingLm : public LmGateway {
 public:
  std::vector<std::string> answers;
  std::size_t next = 0;

 protected:
  std::string raw_complete(const PromptSpec&, const std::string&) override {
    return next < answers.size() ? answers[next++] : "";
  }
};

}  // namespace

TEST(Embedding, NormalizedIsUnitLength) {
  auto e = normalized({3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.values[0], 0.6);
  EXPECT_DOUBLE_EQ(e.values[1], 0.8);
  EXPECT_THROW(normalized({0.0, 0.0}), GatewayError);
}

TEST(Embedding, CosineMatchesHighPrecisionOracle) {
  EXPECT_NEAR(cosine(normalized({1, 0}), normalized({1, 1})), 0.70710678118654752440, 1e-15);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(16), b(16);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    double want = big_cosine(a, b).convert_to<double>();
    EXPECT_NEAR(cosine(normalized(a), normalized(b)), want, 1e-12);
  }
}

TEST(Embedding, CosineRejectsDimensionMismatch) {
  EXPECT_THROW(cosine(normalized({1, 0}), normalized({1, 0, 0})), PreconditionError);
}

TEST(Urls, CanonicalAndHost) {
  EXPECT_EQ(canonical_url("HTTPS://Example.COM/Path/#frag"), "https://example.com/Path");
  EXPECT_EQ(url_host("https://a.b.example.com:8080/x"), "a.b.example.com");
}

TEST(SourceFilter, MatchesHostAndSubdomains) {
  SourceFilter f({"*.reddit.com", "blogspot.com"});
  EXPECT_TRUE(f.blocked("https://reddit.com/r/x"));
  EXPECT_TRUE(f.blocked("https://old.reddit.com/r/x"));
  EXPECT_TRUE(f.blocked("http://someone.blogspot.com/post"));
  EXPECT_FALSE(f.blocked("https://notreddit.com/"));
  EXPECT_FALSE(f.blocked("https://example.org/reddit.com"));
}

TEST(SourceFilter, ShippedListLoads) {
  auto f = SourceFilter::from_file(costorm::testing::source_path("data/source_blocklist.json"));
  EXPECT_FALSE(f.patterns().empty());
  EXPECT_TRUE(f.blocked("https://www.dailymail.co.uk/news"));
}

TEST(Search, ChargesBudgetFiltersAndDedupes) {
  ScriptedSearch s(SourceFilter({"quora.com"}));
  s.add("q", {{"https://a.org/x/", "A", {"one"}},
              {"https://A.org/x", "A dup", {"two"}},
              {"https://www.quora.com/q", "Q", {"three"}},
              {"https://b.org", "B", {"four"}}});
  auto budget = BudgetCounter::of(2);
  auto r = s.search("q", budget);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].url, "https://a.org/x");
  EXPECT_EQ(r[0].title, "A");
  EXPECT_EQ(r[1].url, "https://b.org");
  EXPECT_EQ(budget.remaining, 1);
  s.search("unknown", budget);
  EXPECT_EQ(budget.used(), 2);
  EXPECT_THROW(s.search("q", budget), BudgetExhausted);
  EXPECT_EQ(budget.remaining, 0);
}

TEST(Search, DefaultEntryExpandsQuery) {
  ScriptedSearch s;
  s.set_default({{"https://example.org/{{slug}}", "About {{query}}", {"{{query}} facts"}}});
  auto budget = BudgetCounter::of(1);
  auto r = s.search("Solar Power", budget);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].url, "https://example.org/solar-power");
  EXPECT_EQ(r[0].title, "About Solar Power");
  EXPECT_EQ(r[0].snippets[0], "Solar Power facts");
}

TEST(Embed, CachedAndDeterministic) {
  ScriptedEmbed e(32);
  auto a = e.embed("hello world");
  auto b = e.embed("hello world");
  EXPECT_EQ(a, b);
  EXPECT_EQ(e.cache_size(), 1u);
  EXPECT_EQ(a.dim(), 32u);
  ScriptedEmbed other(32);
  EXPECT_EQ(other.embed("hello world"), a);
}

TEST(Embed, StrictModeFailsOnUnknownText) {
  ScriptedEmbed e(4, false);
  e.add("known", {1, 0, 0, 0});
  EXPECT_EQ(e.embed("known").values, (std::vector<double>{1, 0, 0, 0}));
  EXPECT_THROW(e.embed("other"), GatewayError);
}

TEST(Lm, EmptyAnswerRetriedOnceThenFails) {
  PromptSpec spec{"user_intent", {}, 20};
  for (const auto& p : prompts::placeholders(prompts::template_text("user_intent")))
    spec.fields.emplace_back(p, "x");
  CountingLm lm;
  lm.answers = {"  ", "Further Details"};
  EXPECT_EQ(lm.complete(spec), "Further Details");
  EXPECT_EQ(lm.calls(), 2u);
  CountingLm never;
  EXPECT_THROW(never.complete(spec), GatewayError);
  EXPECT_EQ(never.calls(), 2u);
}

TEST(Lm, CompleteParsedRetriesOnce) {
  PromptSpec spec{"user_intent", {}, 20};
  for (const auto& p : prompts::placeholders(prompts::template_text("user_intent")))
    spec.fields.emplace_back(p, "x");
  CountingLm lm;
  lm.answers = {"garbage", "Potential Answer"};
  auto r = complete_parsed(lm, spec, [](const std::string& s) { return parse_intent(s); });
  EXPECT_EQ(r, Intent::PotentialAnswer);
  CountingLm bad;
  bad.answers = {"garbage", "still garbage", "Potential Answer"};
  EXPECT_FALSE(complete_parsed(bad, spec, [](const std::string& s) { return parse_intent(s); }));
}

TEST(ScriptedLm, LookupOrder) {
  PromptSpec spec{"user_intent", {}, 20};
  for (const auto& p : prompts::placeholders(prompts::template_text("user_intent")))
    spec.fields.emplace_back(p, "val");
  ScriptedLm lm;
  EXPECT_THROW(lm.complete(spec), GatewayError);
  lm.add("user_intent", "*", "wild {{" + spec.fields[0].first + "}}");
  EXPECT_EQ(lm.complete(spec), "wild val");
  lm.set_responder([](const PromptSpec&) { return std::optional<std::string>("responder"); });
  EXPECT_EQ(lm.complete(spec), "responder");
  lm.add("user_intent", prompts::field_hash(spec), "exact");
  EXPECT_EQ(lm.complete(spec), "exact");
}

TEST(ScriptedLm, FixtureDirectoryLoads) {
  auto gw = costorm::testing::fixture_gateways();
  ASSERT_TRUE(gw.lm && gw.search && gw.embed);
  auto budget = BudgetCounter::of(1);
  EXPECT_FALSE(gw.search->search("anything at all", budget).empty());
}
