#include <gtest/gtest.h>

#include "costorm/errors.hpp"
#include "costorm/mind_map.hpp"
#include "helpers.hpp"

using namespace costorm;
using costorm::testing::Scripted;

namespace {

InfoSnippet snip(SnippetId id, std::string question) {
  InfoSnippet s;
  s.id = id;
  s.url = "https://example.org/" + std::to_string(id);
  s.title = "T" + std::to_string(id);
  s.excerpt = "excerpt " + std::to_string(id);
  s.question = std::move(question);
  return s;
}

Json outline() {
  return {{"label", "Energy"},
          {"children",
           {{{"label", "Solar"}, {"children", {{{"label", "Panels"}}, {{"label", "Costs"}}}}},
            {{"label", "Wind"}}}}};
}

}  // namespace

TEST(MindMap, OutlineBuildsTree) {
  auto m = MindMap::from_outline(outline());
  EXPECT_EQ(m.topic(), "Energy");
  EXPECT_EQ(m.concept_count(), 4u);
  auto costs = m.find_path({"Solar", "Costs"});
  ASSERT_TRUE(costs);
  EXPECT_EQ(m.depth(*costs), 2u);
  EXPECT_EQ(m.path_text(*costs), "Solar > Costs");
  EXPECT_EQ(m.find_path({"solar", "COSTS"}), costs);
  EXPECT_FALSE(m.find_path({"Solar", "Nope"}));
  m.check_invariants();
}

TEST(MindMap, ChildLabelRulesAndDepthBound) {
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  EXPECT_THROW(m.add_child(m.root(), " a "), PreconditionError);
  EXPECT_THROW(m.add_child(m.root(), "  "), PreconditionError);
  auto b = m.add_child(a, "B");
  auto c = m.add_child(b, "C");
  EXPECT_EQ(m.depth(c), kMaxConceptDepth);
  EXPECT_THROW(m.add_child(c, "D"), PreconditionError);
  EXPECT_TRUE(m.is_ancestor(a, c));
  EXPECT_FALSE(m.is_ancestor(c, a));
}

TEST(MindMap, SnippetsMoveAndStayUnique) {
  auto m = MindMap::from_outline(outline());
  auto wind = *m.find_path({"Wind"});
  auto panels = *m.find_path({"Solar", "Panels"});
  m.add_snippet(snip(1, "q"), wind);
  EXPECT_THROW(m.add_snippet(snip(1, "q"), wind), PreconditionError);
  EXPECT_THROW(m.add_snippet(snip(2, "q"), m.root()), PreconditionError);
  m.move_snippet(1, panels);
  EXPECT_EQ(m.location(1), panels);
  EXPECT_EQ(m.subtree_snippet_count(*m.find_path({"Solar"})), 1u);
  m.check_invariants();
}

TEST(MindMap, CleanRemovesEmptyAndCollapsesChains) {
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  auto b = m.add_child(a, "B");
  m.add_child(m.root(), "Empty");
  m.add_snippet(snip(1, "q"), b);
  clean(m);
  m.check_invariants();
  EXPECT_EQ(m.concept_count(), 1u);
  EXPECT_EQ(m.label_path(*m.location(1)), std::vector<std::string>{"B"});
}

TEST(MindMap, CollapseMergesLabelClash) {
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  auto inner = m.add_child(a, "B");
  auto b = m.add_child(m.root(), "B");
  m.add_snippet(snip(1, "q1"), inner);
  m.add_snippet(snip(2, "q2"), b);
  m.collapse_into_child(a);
  m.check_invariants();
  EXPECT_EQ(m.concept_count(), 1u);
  EXPECT_EQ(m.location(1), m.location(2));
}

TEST(MindMap, EmptyOutlineThrows) {
  auto m = MindMap::from_outline(outline());
  EXPECT_THROW(to_outline(m), EmptyMapError);
  m.add_snippet(snip(1, "q"), *m.find_path({"Wind"}));
  auto o = to_outline(m);
  ASSERT_EQ(o.sections.size(), 4u);
  EXPECT_EQ(o.sections[0].heading_path, std::vector<std::string>{"Solar"});
  EXPECT_EQ(o.sections[3].snippet_ids, std::vector<SnippetId>{1});
}

TEST(MindMap, RenderStructureUsesHashLevels) {
  auto m = MindMap::from_outline(outline());
  EXPECT_EQ(render_structure(m), "# Solar\n## Panels\n## Costs\n# Wind");
  EXPECT_EQ(render_subtree(m, m.root(), 2), "# Energy\n## Solar\n## Wind");
}

TEST(MindMap, CandidatesRankedByCosine) {
  auto m = MindMap::from_outline(outline());
  ScriptedEmbed e(3, false);
  e.add("Solar", {1, 0, 0});
  e.add("Solar > Panels", {0.9, 0.1, 0});
  e.add("Solar > Costs", {0, 1, 0});
  e.add("Wind", {0, 0, 1});
  auto c = candidate_concepts(m, normalized({1, 0, 0}), 2, e);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(m.path_text(c[0].first), "Solar");
  EXPECT_EQ(m.path_text(c[1].first), "Solar > Panels");
  EXPECT_THROW(candidate_concepts(m, normalized({1, 0, 0}), 0, e), PreconditionError);
}

TEST(Insert, CandidateStageChoosesListedNode) {
  Scripted s;
  auto m = MindMap::from_outline(outline());
  s.lm->add("insert_candidate_choice", "*", "Best placement: 1");
  std::vector<double> axis(64, 0.0);
  axis[0] = 1.0;
  s.embed->add("solar panel efficiency", axis);
  s.embed->add("Solar > Panels", axis);
  Json events = Json::array();
  auto p = insert(m, snip(1, "solar panel efficiency"), s.gw(), {},
                  [&](std::string_view t, Json pl) { events.push_back({{"type", t}, {"p", pl}}); });
  EXPECT_EQ(p.stage, PlacementChoice::Stage::Candidate);
  EXPECT_EQ(m.path_text(p.node), "Solar > Panels");
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0]["p"]["stage"], "candidate");
  m.check_invariants();
}

TEST(Insert, NavigationCreatesNode) {
  Scripted s;
  auto m = MindMap::from_outline(outline());
  s.lm->add("insert_candidate_choice", "*", "No reasonable choice.");
  s.lm->set_responder([&](const PromptSpec& spec) -> std::optional<std::string> {
    if (spec.template_id != "insert_navigate") return std::nullopt;
    const auto& st = *spec.field("structure");
    if (st.rfind("# Energy", 0) == 0) return "step: Solar";
    return "create: Storage";
  });
  auto p = insert(m, snip(1, "battery storage for solar"), s.gw(), {});
  EXPECT_EQ(p.stage, PlacementChoice::Stage::Navigation);
  EXPECT_EQ(m.path_text(p.node), "Solar > Storage");
}

TEST(Insert, UnusableAnswersFallBackToUncategorized) {
  Scripted s;
  auto m = MindMap::from_outline(outline());
  s.lm->add("insert_candidate_choice", "*", "hmm");
  s.lm->add("insert_navigate", "*", "step: Nowhere");
  auto p = insert(m, snip(1, "q"), s.gw(), {});
  EXPECT_TRUE(p.degraded);
  EXPECT_EQ(m.path_text(p.node), "Uncategorized");
  auto p2 = insert(m, snip(2, "q2"), s.gw(), {});
  EXPECT_EQ(p2.node, p.node);
  m.check_invariants();
}

TEST(Insert, RootInsertIsInvalid) {
  Scripted s;
  MindMap m("T");
  s.lm->add("insert_navigate", "*", "insert");
  auto p = insert(m, snip(1, "q"), s.gw(), {});
  EXPECT_TRUE(p.degraded);
  EXPECT_NE(p.node, m.root());
}

TEST(Insert, RejectsEmptyQuestionAndDuplicates) {
  Scripted s;
  MindMap m("T");
  s.lm->add("insert_navigate", "*", "create: A");
  EXPECT_THROW(insert(m, snip(1, " "), s.gw(), {}), PreconditionError);
  insert(m, snip(1, "q"), s.gw(), {});
  EXPECT_THROW(insert(m, snip(1, "q"), s.gw(), {}), PreconditionError);
}

TEST(Reorganize, SplitsCrowdedConcept) {
  Scripted s;
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  s.lm->add("insert_candidate_choice", "*", "Best placement: 1");
  s.lm->add("subtopic_split", "*", "1. Left\n2. Right");
  s.lm->set_responder([](const PromptSpec& spec) -> std::optional<std::string> {
    if (spec.template_id != "insert_navigate") return std::nullopt;
    const auto& intent = *spec.field("intent");
    return intent.find("left") != std::string::npos ? "create: Left" : "create: Right";
  });
  for (SnippetId i = 1; i <= 3; ++i) m.add_snippet(snip(i, "left " + std::to_string(i)), a);
  for (SnippetId i = 4; i <= 6; ++i) m.add_snippet(snip(i, "right " + std::to_string(i)), a);
  InsertOptions opts;
  opts.reorg_threshold_k = 5;
  // Candidate stage answers "1" which within A ranks one of the fresh children;
  // any legal outcome must keep the tree valid and empty A.
  Json events = Json::array();
  auto r = reorganize(m, a, s.gw(), opts, [&](std::string_view t, Json) { events.push_back(t); });
  EXPECT_TRUE(r.applied);
  EXPECT_EQ(r.subtopics, (std::vector<std::string>{"Left", "Right"}));
  m.check_invariants();
  EXPECT_EQ(m.snippet_count(), 6u);
  EXPECT_EQ(r.residual, 0u);
  EXPECT_EQ(events.back(), "reorganize");
}

TEST(Reorganize, RequiresThresholdAndHonorsDepth) {
  Scripted s;
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  auto b = m.add_child(a, "B");
  auto c = m.add_child(b, "C");
  InsertOptions opts;
  opts.reorg_threshold_k = 1;
  m.add_snippet(snip(1, "q"), c);
  EXPECT_THROW(reorganize(m, c, s.gw(), opts), PreconditionError);
  m.add_snippet(snip(2, "q2"), c);
  std::vector<std::string> kinds;
  auto r = reorganize(m, c, s.gw(), opts, [&](std::string_view, Json p) { kinds.push_back(p["kind"]); });
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(kinds, std::vector<std::string>{"reorganize_depth_limit"});
}

TEST(Reorganize, TriggeredByInsertAboveThreshold) {
  Scripted s;
  MindMap m("T");
  auto a = m.add_child(m.root(), "A");
  s.lm->add("insert_candidate_choice", "*", "Best placement: 1");
  s.lm->add("subtopic_split", "*", "- Sub");
  s.lm->add("insert_navigate", "*", "insert");
  InsertOptions opts;
  opts.reorg_threshold_k = 2;
  for (SnippetId i = 1; i <= 2; ++i) m.add_snippet(snip(i, "q" + std::to_string(i)), a);
  auto p = insert(m, snip(3, "q3"), s.gw(), opts);
  EXPECT_TRUE(p.reorganized);
  m.check_invariants();
  EXPECT_EQ(m.snippet_count(), 3u);
}
