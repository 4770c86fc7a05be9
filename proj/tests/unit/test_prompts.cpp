#include <gtest/gtest.h>

#include <set>

#include "costorm/errors.hpp"
#include "costorm/prompts.hpp"
#include "costorm/text.hpp"

using namespace costorm;

namespace {

// Instruction lines that must appear verbatim (after trimming) in the
// corresponding template.
const std::map<std::string, std::vector<std::string>>& listing_lines() {
  static const std::map<std::string, std::vector<std::string>> k = {
      {"insert_navigate",
       {"Your job is to insert the given information to the knowledge base. The knowledge base is a tree based data structure to organize the collection information. Each knowledge node contains information derived from themantically similar question or intent.",
        "To decide the best placement of the information, you will be navigated in this tree based data structure layer by layer.",
        "You will be presented with the question and query leads to ththeis information, and tree structure.",
        "Output should strictly follow one of options presetned below with no other information.",
        "- 'insert': to place the information under the current node.",
        "- 'step: [child node name]': to step into a specified child node.",
        "- 'create: [new child node name]': to create new child node and insert the info under it.",
        "Example outputs:", "- insert", "- step: node2", "- create: node3",
        "Question and query leads to this info: {intent}", "Tree structure:", "Choice:"}},
      {"insert_candidate_choice",
       {"You will be presented with the question and query leads to this information, and candidate choices of placement. In these choices, -> denotes parent-child relationship. Note that reasonable may not be in these choices.",
        "If there exists reasonable choice, output \"Best placement: [choice index]\"; otherwise, output \"No reasonable choice\".",
        "Candidate placement:", "Decision:"}},
      {"question_to_query",
       {"You want to answer the question or support a claim using Google search.",
        "What do you type in the search box?",
        "The question is raised in a round table discussion on a topic. The question may or may not focus on the topic itself.",
        "Write the queries you will use in the following format:", "- query 1", "- query 2", "...",
        "- query n", "Topic context: {topic}", "I want to collect information about: {question}",
        "Queries:"}},
      {"answer_question",
       {"You are an expert who can use information effectively. You have gathered the related information and will now use the information to form a response.",
        "Make your response as informative as possible and make sure every sentence is supported by the gathered information.",
        "If [Gathered information] is not directly related to the [Topic] and [Question], start your response with \"Based on the available information, I cannot fully address the question.\" Then, provide the most relevant answer you can based on the available information, and explain any limitations or gaps.",
        "Use [1], [2], ..., [n] in line (for example, \"The capital of the United States is Washington, D.C.[1][3].\").",
        "You DO NOT need to include a References or Sources section to list the sources at the end. The style of writing should be formal.",
        "Topic you are discussing about: {topic}", "You want to provide insight on: {question}",
        "Gathered information:", "Style of your response should be: {style}",
        "Now give your response. (Try to use as many different sources as possible and do not hallucinate.)"}},
      {"convert_style",
       {"You are an invited speaker in the round table conversation.",
        "Your task is to make the question or the response more conversational and engaging to facilitate the flow of conversation.",
        "Note that this is ongoing conversation so no need to have welcoming and concluding words. Previous speaker utterance is provided only for making the conversation more natural.",
        "Note that do not hallucinate and keep the citation index like [1] as it is. Also,",
        "You are inivited as: {expert}", "You want to contribute to conversation by: {action}",
        "Previous speaker said: {prev}", "Question or response you want to say: {content}",
        "Your utterance (keep the information as much as you can with citations, prefer shorter answers without loss of information):"}},
      {"kb_summary",
       {"Your job is to give brief summary of what's been discussed in a roundtable conversation. Contents are themantically organized into hierarchical sections.",
        "You will be presented with these sections where \"#\" denotes level of section.",
        "topic: {topic}", "Now give brief summary:"}},
      {"grounded_question",
       {"Your job is to find next discussion focus in a roundtable conversation. You will be given previous conversation summary and some information that might assist you discover new discussion focus.",
        "Note that the new discussion focus should bring new angle and perspective to the discussion and avoid repetition. The new discussion focus should be grounded on the available information and push the boundaries of the current discussion for broader exploration.",
        "The new discussion focus should have natural flow from last utterance in the conversation.",
        "Use [1][2] in line to ground your question.", "Discussion history:", "Available information:",
        "Last utterance in the conversation:",
        "Now give next discussion focus in the format of one sentence question:"}},
      {"generate_experts_with_focus",
       {"You need to select a group of speakers who will be suitable to have roundtable discussion on the [topic] of specific [focus].",
        "You may consider inviting speakers having opposite stands on the topic; speakers representing different interest parties; Ensure that the selected speakers are directly connected to the specific context and scenario provided.",
        "For example, if the discussion focus is about a recent event at a specific university, consider inviting students, faculty members, journalists covering the event, university officials, and local community members.",
        "Use the background information provided about the topic for inspiration. For each speaker, add a description of their interests and what they will focus on during the discussion.",
        "No need to include speakers name in the output.", "Strictly follow format below:",
        "1. [speaker 1 role]: [speaker 1 short description]",
        "2. [speaker 2 role]: [speaker 2 short description]", "Topic of interest: {topic}",
        "Background information:", "Discussion focus: {focus}",
        "Number of speakers needed: {topN}"}},
  };
  return k;
}

PromptSpec bind_all(const std::string& id) {
  PromptSpec spec{id, {}, 100};
  for (const auto& p : prompts::placeholders(prompts::template_text(id)))
    spec.fields.emplace_back(p, "value-of-" + p);
  return spec;
}

}  // namespace

TEST(Prompts, CatalogHasEveryTemplate) {
  auto ids = prompts::template_ids();
  std::set<std::string> got(ids.begin(), ids.end());
  for (const char* id :
       {"question_to_query", "answer_question", "convert_style", "insert_navigate",
        "insert_candidate_choice", "kb_summary", "grounded_question", "generate_experts_with_focus",
        "intent_decision", "direct_question", "subtopic_split", "section_write", "simulated_user"})
    EXPECT_TRUE(got.count(id)) << id;
}

TEST(Prompts, InstructionTemplatesAreVerbatim) {
  for (const auto& [id, lines] : listing_lines()) {
    std::set<std::string> have;
    for (const auto& l : text::split_lines(prompts::template_text(id))) have.insert(text::trim(l));
    for (const auto& l : lines) EXPECT_TRUE(have.count(l)) << id << ": " << l;
  }
}

TEST(Prompts, HedgeSentenceMatchesAnswerTemplate) {
  EXPECT_NE(prompts::template_text("answer_question").find(prompts::kHedgeSentence),
            std::string::npos);
}

TEST(Prompts, UnboundPlaceholderIsPreconditionError) {
  PromptSpec spec{"question_to_query", {{"topic", "t"}}, 100};
  EXPECT_THROW(prompts::validate(spec), PreconditionError);
  EXPECT_THROW(prompts::render(spec), PreconditionError);
  PromptSpec unknown{"no_such_template", {}, 100};
  EXPECT_THROW(prompts::validate(unknown), PreconditionError);
}

TEST(Prompts, NonPositiveTokenLimitRejected) {
  auto spec = bind_all("intent_decision");
  spec.max_output_tokens = 0;
  EXPECT_THROW(prompts::validate(spec), PreconditionError);
}

TEST(Prompts, RenderSubstitutesEveryPlaceholder) {
  for (const auto& id : prompts::template_ids()) {
    auto spec = bind_all(id);
    auto out = prompts::render(spec);
    for (const auto& p : prompts::placeholders(prompts::template_text(id))) {
      EXPECT_EQ(out.find("{" + p + "}"), std::string::npos) << id;
      EXPECT_NE(out.find("value-of-" + p), std::string::npos) << id;
    }
  }
}

TEST(Prompts, FieldHashDependsOnBindings) {
  PromptSpec a{"question_to_query", {{"topic", "t"}, {"question", "q"}}, 100};
  PromptSpec b = a;
  EXPECT_EQ(prompts::field_hash(a), prompts::field_hash(b));
  b.fields[1].second = "q2";
  EXPECT_NE(prompts::field_hash(a), prompts::field_hash(b));
  PromptSpec c{"question_to_query", {{"topic", "tq"}, {"question", ""}}, 100};
  PromptSpec d{"question_to_query", {{"topic", "t"}, {"question", "q"}}, 100};
  EXPECT_NE(prompts::field_hash(c), prompts::field_hash(d));
}
