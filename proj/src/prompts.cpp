#include "costorm/prompts.hpp"

#include <map>
#include <set>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {

const std::string* PromptSpec::field(std::string_view name) const {
  for (const auto& [k, v] : fields)
    if (k == name) return &v;
  return nullptr;
}

namespace prompts {
namespace {

const std::map<std::string, std::string, std::less<>>& catalog() {
  static const std::map<std::string, std::string, std::less<>> kCatalog = {
      {"insert_navigate",
       R"(Your job is to insert the given information to the knowledge base. The knowledge base is a tree based data structure to organize the collection information. Each knowledge node contains information derived from themantically similar question or intent.
To decide the best placement of the information, you will be navigated in this tree based data structure layer by layer.
You will be presented with the question and query leads to ththeis information, and tree structure.

Output should strictly follow one of options presetned below with no other information.
- 'insert': to place the information under the current node.
- 'step: [child node name]': to step into a specified child node.
- 'create: [new child node name]': to create new child node and insert the info under it.

Example outputs:
- insert
- step: node2
- create: node3

Question and query leads to this info: {intent}
Tree structure: 
{structure}
Choice:
)"},
      {"insert_candidate_choice",
       R"(Your job is to insert the given information to the knowledge base. The knowledge base is a tree based data structure to organize the collection information. Each knowledge node contains information derived from themantically similar question or intent.
You will be presented with the question and query leads to this information, and candidate choices of placement. In these choices, -> denotes parent-child relationship. Note that reasonable may not be in these choices.

If there exists reasonable choice, output "Best placement: [choice index]"; otherwise, output "No reasonable choice".

Question and query leads to this info: {intent}
Candidate placement:
{choices}
Decision:
)"},
      {"question_to_query",
       R"(You want to answer the question or support a claim using Google search. 
What do you type in the search box?
The question is raised in a round table discussion on a topic. The question may or may not focus on the topic itself.
Write the queries you will use in the following format:
- query 1
- query 2
...
- query n

Topic context: {topic}
I want to collect information about: {question}
Queries: 
)"},
      {"answer_question",
       R"(You are an expert who can use information effectively. You have gathered the related information and will now use the information to form a response.
Make your response as informative as possible and make sure every sentence is supported by the gathered information. 
If [Gathered information] is not directly related to the [Topic] and [Question], start your response with "Based on the available information, I cannot fully address the question." Then, provide the most relevant answer you can based on the available information, and explain any limitations or gaps.
Use [1], [2], ..., [n] in line (for example, "The capital of the United States is Washington, D.C.[1][3]."). 
You DO NOT need to include a References or Sources section to list the sources at the end. The style of writing should be formal.

Topic you are discussing about: {topic}
You want to provide insight on: {question}
Gathered information:
{info}
Style of your response should be: {style}
Now give your response. (Try to use as many different sources as possible and do not hallucinate.)
)"},
      {"convert_style",
       R"(You are an invited speaker in the round table conversation. 
Your task is to make the question or the response more conversational and engaging to facilitate the flow of conversation.
Note that this is ongoing conversation so no need to have welcoming and concluding words. Previous speaker utterance is provided only for making the conversation more natural.
Note that do not hallucinate and keep the citation index like [1] as it is. Also,

You are inivited as: {expert}
You want to contribute to conversation by: {action}
Previous speaker said: {prev}
Question or response you want to say: {content}
Your utterance (keep the information as much as you can with citations, prefer shorter answers without loss of information): 
)"},
      {"kb_summary",
       R"(Your job is to give brief summary of what's been discussed in a roundtable conversation. Contents are themantically organized into hierarchical sections.
You will be presented with these sections where "#" denotes level of section.

topic: {topic}
Tree structure: 
{structure}
Now give brief summary:
)"},
      {"grounded_question",
       R"(Your job is to find next discussion focus in a roundtable conversation. You will be given previous conversation summary and some information that might assist you discover new discussion focus.
Note that the new discussion focus should bring new angle and perspective to the discussion and avoid repetition. The new discussion focus should be grounded on the available information and push the boundaries of the current discussion for broader exploration.
The new discussion focus should have natural flow from last utterance in the conversation.
Use [1][2] in line to ground your question. 

topic: {topic}
Discussion history: 
{summary}
Available information: 
{information}
Last utterance in the conversation: 
{last_utterance}
Now give next discussion focus in the format of one sentence question:
)"},
      {"generate_experts_with_focus",
       R"(You need to select a group of speakers who will be suitable to have roundtable discussion on the [topic] of specific [focus].
You may consider inviting speakers having opposite stands on the topic; speakers representing different interest parties; Ensure that the selected speakers are directly connected to the specific context and scenario provided.
For example, if the discussion focus is about a recent event at a specific university, consider inviting students, faculty members, journalists covering the event, university officials, and local community members.
Use the background information provided about the topic for inspiration. For each speaker, add a description of their interests and what they will focus on during the discussion.
No need to include speakers name in the output.
Strictly follow format below:
1. [speaker 1 role]: [speaker 1 short description]
2. [speaker 2 role]: [speaker 2 short description]

Topic of interest: {topic}
Background information:
{background_info}
Discussion focus: {focus}
Number of speakers needed: {topN}
)"},
      {"intent_decision",
       R"(You are a speaker in a roundtable conversation about a topic. Based on the conversation so far and your own perspective, decide how you will contribute next.
Choose exactly one of:
- Original Question: initiate a new question.
- Information Request: ask for more information about the previous utterance.
- Potential Answer: offer a possible answer to a previously posed question.
- Further Details: add supplementary information to a previous answer.
Output only the name of the chosen option.

Topic: {topic}
You are: {persona}
Conversation so far:
{history}
Your choice:
)"},
      {"direct_question",
       R"(You are a speaker in a roundtable conversation about a topic. Ask one question that moves the conversation forward from your own perspective. Ground the question in what has been said so far and avoid repeating earlier questions.
Output only the question in one sentence.

Topic: {topic}
You are: {persona}
You want to contribute to conversation by: {action}
Conversation so far:
{history}
Your question:
)"},
      {"subtopic_split",
       R"(You are organizing information collected during a roundtable conversation into a hierarchy. The concept below holds too many pieces of information. Propose names of new subtopics under this concept so that each piece of information fits one subtopic.
Output one subtopic name per line in the format:
- subtopic 1
- subtopic 2

Topic: {topic}
Concept: {concept}
Questions that led to the information under this concept:
{questions}
Subtopics:
)"},
      {"section_write",
       R"(You are writing one section of a long-form report. Write the section using only the gathered information and make sure every sentence is supported by it.
Use [1], [2], ..., [n] in line to cite the gathered information. Do not include a section heading and do not list references at the end. Separate paragraphs with a blank line.

Topic of the report: {topic}
Section: {heading}
Gathered information:
{info}
Section text:
)"},
      {"simulated_user",
       R"(You are a user seeking information on a topic with a specific goal. You are following a roundtable conversation and want to steer it toward what you need to know.
Ask one follow-up question that helps you achieve your goal and that has not been answered yet. Output only the question.

Topic: {topic}
Goal: {goal}
Conversation so far:
{history}
Your question:
)"},
      {"user_intent",
       R"(Classify the intent of the latest utterance in an information-seeking conversation.
Choose exactly one of: Original Question, Information Request, Potential Answer, Further Details.
Output only the name of the chosen option.

Conversation so far:
{history}
Latest utterance: {utterance}
Intent:
)"},
      {"rubric_grade",
       R"(You are a fair judge. Assess the response strictly based on the given score rubric and output a single integer score between 1 and 5.

Response to evaluate:
{response}

Score rubric:
{criterion}
Score 1: {score1}
Score 2: {score2}
Score 3: {score3}
Score 4: {score4}
Score 5: {score5}

Score:
)"},
  };
  return kCatalog;
}

}  // namespace

std::vector<std::string> template_ids() {
  std::vector<std::string> ids;
  for (const auto& [k, v] : catalog()) ids.push_back(k);
  return ids;
}

const std::string& template_text(std::string_view template_id) {
  auto it = catalog().find(template_id);
  if (it == catalog().end())
    throw PreconditionError("unknown prompt template: " + std::string(template_id));
  return it->second;
}

std::vector<std::string> placeholders(std::string_view t) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t i = 0;
  while ((i = t.find('{', i)) != std::string_view::npos) {
    auto j = t.find('}', i);
    if (j == std::string_view::npos) break;
    std::string name(t.substr(i + 1, j - i - 1));
    if (!name.empty() && seen.insert(name).second) out.push_back(name);
    i = j + 1;
  }
  return out;
}

void validate(const PromptSpec& spec) {
  const auto& t = template_text(spec.template_id);
  for (const auto& name : placeholders(t)) {
    if (spec.field(name) == nullptr)
      throw PreconditionError("prompt " + spec.template_id + ": unbound placeholder {" + name +
                              "}");
  }
  if (spec.max_output_tokens <= 0)
    throw PreconditionError("prompt " + spec.template_id + ": max_output_tokens must be positive");
}

std::string render(const PromptSpec& spec) {
  validate(spec);
  const auto& t = template_text(spec.template_id);
  std::string out;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '{') {
      auto j = t.find('}', i);
      if (j != std::string::npos) {
        if (const auto* v = spec.field(std::string_view(t).substr(i + 1, j - i - 1))) {
          out += *v;
          i = j + 1;
          continue;
        }
      }
    }
    out += t[i++];
  }
  return out;
}

std::string field_hash(const PromptSpec& spec) {
  std::string canon;
  for (const auto& [k, v] : spec.fields) {
    canon += k;
    canon += '\x1f';
    canon += v;
    canon += '\x1e';
  }
  return text::hex64(text::fnv1a64(canon));
}

}  // namespace prompts
}  // namespace costorm
