#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace costorm {

// One LM request: which template to fill and the values for its {placeholders}.
struct PromptSpec {
  std::string template_id;
  std::vector<std::pair<std::string, std::string>> fields;
  int max_output_tokens = 500;

  const std::string* field(std::string_view name) const;
};

namespace prompts {

// Template identifiers. The first eight carry the mind-map, expert and
// moderator instructions verbatim; the rest are engine-defined.
inline constexpr std::string_view kQuestionToQuery = "question_to_query";
inline constexpr std::string_view kAnswerQuestion = "answer_question";
inline constexpr std::string_view kConvertStyle = "convert_style";
inline constexpr std::string_view kInsertNavigate = "insert_navigate";
inline constexpr std::string_view kInsertCandidateChoice = "insert_candidate_choice";
inline constexpr std::string_view kKbSummary = "kb_summary";
inline constexpr std::string_view kGroundedQuestion = "grounded_question";
inline constexpr std::string_view kGenerateExperts = "generate_experts_with_focus";
inline constexpr std::string_view kIntentDecision = "intent_decision";
inline constexpr std::string_view kDirectQuestion = "direct_question";
inline constexpr std::string_view kSubtopicSplit = "subtopic_split";
inline constexpr std::string_view kSectionWrite = "section_write";
inline constexpr std::string_view kSimulatedUser = "simulated_user";
inline constexpr std::string_view kUserIntent = "user_intent";
inline constexpr std::string_view kRubricGrade = "rubric_grade";

// The sentence an answer must open with when the gathered information
// does not address the question.
inline constexpr std::string_view kHedgeSentence =
    "Based on the available information, I cannot fully address the question.";

std::vector<std::string> template_ids();

// Raw template text with {name} placeholders. Throws PreconditionError on an
// unknown id.
const std::string& template_text(std::string_view template_id);

std::vector<std::string> placeholders(std::string_view template_text);

// Throws PreconditionError if the template is unknown or a placeholder is unbound.
void validate(const PromptSpec& spec);

// Validates, then substitutes every placeholder.
std::string render(const PromptSpec& spec);

// Stable hash over the ordered field bindings; keys scripted completions.
std::string field_hash(const PromptSpec& spec);

}  // namespace prompts
}  // namespace costorm
