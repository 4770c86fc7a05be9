#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "costorm/agents.hpp"
#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/report.hpp"
#include "costorm/session_state.hpp"

namespace costorm::eval {

struct SeekCase {
  std::string domain;
  std::string topic;
  std::string goal;
  friend bool operator==(const SeekCase&, const SeekCase&) = default;
};

// JSON lines of {domain, topic, goal}. Missing or empty fields and duplicate
// (topic, goal) pairs raise SchemaError with the 1-based line number.
std::vector<SeekCase> parse_wildseek(std::string_view content);
std::vector<SeekCase> load_wildseek(const std::string& path);
std::size_t distinct_domains(std::span<const SeekCase> cases);

struct Rubric {
  std::string criterion;
  std::string description;
  std::array<std::string, 5> scores;

  static Rubric from_json(const Json& j);
};
// A file holding {"rubrics": [...]} or a bare list.
std::vector<Rubric> load_rubrics(const std::string& path);

// One follow-up question from the simulated user.
std::string simulate_user(const SeekCase& c, const std::string& history, const Gateways& gw);

struct RagTurn {
  agents::CitedText answer;
  std::vector<InfoSnippet> snippets;
};

// Search on the question, then a grounded answer over the results.
RagTurn rag_chatbot_step(const std::string& question, TurnContext& ctx);

enum class Pipeline { CoStorm, Rag };
std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view s);

struct RunOptions {
  Config config;
  int max_turns = 0;  // 0: derived from the budget
  bool with_report = true;
};

struct Transcript {
  Pipeline pipeline = Pipeline::CoStorm;
  SeekCase seek_case;
  std::vector<Event> events;
  std::vector<Utterance> history;
  std::map<SnippetId, InfoSnippet> snippets;
  std::optional<Report> report;
  int budget = 0;
  int searches = 0;
};

// Drives one case until the search ledger reaches `budget`. CoStorm receives a
// simulated-user question after every full expert rotation; Rag alternates a
// simulated-user question with one answer.
Transcript run_budgeted(Pipeline pipeline, const SeekCase& c, int budget, const Gateways& gw,
                        const RunOptions& opts = {});

// 1 - mean cosine over ordered pairs. Needs at least two embeddings.
double info_diversity(std::span<const Embedding> embs);

// Distinct URLs cited by expert question-answering utterances.
std::size_t unique_cited_urls(const Transcript& t);

// Diversity of the sources cited in the final report, one embedding per URL.
std::optional<double> report_diversity(const Transcript& t, EmbedGateway& embed);

// Parses "[RESULT] k", "Score: k" or a bare k in 1..5.
std::optional<int> parse_score(const std::string& completion);

// Grades the last 2000 words of `text`. Throws GatewayError when no score in
// 1..5 comes back after one retry.
int rubric_grade(const std::string& text, const Rubric& rubric, LmGateway& evaluator);
inline constexpr std::size_t kGradingWords = 2000;

struct CaseMetrics {
  std::string pipeline;
  SeekCase seek_case;
  int searches = 0;
  std::size_t turns = 0;
  std::size_t unique_urls = 0;
  std::optional<double> diversity;
  std::size_t report_sections = 0;
  std::size_t report_references = 0;
  std::map<std::string, int> grades;  // "report:<criterion>" etc.
};

CaseMetrics measure(const Transcript& t, EmbedGateway& embed,
                    const std::vector<Rubric>& report_rubrics = {},
                    LmGateway* evaluator = nullptr);

std::string metrics_csv(std::span<const CaseMetrics> rows);
Json metrics_summary(std::span<const CaseMetrics> rows);

// Insertion benchmark.
struct InsertionTask {
  Json outline;  // {"label", "children"} tree
  InfoSnippet snippet;
  std::vector<std::string> gold_path;
};

// JSON lines {outline, snippet: {url, title, excerpt, question, query}, gold_path}.
// Gold paths missing from the outline or deeper than three levels raise
// SchemaError.
std::vector<InsertionTask> parse_insertion_tasks(std::string_view content);
std::vector<InsertionTask> load_insertion_tasks(const std::string& path);

enum class InsertMethod { EmbeddingOnly, LmOnly, Hybrid };
std::string_view to_string(InsertMethod m);
InsertMethod parse_insert_method(std::string_view s);

// Label path the method chooses for the task's snippet.
std::vector<std::string> place(const InsertionTask& task, InsertMethod m, const Gateways& gw,
                               int candidates_m = 5);

struct LevelScore {
  std::size_t tasks = 0;
  std::size_t correct = 0;
  std::size_t partial = 0;  // correct or a proper ancestor of gold
  double accuracy() const { return tasks ? 100.0 * correct / tasks : 0.0; }
  double partial_accuracy() const { return tasks ? 100.0 * partial / tasks : 0.0; }
};

struct AccuracyReport {
  InsertMethod method = InsertMethod::Hybrid;
  std::array<LevelScore, 3> levels;  // index 0 is first level
  std::vector<std::vector<std::string>> placements;
  std::size_t total() const;
};

AccuracyReport insertion_benchmark(std::span<const InsertionTask> tasks, InsertMethod m,
                                   const Gateways& gw, int candidates_m = 5);

// Rows laid out like the insertion results table (percentages, two decimals).
std::string accuracy_table(std::span<const AccuracyReport> reports);
Json to_json(const AccuracyReport& r);

}  // namespace costorm::eval
