#include "costorm/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "costorm/errors.hpp"
#include "costorm/prompts.hpp"
#include "costorm/session.hpp"
#include "costorm/text.hpp"

namespace costorm::eval {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string required_string(const Json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw SchemaError(line, std::string("missing field '") + key + "'");
  if (!j[key].is_string()) throw SchemaError(line, std::string("field '") + key + "' must be a string");
  auto v = j[key].get<std::string>();
  if (text::trim(v).empty()) throw SchemaError(line, std::string("field '") + key + "' is empty");
  return v;
}

template <class F>
void for_each_json_line(std::string_view content, F&& f) {
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError(line_no, "record must be a JSON object");
    f(j, line_no);
  }
}

std::string fmt2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Transcript run_costorm(const SeekCase& c, int budget, const Gateways& gw, const RunOptions& opts) {
  SessionOptions so;
  so.topic = c.topic;
  so.goal = c.goal;
  so.config = opts.config;
  so.config.search_budget = budget;
  Session s(so, gw);

  const int rotation = so.config.n_experts;
  const int max_turns = opts.max_turns > 0 ? opts.max_turns : 20 * budget + 20;
  int auto_turns = 0;
  for (int t = 0; t < max_turns && !s.terminated(); ++t) {
    if (auto_turns >= rotation) {
      const auto st = s.state();
      s.inject(simulate_user(c, render_history(st.history, kGradingWords), gw));
      auto_turns = 0;
    }
    try {
      auto u = s.step();
      if (u.actor.kind != Actor::Kind::User) ++auto_turns;
    } catch (const BudgetExhausted&) {
      break;
    }
  }

  Transcript tr;
  tr.pipeline = Pipeline::CoStorm;
  tr.seek_case = c;
  tr.budget = budget;
  if (opts.with_report) {
    try {
      tr.report = *s.report();
    } catch (const EmptyMapError&) {
    }
  }
  const auto st = s.state();
  tr.history = st.history;
  tr.snippets = st.mind_map.snippets();
  tr.events = s.log().events();
  tr.searches = st.budget.used();
  return tr;
}

Transcript run_rag(const SeekCase& c, int budget, const Gateways& gw, const RunOptions& opts) {
  SessionState st;
  st.topic = c.topic;
  st.goal = c.goal;
  st.config = opts.config;
  st.config.search_budget = budget;
  st.budget = BudgetCounter::of(budget);
  st.mind_map = MindMap(c.topic);
  st.phase = Phase::Steady;
  st.personas = {{"RAG Chatbot", "Answers each question from web search results."}};
  EventLog log;
  log.append(events::kSessionStart, {{"topic", c.topic}, {"goal", c.goal},
                                     {"config", to_json(st.config)}, {"pipeline", "rag"}});

  const int max_rounds = opts.max_turns > 0 ? opts.max_turns : budget + 1;
  for (int round = 0; round < max_rounds && !st.budget.exhausted(); ++round) {
    const auto question = simulate_user(c, render_history(st.history, kGradingWords), gw);

    SessionState work = st;
    EventBuffer buffer;
    TurnContext ctx{work, gw, buffer.sink()};
    Utterance q;
    q.turn_index = work.history.size();
    q.actor = Actor::user();
    q.speaker = "User";
    q.intent = Intent::OriginalQuestion;
    q.text = question;
    q.queries_issued = {question};
    work.history.push_back(q);
    ctx.emit(events::kTurn, to_json(q));

    auto turn = rag_chatbot_step(question, ctx);
    Utterance a;
    a.turn_index = work.history.size();
    a.actor = Actor::expert(0);
    a.speaker = work.personas[0].role;
    a.intent = Intent::PotentialAnswer;
    auto [text_out, cites] = agents::finalize_citations(turn.answer);
    a.text = text_out;
    a.citations = cites;

    // One concept per question keeps the report outline aligned with the chat.
    if (!turn.snippets.empty()) {
      std::string label = text::trim(question);
      auto node = work.mind_map.child_by_label(work.mind_map.root(), label);
      NodeId id = node ? *node : work.mind_map.add_child(work.mind_map.root(), label);
      std::set<SnippetId> cited(cites.begin(), cites.end());
      for (auto& s : turn.snippets) {
        s.cited = cited.count(s.id) > 0;
        work.mind_map.add_snippet(s, id);
      }
      ++work.map_version;
    }
    work.history.push_back(a);
    ctx.emit(events::kTurn, to_json(a));
    st = std::move(work);
    log.append_all(buffer.take());
  }
  log.append(events::kTerminate, {{"reason", "budget"}, {"budget_used", st.budget.used()}});
  st.phase = Phase::Terminated;

  Transcript tr;
  tr.pipeline = Pipeline::Rag;
  tr.seek_case = c;
  tr.budget = budget;
  if (opts.with_report && !st.mind_map.snippets().empty()) {
    EventBuffer warnings;
    tr.report = generate_report(st.mind_map, st, gw, warnings.sink());
    log.append(events::kReport, {{"map_version", st.map_version},
                                 {"sections", tr.report->sections.size()},
                                 {"references", tr.report->references.size()}});
    log.append_all(warnings.take());
  }
  tr.history = st.history;
  tr.snippets = st.mind_map.snippets();
  tr.events = log.events();
  tr.searches = st.budget.used();
  return tr;
}

}  // namespace

std::vector<SeekCase> parse_wildseek(std::string_view content) {
  std::vector<SeekCase> out;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_json_line(content, [&](const Json& j, std::size_t line) {
    SeekCase c{required_string(j, "domain", line), required_string(j, "topic", line),
               required_string(j, "goal", line)};
    if (!seen.emplace(text::to_lower(c.topic), text::to_lower(c.goal)).second)
      throw SchemaError(line, "duplicate case: " + c.topic);
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<SeekCase> load_wildseek(const std::string& path) {
  return parse_wildseek(read_file(path));
}

std::size_t distinct_domains(std::span<const SeekCase> cases) {
  std::set<std::string> d;
  for (const auto& c : cases) d.insert(c.domain);
  return d.size();
}

Rubric Rubric::from_json(const Json& j) {
  Rubric r;
  r.criterion = j.at("criterion").get<std::string>();
  r.description = j.value("description", "");
  const auto& scores = j.at("scores");
  if (!scores.is_array() || scores.size() != 5)
    throw PreconditionError("rubric '" + r.criterion + "' needs exactly five score descriptions");
  for (std::size_t i = 0; i < 5; ++i) r.scores[i] = scores[i].get<std::string>();
  return r;
}

std::vector<Rubric> load_rubrics(const std::string& path) {
  Json j = Json::parse(read_file(path));
  const Json& list = j.is_object() ? j.at("rubrics") : j;
  std::vector<Rubric> out;
  for (const auto& r : list) out.push_back(Rubric::from_json(r));
  return out;
}

std::string simulate_user(const SeekCase& c, const std::string& history, const Gateways& gw) {
  PromptSpec spec{std::string(prompts::kSimulatedUser),
                  {{"topic", c.topic},
                   {"goal", c.goal},
                   {"history", text::trim(history).empty() ? "N/A" : history}},
                  200};
  auto q = complete_parsed(*gw.lm, spec, [](const std::string& out) -> std::optional<std::string> {
    for (const auto& line : text::split_lines(out)) {
      auto t = text::trim(line);
      if (!t.empty()) return t;
    }
    return std::nullopt;
  });
  if (!q) throw GatewayError("simulated user produced no question");
  return *q;
}

RagTurn rag_chatbot_step(const std::string& question, TurnContext& ctx) {
  if (text::trim(question).empty()) throw PreconditionError("rag_chatbot_step: empty question");
  RagTurn out;
  for (const auto& r : ctx.search(question))
    out.snippets.push_back(ctx.snippet_from(r, question, question));
  if (out.snippets.empty()) {
    out.answer.text = std::string(prompts::kHedgeSentence);
    return out;
  }
  out.answer = agents::grounded_answer(ctx.state.topic, question, out.snippets,
                                       "informative and concise, with inline citations", ctx.gw,
                                       ctx.sink);
  return out;
}

std::string_view to_string(Pipeline p) { return p == Pipeline::CoStorm ? "costorm" : "rag"; }

Pipeline parse_pipeline(std::string_view s) {
  auto l = text::to_lower(s);
  if (l == "costorm" || l == "co-storm") return Pipeline::CoStorm;
  if (l == "rag") return Pipeline::Rag;
  throw PreconditionError("unknown pipeline: " + std::string(s));
}

Transcript run_budgeted(Pipeline pipeline, const SeekCase& c, int budget, const Gateways& gw,
                        const RunOptions& opts) {
  if (budget < 1) throw PreconditionError("budget must be at least 1");
  return pipeline == Pipeline::CoStorm ? run_costorm(c, budget, gw, opts)
                                       : run_rag(c, budget, gw, opts);
}

double info_diversity(std::span<const Embedding> embs) {
  const std::size_t n = embs.size();
  if (n < 2) throw PreconditionError("info_diversity needs at least two embeddings");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * cosine(embs[i], embs[j]);
  return 1.0 - sum / static_cast<double>(n * (n - 1));
}

std::size_t unique_cited_urls(const Transcript& t) {
  std::set<std::string> urls;
  for (const auto& u : t.history) {
    if (u.actor.kind != Actor::Kind::Expert || !is_question_answering(u.intent)) continue;
    for (auto id : u.citations) {
      auto it = t.snippets.find(id);
      if (it != t.snippets.end()) urls.insert(it->second.url);
    }
  }
  return urls.size();
}

std::optional<double> report_diversity(const Transcript& t, EmbedGateway& embed) {
  if (!t.report) return std::nullopt;
  std::vector<Embedding> embs;
  for (const auto& ref : t.report->references) {
    for (const auto& [id, s] : t.snippets) {
      if (s.url != ref.url) continue;
      embs.push_back(embed.embed(s.excerpt));
      break;
    }
  }
  if (embs.size() < 2) return std::nullopt;
  return info_diversity(embs);
}

std::optional<int> parse_score(const std::string& completion) {
  std::string_view s = completion;
  if (auto p = s.find("[RESULT]"); p != std::string_view::npos) s = s.substr(p + 8);
  else if (auto q = text::to_lower(completion).find("score:"); q != std::string::npos)
    s = s.substr(q + 6);
  std::size_t i = 0;
  while (i < s.size() && !std::isdigit(static_cast<unsigned char>(s[i]))) {
    if (!std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '*' && s[i] != ':') return {};
    ++i;
  }
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (i == j || j - i > 2) return {};
  int v = std::stoi(std::string(s.substr(i, j - i)));
  if (v < 1 || v > 5) return {};
  return v;
}

int rubric_grade(const std::string& text, const Rubric& rubric, LmGateway& evaluator) {
  PromptSpec spec{std::string(prompts::kRubricGrade),
                  {{"response", text::last_words(text, kGradingWords)},
                   {"criterion", rubric.criterion + ": " + rubric.description},
                   {"score1", rubric.scores[0]},
                   {"score2", rubric.scores[1]},
                   {"score3", rubric.scores[2]},
                   {"score4", rubric.scores[3]},
                   {"score5", rubric.scores[4]}},
                  300};
  auto v = complete_parsed(evaluator, spec, parse_score);
  if (!v) throw GatewayError("evaluator gave no score in 1..5 for " + rubric.criterion);
  return *v;
}

CaseMetrics measure(const Transcript& t, EmbedGateway& embed,
                    const std::vector<Rubric>& report_rubrics, LmGateway* evaluator) {
  CaseMetrics m;
  m.pipeline = std::string(to_string(t.pipeline));
  m.seek_case = t.seek_case;
  m.searches = t.searches;
  m.turns = t.history.size();
  m.unique_urls = unique_cited_urls(t);
  m.diversity = report_diversity(t, embed);
  if (t.report) {
    m.report_sections = t.report->sections.size();
    m.report_references = t.report->references.size();
    if (evaluator) {
      Report body = *t.report;
      body.references.clear();
      std::string md = body.to_markdown();
      md = md.substr(0, md.rfind("\n## References"));
      for (const auto& r : report_rubrics) m.grades["report:" + r.criterion] = rubric_grade(md, r, *evaluator);
    }
  }
  return m;
}

std::string metrics_csv(std::span<const CaseMetrics> rows) {
  std::set<std::string> grade_cols;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.grades) grade_cols.insert(k);
  std::string out =
      "pipeline,domain,topic,searches,turns,unique_cited_urls,info_diversity,report_sections,"
      "report_references";
  for (const auto& c : grade_cols) out += "," + csv_field(c);
  out += "\n";
  for (const auto& r : rows) {
    std::ostringstream div;
    if (r.diversity) div << std::setprecision(10) << *r.diversity;
    out += r.pipeline + "," + csv_field(r.seek_case.domain) + "," + csv_field(r.seek_case.topic) +
           "," + std::to_string(r.searches) + "," + std::to_string(r.turns) + "," +
           std::to_string(r.unique_urls) + "," + div.str() + "," +
           std::to_string(r.report_sections) + "," + std::to_string(r.report_references);
    for (const auto& c : grade_cols) {
      auto it = r.grades.find(c);
      out += "," + (it == r.grades.end() ? std::string() : std::to_string(it->second));
    }
    out += "\n";
  }
  return out;
}

Json metrics_summary(std::span<const CaseMetrics> rows) {
  std::map<std::string, std::vector<const CaseMetrics*>> by;
  for (const auto& r : rows) by[r.pipeline].push_back(&r);
  Json out = Json::object();
  for (const auto& [p, rs] : by) {
    double searches = 0, urls = 0, div = 0;
    std::size_t n_div = 0;
    std::map<std::string, std::pair<double, std::size_t>> grades;
    for (const auto* r : rs) {
      searches += r->searches;
      urls += static_cast<double>(r->unique_urls);
      if (r->diversity) div += *r->diversity, ++n_div;
      for (const auto& [k, v] : r->grades) grades[k].first += v, ++grades[k].second;
    }
    const double n = static_cast<double>(rs.size());
    Json g = Json::object();
    for (const auto& [k, v] : grades) g[k] = v.first / static_cast<double>(v.second);
    out[p] = {{"cases", rs.size()},
              {"mean_searches", searches / n},
              {"mean_unique_cited_urls", urls / n},
              {"mean_info_diversity", n_div ? Json(div / static_cast<double>(n_div)) : Json(nullptr)},
              {"mean_grades", g}};
  }
  return out;
}

std::vector<InsertionTask> parse_insertion_tasks(std::string_view content) {
  std::vector<InsertionTask> out;
  for_each_json_line(content, [&](const Json& j, std::size_t line) {
    InsertionTask t;
    if (!j.contains("outline")) throw SchemaError(line, "missing field 'outline'");
    if (!j.contains("snippet") || !j["snippet"].is_object())
      throw SchemaError(line, "missing field 'snippet'");
    if (!j.contains("gold_path") || !j["gold_path"].is_array() || j["gold_path"].empty())
      throw SchemaError(line, "missing field 'gold_path'");
    t.outline = j["outline"];
    const auto& s = j["snippet"];
    t.snippet.id = out.size() + 1;
    t.snippet.url = s.value("url", "");
    t.snippet.title = s.value("title", "");
    t.snippet.excerpt = s.value("excerpt", "");
    t.snippet.question = required_string(s, "question", line);
    t.snippet.query = s.value("query", t.snippet.question);
    if (t.snippet.excerpt.empty()) t.snippet.excerpt = t.snippet.title;
    t.gold_path = j["gold_path"].get<std::vector<std::string>>();
    if (t.gold_path.size() > static_cast<std::size_t>(kMaxConceptDepth))
      throw SchemaError(line, "gold_path deeper than three levels");
    MindMap m;
    try {
      m = MindMap::from_outline(t.outline);
    } catch (const std::exception& e) {
      throw SchemaError(line, std::string("invalid outline: ") + e.what());
    }
    if (!m.find_path(t.gold_path)) throw SchemaError(line, "gold_path not in outline");
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<InsertionTask> load_insertion_tasks(const std::string& path) {
  return parse_insertion_tasks(read_file(path));
}

std::string_view to_string(InsertMethod m) {
  switch (m) {
    case InsertMethod::EmbeddingOnly: return "embedding_only";
    case InsertMethod::LmOnly: return "lm_only";
    case InsertMethod::Hybrid: return "hybrid";
  }
  return "hybrid";
}

InsertMethod parse_insert_method(std::string_view s) {
  auto l = text::to_lower(s);
  if (l == "embedding_only" || l == "embedding") return InsertMethod::EmbeddingOnly;
  if (l == "lm_only" || l == "lm") return InsertMethod::LmOnly;
  if (l == "hybrid" || l == "insert") return InsertMethod::Hybrid;
  throw PreconditionError("unknown insertion method: " + std::string(s));
}

std::vector<std::string> place(const InsertionTask& task, InsertMethod m, const Gateways& gw,
                               int candidates_m) {
  const MindMap map = MindMap::from_outline(task.outline);
  InfoSnippet s = task.snippet;
  s.question_embedding = gw.embed->embed(s.question);
  PlacementChoice choice;
  switch (m) {
    case InsertMethod::EmbeddingOnly: {
      auto best = candidate_concepts(map, s.question_embedding, 1, *gw.embed);
      if (best.empty()) return {};
      return map.label_path(best.front().first);
    }
    case InsertMethod::LmOnly: choice = navigate_placement(map, s, *gw.lm); break;
    case InsertMethod::Hybrid:
      choice = choose_placement(map, s, gw, InsertOptions{candidates_m, 10, false});
      break;
  }
  auto path = choice.node == map.root() ? std::vector<std::string>{} : map.label_path(choice.node);
  if (choice.create_label) path.push_back(*choice.create_label);
  return path;
}

std::size_t AccuracyReport::total() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.tasks;
  return n;
}

AccuracyReport insertion_benchmark(std::span<const InsertionTask> tasks, InsertMethod m,
                                   const Gateways& gw, int candidates_m) {
  AccuracyReport rep;
  rep.method = m;
  for (const auto& t : tasks) {
    auto path = place(t, m, gw, candidates_m);
    auto& lvl = rep.levels.at(t.gold_path.size() - 1);
    ++lvl.tasks;
    const bool correct = path == t.gold_path;
    const bool ancestor = !path.empty() && path.size() < t.gold_path.size() &&
                          std::equal(path.begin(), path.end(), t.gold_path.begin());
    if (correct) ++lvl.correct;
    if (correct || ancestor) ++lvl.partial;
    rep.placements.push_back(std::move(path));
  }
  return rep;
}

std::string accuracy_table(std::span<const AccuracyReport> reports) {
  std::string out =
      "| Method | First-Level Acc. | Second-Level Acc. | Second-Level Partial Acc. | "
      "Third-Level Acc. | Third-Level Partial Acc. |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out += "| " + std::string(to_string(r.method)) + " | " + fmt2(r.levels[0].accuracy()) + " | " +
           fmt2(r.levels[1].accuracy()) + " | " + fmt2(r.levels[1].partial_accuracy()) + " | " +
           fmt2(r.levels[2].accuracy()) + " | " + fmt2(r.levels[2].partial_accuracy()) + " |\n";
  }
  return out;
}

Json to_json(const AccuracyReport& r) {
  Json levels = Json::array();
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    levels.push_back({{"level", i + 1},
                      {"tasks", l.tasks},
                      {"correct", l.correct},
                      {"partial", l.partial},
                      {"accuracy", l.accuracy()},
                      {"partial_accuracy", l.partial_accuracy()}});
  }
  return {{"method", to_string(r.method)}, {"levels", levels}, {"placements", r.placements}};
}

}  // namespace costorm::eval
