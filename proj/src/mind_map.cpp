#include "costorm/mind_map.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {

MindMap::MindMap(std::string topic) { nodes_[root_] = ConceptNode{root_, std::move(topic), {}, {}}; }

MindMap MindMap::from_outline(const Json& outline) {
  MindMap map(outline.value("label", std::string{}));
  auto build = [&](auto& self, NodeId parent, const Json& children) -> void {
    for (const auto& c : children) {
      NodeId id = map.add_child(parent, c.at("label").get<std::string>());
      if (c.contains("children")) self(self, id, c.at("children"));
    }
  };
  if (outline.contains("children")) build(build, map.root(), outline.at("children"));
  return map;
}

const ConceptNode& MindMap::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw NotFoundError("unknown concept node " + std::to_string(id));
  return it->second;
}

std::optional<NodeId> MindMap::parent(NodeId id) const {
  auto it = parent_.find(id);
  if (it == parent_.end()) return std::nullopt;
  return it->second;
}

std::size_t MindMap::depth(NodeId id) const {
  std::size_t d = 0;
  for (auto p = parent(id); p; p = parent(*p)) ++d;
  return d;
}

std::vector<std::string> MindMap::label_path(NodeId id) const {
  std::vector<std::string> path;
  for (NodeId cur = id; cur != root_; cur = parent_.at(cur)) path.push_back(node(cur).label);
  std::reverse(path.begin(), path.end());
  return path;
}

std::string MindMap::path_text(NodeId id, std::string_view sep) const {
  std::string out;
  for (const auto& l : label_path(id)) {
    if (!out.empty()) out += sep;
    out += l;
  }
  return out;
}

std::optional<NodeId> MindMap::child_by_label(NodeId parent, std::string_view label) const {
  auto want = text::to_lower(text::trim(label));
  for (NodeId c : node(parent).children)
    if (text::to_lower(nodes_.at(c).label) == want) return c;
  return std::nullopt;
}

std::optional<NodeId> MindMap::find_path(const std::vector<std::string>& path) const {
  NodeId cur = root_;
  for (const auto& label : path) {
    auto next = child_by_label(cur, label);
    if (!next) return std::nullopt;
    cur = *next;
  }
  return cur;
}

bool MindMap::is_ancestor(NodeId ancestor, NodeId id) const {
  for (auto p = parent(id); p; p = parent(*p))
    if (*p == ancestor) return true;
  return false;
}

std::vector<NodeId> MindMap::subtree(NodeId top) const {
  std::vector<NodeId> out;
  auto walk = [&](auto& self, NodeId id) -> void {
    out.push_back(id);
    for (NodeId c : nodes_.at(id).children) self(self, c);
  };
  walk(walk, top);
  return out;
}

std::vector<NodeId> MindMap::preorder() const {
  auto all = subtree(root_);
  all.erase(all.begin());
  return all;
}

NodeId MindMap::add_child(NodeId parent, std::string label) {
  label = text::trim(label);
  if (label.empty()) throw PreconditionError("concept label must be nonempty");
  if (child_by_label(parent, label))
    throw PreconditionError("duplicate sibling label: " + label);
  if (depth(parent) + 1 > kMaxConceptDepth)
    throw PreconditionError("concept depth would exceed " + std::to_string(kMaxConceptDepth));
  NodeId id = next_id_++;
  nodes_[id] = ConceptNode{id, std::move(label), {}, {}};
  nodes_.at(parent).children.push_back(id);
  parent_[id] = parent;
  return id;
}

const InfoSnippet& MindMap::snippet(SnippetId id) const {
  auto it = snippets_.find(id);
  if (it == snippets_.end()) throw NotFoundError("unknown snippet " + std::to_string(id));
  return it->second;
}

InfoSnippet& MindMap::snippet(SnippetId id) {
  auto it = snippets_.find(id);
  if (it == snippets_.end()) throw NotFoundError("unknown snippet " + std::to_string(id));
  return it->second;
}

std::optional<NodeId> MindMap::location(SnippetId id) const {
  auto it = location_.find(id);
  if (it == location_.end()) return std::nullopt;
  return it->second;
}

std::size_t MindMap::subtree_snippet_count(NodeId id) const {
  std::size_t n = 0;
  for (NodeId s : subtree(id)) n += nodes_.at(s).snippet_ids.size();
  return n;
}

void MindMap::add_snippet(InfoSnippet s, NodeId node_id) {
  if (node_id == root_) throw PreconditionError("the root concept cannot hold information");
  if (!has_node(node_id)) throw NotFoundError("unknown concept node " + std::to_string(node_id));
  if (snippets_.count(s.id)) throw PreconditionError("duplicate snippet id " + std::to_string(s.id));
  SnippetId id = s.id;
  snippets_.emplace(id, std::move(s));
  nodes_.at(node_id).snippet_ids.push_back(id);
  location_[id] = node_id;
}

void MindMap::detach_snippet(SnippetId id) {
  auto& ids = nodes_.at(location_.at(id)).snippet_ids;
  ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
  location_.erase(id);
}

void MindMap::move_snippet(SnippetId id, NodeId to) {
  if (to == root_) throw PreconditionError("the root concept cannot hold information");
  if (!has_node(to)) throw NotFoundError("unknown concept node " + std::to_string(to));
  detach_snippet(id);
  nodes_.at(to).snippet_ids.push_back(id);
  location_[id] = to;
}

void MindMap::remove_empty_subtree(NodeId id) {
  if (id == root_) throw PreconditionError("cannot remove the root concept");
  if (subtree_snippet_count(id) != 0) throw PreconditionError("subtree still holds information");
  NodeId p = parent_.at(id);
  auto& siblings = nodes_.at(p).children;
  siblings.erase(std::remove(siblings.begin(), siblings.end(), id), siblings.end());
  for (NodeId n : subtree(id)) {
    nodes_.erase(n);
    parent_.erase(n);
  }
}

void MindMap::merge_into(NodeId from, NodeId into) {
  for (SnippetId s : std::vector<SnippetId>(nodes_.at(from).snippet_ids)) {
    nodes_.at(into).snippet_ids.push_back(s);
    location_[s] = into;
  }
  for (NodeId c : std::vector<NodeId>(nodes_.at(from).children)) {
    if (auto same = child_by_label(into, nodes_.at(c).label)) {
      merge_into(c, *same);
    } else {
      nodes_.at(into).children.push_back(c);
      parent_[c] = into;
    }
  }
  auto& siblings = nodes_.at(parent_.at(from)).children;
  siblings.erase(std::remove(siblings.begin(), siblings.end(), from), siblings.end());
  nodes_.erase(from);
  parent_.erase(from);
}

void MindMap::collapse_into_child(NodeId id) {
  const auto& n = node(id);
  if (id == root_ || n.children.size() != 1 || !n.snippet_ids.empty())
    throw PreconditionError("only a snippetless single-child concept can be collapsed");
  NodeId child = n.children.front();
  NodeId p = parent_.at(id);
  auto& siblings = nodes_.at(p).children;
  std::optional<NodeId> clash;
  for (NodeId s : siblings)
    if (s != id && text::to_lower(nodes_.at(s).label) == text::to_lower(nodes_.at(child).label))
      clash = s;
  std::replace(siblings.begin(), siblings.end(), id, child);
  parent_[child] = p;
  nodes_.erase(id);
  parent_.erase(id);
  if (clash) merge_into(child, *clash);
}

void MindMap::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error("mind map invariant: " + what); };
  if (parent_.count(root_)) fail("root has a parent");
  if (!nodes_.at(root_).snippet_ids.empty()) fail("root holds snippets");
  std::size_t edges = 0;
  std::map<NodeId, int> seen_as_child;
  for (const auto& [id, n] : nodes_) {
    if (n.id != id) fail("node id mismatch");
    std::set<std::string> labels;
    for (NodeId c : n.children) {
      if (!nodes_.count(c)) fail("dangling child " + std::to_string(c));
      if (++seen_as_child[c] > 1) fail("node with two parents " + std::to_string(c));
      if (parent_.count(c) == 0 || parent_.at(c) != id) fail("parent index out of sync");
      if (!labels.insert(text::to_lower(nodes_.at(c).label)).second)
        fail("duplicate sibling label " + nodes_.at(c).label);
      ++edges;
    }
  }
  if (nodes_.size() != edges + 1) fail("node count != edge count + 1");
  auto reach = subtree(root_);
  if (reach.size() != nodes_.size()) fail("unreachable nodes");
  for (NodeId id : reach)
    if (depth(id) > kMaxConceptDepth) fail("depth bound exceeded at node " + std::to_string(id));
  std::size_t attached = 0;
  for (const auto& [id, n] : nodes_) {
    for (SnippetId s : n.snippet_ids) {
      ++attached;
      if (!snippets_.count(s)) fail("unknown snippet id " + std::to_string(s));
      if (location_.count(s) == 0 || location_.at(s) != id) fail("snippet location out of sync");
    }
  }
  if (attached != snippets_.size() || location_.size() != snippets_.size())
    fail("snippet attached zero or several times");
}

Json MindMap::to_json() const {
  Json nodes = Json::array();
  for (NodeId id : subtree(root_)) {
    const auto& n = nodes_.at(id);
    nodes.push_back({{"id", n.id}, {"label", n.label}, {"children", n.children},
                     {"snippet_ids", n.snippet_ids}});
  }
  Json snippets = Json::array();
  for (const auto& [id, s] : snippets_) {
    snippets.push_back({{"id", s.id}, {"url", s.url}, {"title", s.title}, {"excerpt", s.excerpt},
                        {"question", s.question}, {"query", s.query}, {"cited", s.cited},
                        {"retrieved_at_turn", s.retrieved_at_turn}});
  }
  return {{"root", root_}, {"topic", topic()}, {"nodes", nodes}, {"snippets", snippets}};
}

std::string_view to_string(PlacementChoice::Stage stage) {
  switch (stage) {
    case PlacementChoice::Stage::Candidate: return "candidate";
    case PlacementChoice::Stage::Navigation: return "navigation";
    case PlacementChoice::Stage::Fallback: return "fallback";
  }
  return "?";
}

std::vector<std::pair<NodeId, double>> candidate_concepts(const MindMap& map,
                                                          const Embedding& q_emb, int m,
                                                          EmbedGateway& embed,
                                                          std::optional<NodeId> within) {
  if (m < 1) throw PreconditionError("candidate_concepts: m must be >= 1");
  NodeId top = within.value_or(map.root());
  auto nodes = map.subtree(top);
  std::vector<std::pair<NodeId, double>> scored;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    scored.emplace_back(nodes[i], cosine(q_emb, embed.embed(map.path_text(nodes[i]))));
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (scored.size() > static_cast<std::size_t>(m)) scored.resize(static_cast<std::size_t>(m));
  return scored;
}

namespace {

std::string placement_intent(const InfoSnippet& s) {
  return "Question: " + s.question + "\nQuery: " + (s.query.empty() ? s.question : s.query);
}

std::string clean_label(std::string_view raw) {
  std::string s = text::trim(raw);
  while (!s.empty() && (s.front() == '[' || s.front() == '\'' || s.front() == '"' || s.front() == '*'))
    s.erase(s.begin());
  while (!s.empty() && (s.back() == ']' || s.back() == '\'' || s.back() == '"' || s.back() == '.' ||
                        s.back() == '*'))
    s.pop_back();
  return text::trim(s);
}

// 0 = "No reasonable choice", k >= 1 = candidate index.
std::optional<int> parse_candidate_decision(const std::string& out, std::size_t n) {
  auto lower = text::to_lower(out);
  auto pos = lower.find("best placement:");
  if (pos != std::string::npos) {
    std::size_t i = pos + 15;
    while (i < lower.size() && (lower[i] == ' ' || lower[i] == '[')) ++i;
    std::size_t j = i;
    while (j < lower.size() && std::isdigit(static_cast<unsigned char>(lower[j]))) ++j;
    if (j > i) {
      int k = std::stoi(lower.substr(i, j - i));
      if (k >= 1 && static_cast<std::size_t>(k) <= n) return k;
    }
    return std::nullopt;
  }
  if (lower.find("no reasonable choice") != std::string::npos) return 0;
  return std::nullopt;
}

struct NavChoice {
  enum class Kind { Insert, Step, Create } kind;
  std::string label;
};

std::optional<NavChoice> parse_nav(const std::string& out) {
  for (const auto& raw : text::split_lines(out)) {
    auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = text::trim(line.substr(2));
    line = clean_label(line);
    if (text::starts_with_ci(line, "insert")) return NavChoice{NavChoice::Kind::Insert, {}};
    for (auto [prefix, kind] : {std::pair{"step:", NavChoice::Kind::Step},
                                std::pair{"create:", NavChoice::Kind::Create}}) {
      if (text::starts_with_ci(line, prefix)) {
        auto label = clean_label(std::string_view(line).substr(std::string_view(prefix).size()));
        if (label.empty()) return std::nullopt;
        return NavChoice{kind, label};
      }
    }
    return std::nullopt;
  }
  return std::nullopt;
}

PlacementChoice fallback_choice(const MindMap& map, std::optional<NodeId> within) {
  if (within) return {*within, std::nullopt, PlacementChoice::Stage::Fallback, true};
  if (auto u = map.child_by_label(map.root(), kUncategorizedLabel))
    return {*u, std::nullopt, PlacementChoice::Stage::Fallback, true};
  return {map.root(), std::string(kUncategorizedLabel), PlacementChoice::Stage::Fallback, true};
}

}  // namespace

PlacementChoice navigate_placement(const MindMap& map, const InfoSnippet& snippet, LmGateway& lm,
                                   std::optional<NodeId> within) {
  NodeId cur = within.value_or(map.root());
  const auto intent = placement_intent(snippet);
  for (std::size_t hop = 0; hop <= kMaxConceptDepth + 1; ++hop) {
    PromptSpec spec{std::string(prompts::kInsertNavigate),
                    {{"intent", intent}, {"structure", render_subtree(map, cur, 2)}},
                    50};
    // Semantically invalid choices count as malformed so they get the retry.
    auto choice = complete_parsed(lm, spec, [&](const std::string& out) -> std::optional<NavChoice> {
      auto c = parse_nav(out);
      if (!c) return std::nullopt;
      if (c->kind == NavChoice::Kind::Insert && cur == map.root()) return std::nullopt;
      if (c->kind == NavChoice::Kind::Step && !map.child_by_label(cur, c->label)) return std::nullopt;
      return c;
    });
    if (!choice) return fallback_choice(map, within);
    switch (choice->kind) {
      case NavChoice::Kind::Insert:
        return {cur, std::nullopt, PlacementChoice::Stage::Navigation, false};
      case NavChoice::Kind::Step:
        cur = *map.child_by_label(cur, choice->label);
        continue;
      case NavChoice::Kind::Create:
        if (map.depth(cur) >= kMaxConceptDepth)
          return {cur, std::nullopt, PlacementChoice::Stage::Navigation, false};
        if (auto existing = map.child_by_label(cur, choice->label))
          return {*existing, std::nullopt, PlacementChoice::Stage::Navigation, false};
        return {cur, choice->label, PlacementChoice::Stage::Navigation, false};
    }
  }
  return fallback_choice(map, within);
}

PlacementChoice choose_placement(const MindMap& map, const InfoSnippet& snippet,
                                 const Gateways& gw, const InsertOptions& opts,
                                 std::optional<NodeId> within) {
  NodeId top = within.value_or(map.root());
  if (!map.node(top).children.empty()) {
    Embedding q_emb = snippet.question_embedding.dim() ? snippet.question_embedding
                                                       : gw.embed->embed(snippet.question);
    auto cands = candidate_concepts(map, q_emb, opts.candidates_m, *gw.embed, within);
    if (!cands.empty()) {
      std::string choices;
      for (std::size_t i = 0; i < cands.size(); ++i)
        choices += std::to_string(i + 1) + ". " + map.path_text(cands[i].first, " -> ") + "\n";
      PromptSpec spec{std::string(prompts::kInsertCandidateChoice),
                      {{"intent", placement_intent(snippet)}, {"choices", choices}},
                      50};
      auto decision = complete_parsed(*gw.lm, spec, [&](const std::string& out) {
        return parse_candidate_decision(out, cands.size());
      });
      if (decision && *decision > 0)
        return {cands[static_cast<std::size_t>(*decision - 1)].first, std::nullopt,
                PlacementChoice::Stage::Candidate, false};
    }
  }
  return navigate_placement(map, snippet, *gw.lm, within);
}

NodeId realize(MindMap& map, const PlacementChoice& choice) {
  if (!choice.create_label) return choice.node;
  if (auto existing = map.child_by_label(choice.node, *choice.create_label)) return *existing;
  return map.add_child(choice.node, *choice.create_label);
}

Placement insert(MindMap& map, InfoSnippet snippet, const Gateways& gw, const InsertOptions& opts,
                 const EventSink& sink) {
  if (text::trim(snippet.question).empty())
    throw PreconditionError("insert: snippet question must be nonempty");
  if (map.has_snippet(snippet.id))
    throw PreconditionError("insert: duplicate snippet id " + std::to_string(snippet.id));
  if (!snippet.question_embedding.dim()) snippet.question_embedding = gw.embed->embed(snippet.question);
  auto choice = choose_placement(map, snippet, gw, opts);
  NodeId target = realize(map, choice);
  SnippetId id = snippet.id;
  map.add_snippet(std::move(snippet), target);
  Placement placement{target, choice.stage, choice.degraded, false};
  if (sink) {
    sink(events::kInsert, {{"snippet_id", id},
                           {"node", target},
                           {"path", map.label_path(target)},
                           {"stage", std::string(to_string(choice.stage))},
                           {"degraded", choice.degraded}});
  }
  if (opts.allow_reorganize &&
      map.node(target).snippet_ids.size() > static_cast<std::size_t>(opts.reorg_threshold_k)) {
    placement.reorganized = reorganize(map, target, gw, opts, sink).applied;
  }
  return placement;
}

ReorganizeResult reorganize(MindMap& map, NodeId node, const Gateways& gw,
                            const InsertOptions& opts, const EventSink& sink) {
  const auto& target = map.node(node);
  if (node == map.root() ||
      target.snippet_ids.size() <= static_cast<std::size_t>(opts.reorg_threshold_k))
    throw PreconditionError("reorganize: concept does not exceed the snippet threshold");
  auto warn = [&](std::string kind) {
    if (sink) sink(events::kWarning, {{"kind", std::move(kind)}, {"node", node},
                                      {"path", map.label_path(node)}});
  };
  if (map.depth(node) >= kMaxConceptDepth) {
    warn("reorganize_depth_limit");
    return {};
  }

  std::string questions;
  std::set<std::string> seen;
  for (SnippetId s : target.snippet_ids) {
    const auto& q = map.snippet(s).question;
    if (seen.insert(q).second) questions += "- " + q + "\n";
  }
  PromptSpec spec{std::string(prompts::kSubtopicSplit),
                  {{"topic", map.topic()}, {"concept", map.path_text(node)}, {"questions", questions}},
                  200};
  auto labels = complete_parsed(*gw.lm, spec, [](const std::string& out) {
    std::vector<std::string> out_labels;
    std::set<std::string> uniq;
    for (const auto& raw : text::split_lines(out)) {
      auto line = text::trim(raw);
      if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) {
        line = line.substr(2);
      } else {
        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || i >= line.size() || line[i] != '.') continue;
        line = line.substr(i + 1);
      }
      auto label = clean_label(line);
      if (!label.empty() && uniq.insert(text::to_lower(label)).second) out_labels.push_back(label);
    }
    return out_labels.empty() ? std::nullopt : std::optional(out_labels);
  });
  if (!labels) {
    warn("subtopic_generation_failed");
    return {};
  }

  ReorganizeResult result{true, *labels, 0};
  for (const auto& label : *labels)
    if (!map.child_by_label(node, label)) map.add_child(node, label);

  InsertOptions inner = opts;
  inner.allow_reorganize = false;
  for (SnippetId s : std::vector<SnippetId>(map.node(node).snippet_ids)) {
    auto choice = choose_placement(map, map.snippet(s), gw, inner, node);
    NodeId to = realize(map, choice);
    if (to != node) map.move_snippet(s, to);
  }
  result.residual = map.node(node).snippet_ids.size();
  auto path = map.label_path(node);
  clean(map);
  if (sink)
    sink(events::kReorganize, {{"node", node}, {"path", path}, {"subtopics", result.subtopics},
                               {"residual", result.residual}});
  return result;
}

void clean(MindMap& map) {
  bool changed = true;
  while (changed) {
    changed = false;
    auto order = map.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      NodeId id = *it;
      if (!map.has_node(id)) continue;
      if (map.subtree_snippet_count(id) == 0) {
        map.remove_empty_subtree(id);
        changed = true;
      } else if (map.node(id).snippet_ids.empty() && map.node(id).children.size() == 1) {
        map.collapse_into_child(id);
        changed = true;
      }
    }
  }
}

std::string render_subtree(const MindMap& map, NodeId top, std::size_t max_levels) {
  std::string out;
  auto walk = [&](auto& self, NodeId id, std::size_t level) -> void {
    if (level > max_levels) return;
    if (!out.empty()) out += '\n';
    out += std::string(level, '#') + " " + map.node(id).label;
    for (NodeId c : map.node(id).children) self(self, c, level + 1);
  };
  walk(walk, top, 1);
  return out;
}

std::string render_structure(const MindMap& map) {
  std::string out;
  for (NodeId id : map.preorder()) {
    if (!out.empty()) out += '\n';
    out += std::string(map.depth(id), '#') + " " + map.node(id).label;
  }
  return out;
}

Outline to_outline(const MindMap& map) {
  if (map.empty()) throw EmptyMapError();
  Outline outline;
  for (NodeId id : map.preorder())
    outline.sections.push_back({id, map.label_path(id), map.node(id).snippet_ids});
  return outline;
}

}  // namespace costorm
