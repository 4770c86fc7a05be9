#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/types.hpp"

namespace costorm {

inline constexpr std::size_t kMaxConceptDepth = 3;
inline constexpr std::string_view kUncategorizedLabel = "Uncategorized";

struct InfoSnippet {
  SnippetId id = 0;
  std::string url;
  std::string title;
  std::string excerpt;
  std::string question;  // discourse question that led to the retrieval
  std::string query;     // search query actually issued
  Embedding question_embedding;
  bool cited = false;
  std::size_t retrieved_at_turn = 0;
};

struct ConceptNode {
  NodeId id = 0;
  std::string label;
  std::vector<NodeId> children;
  std::vector<SnippetId> snippet_ids;
};

// Tree of concepts under a virtual root labeled by the topic. The root never
// holds snippets; every registered snippet sits on exactly one node.
class MindMap {
 public:
  explicit MindMap(std::string topic = {});

  // Builds a snippet-free concept tree from {"label": ..., "children": [...]}
  // objects (the root object's label becomes the topic).
  static MindMap from_outline(const Json& outline);

  NodeId root() const noexcept { return root_; }
  const std::string& topic() const { return nodes_.at(root_).label; }

  bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
  const ConceptNode& node(NodeId id) const;
  std::optional<NodeId> parent(NodeId id) const;
  std::size_t depth(NodeId id) const;  // root is 0
  std::vector<std::string> label_path(NodeId id) const;  // root excluded
  std::string path_text(NodeId id, std::string_view sep = " > ") const;
  std::optional<NodeId> child_by_label(NodeId parent, std::string_view label) const;
  std::optional<NodeId> find_path(const std::vector<std::string>& path) const;
  bool is_ancestor(NodeId ancestor, NodeId node) const;  // proper ancestor

  // Non-root nodes in depth-first preorder.
  std::vector<NodeId> preorder() const;
  std::vector<NodeId> subtree(NodeId top) const;  // top included
  std::size_t concept_count() const { return nodes_.size() - 1; }

  NodeId add_child(NodeId parent, std::string label);

  const InfoSnippet& snippet(SnippetId id) const;
  InfoSnippet& snippet(SnippetId id);
  bool has_snippet(SnippetId id) const { return snippets_.count(id) != 0; }
  const std::map<SnippetId, InfoSnippet>& snippets() const noexcept { return snippets_; }
  std::optional<NodeId> location(SnippetId id) const;
  std::size_t snippet_count() const noexcept { return snippets_.size(); }
  bool empty() const noexcept { return snippets_.empty(); }
  std::size_t subtree_snippet_count(NodeId id) const;

  // Registers and attaches in one step.
  void add_snippet(InfoSnippet s, NodeId node);
  void move_snippet(SnippetId id, NodeId to);

  // Throws std::logic_error describing the first violated tree invariant.
  void check_invariants() const;

  // Clean helpers; both keep every snippet.
  void remove_empty_subtree(NodeId id);
  void collapse_into_child(NodeId id);

  Json to_json() const;

 private:
  void detach_snippet(SnippetId id);
  void merge_into(NodeId from, NodeId into);

  NodeId root_ = 0;
  NodeId next_id_ = 1;
  std::map<NodeId, ConceptNode> nodes_;
  std::map<NodeId, NodeId> parent_;
  std::map<SnippetId, InfoSnippet> snippets_;
  std::map<SnippetId, NodeId> location_;
};

struct InsertOptions {
  int candidates_m = 5;
  int reorg_threshold_k = 10;
  bool allow_reorganize = true;
};

// Where a placement decision landed.
struct PlacementChoice {
  enum class Stage { Candidate, Navigation, Fallback };
  NodeId node = 0;                          // existing node, or parent of the new one
  std::optional<std::string> create_label;  // set when a new child must be created
  Stage stage = Stage::Navigation;
  bool degraded = false;
};

struct Placement {
  NodeId node = 0;
  PlacementChoice::Stage stage = PlacementChoice::Stage::Navigation;
  bool degraded = false;
  bool reorganized = false;
};

std::string_view to_string(PlacementChoice::Stage stage);

// The m concepts under `within` (exclusive) whose path embedding is closest to
// q_emb, by descending cosine; ties keep preorder.
std::vector<std::pair<NodeId, double>> candidate_concepts(const MindMap& map,
                                                          const Embedding& q_emb, int m,
                                                          EmbedGateway& embed,
                                                          std::optional<NodeId> within = {});

// Stage 1: candidate list + LM choice. Stage 2 (fallback): layer-by-layer
// navigation from `within`. Without `within`, an unusable answer yields the
// Uncategorized fallback; with it, the snippet stays on `within`.
PlacementChoice choose_placement(const MindMap& map, const InfoSnippet& snippet,
                                 const Gateways& gw, const InsertOptions& opts,
                                 std::optional<NodeId> within = {});

// Stage 2 on its own; also the LM-only insertion baseline.
PlacementChoice navigate_placement(const MindMap& map, const InfoSnippet& snippet, LmGateway& lm,
                                   std::optional<NodeId> within = {});

NodeId realize(MindMap& map, const PlacementChoice& choice);

Placement insert(MindMap& map, InfoSnippet snippet, const Gateways& gw,
                 const InsertOptions& opts, const EventSink& sink = {});

struct ReorganizeResult {
  bool applied = false;
  std::vector<std::string> subtopics;
  std::size_t residual = 0;
};

ReorganizeResult reorganize(MindMap& map, NodeId node, const Gateways& gw,
                            const InsertOptions& opts, const EventSink& sink = {});

void clean(MindMap& map);

std::string render_structure(const MindMap& map);
std::string render_subtree(const MindMap& map, NodeId top, std::size_t max_levels);

struct Outline {
  struct Section {
    NodeId node = 0;
    std::vector<std::string> heading_path;
    std::vector<SnippetId> snippet_ids;
  };
  std::vector<Section> sections;
};

// One section per concept in preorder; throws EmptyMapError when no snippet exists.
Outline to_outline(const MindMap& map);

}  // namespace costorm
