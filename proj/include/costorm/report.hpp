#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/session_state.hpp"

namespace costorm {

struct Reference {
  int index = 0;
  std::string url;
  std::string title;
  friend bool operator==(const Reference&, const Reference&) = default;
};

struct ReportSection {
  std::vector<std::string> heading_path;
  std::vector<std::string> paragraphs;  // [k] refers to references[k-1]
  friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct Report {
  std::string title;
  std::vector<ReportSection> sections;
  std::vector<Reference> references;

  // "#"-leveled headings followed by a References list.
  std::string to_markdown() const;
  Json to_json() const;
  friend bool operator==(const Report&, const Report&) = default;
};

// A section before renumbering; markers are local to `local`.
struct DraftSection {
  std::vector<std::string> heading_path;
  std::vector<std::string> paragraphs;
  std::map<int, SnippetId> local;
};

struct SourceRef {
  std::string url;
  std::string title;
};

// Assigns global indices by first appearance, sharing one index per URL.
// Throws PreconditionError on a marker without a local mapping or a snippet
// missing from `index`.
Report renumber_citations(std::string title, const std::vector<DraftSection>& sections,
                          const std::unordered_map<SnippetId, SourceRef>& index);

// One section per outline concept, written from that concept's own snippets.
// Throws EmptyMapError when the map holds no snippets.
Report generate_report(const MindMap& map, const SessionState& session, const Gateways& gw,
                       const EventSink& sink = {});

// Splits section output into paragraphs, dropping heading lines.
std::vector<std::string> split_paragraphs(const std::string& completion);

}  // namespace costorm
