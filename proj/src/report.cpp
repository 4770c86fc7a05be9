#include "costorm/report.hpp"

#include <set>
#include <unordered_set>

#include "costorm/agents.hpp"
#include "costorm/errors.hpp"
#include "costorm/prompts.hpp"
#include "costorm/text.hpp"

namespace costorm {
namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct Written {
  std::vector<std::string> paragraphs;
  bool grounded = false;
};

Written write_once(const std::string& topic, const std::string& heading,
                   std::span<const InfoSnippet> snippets, const Gateways& gw) {
  PromptSpec spec{std::string(prompts::kSectionWrite),
                  {{"topic", topic}, {"heading", heading}, {"info", agents::info_block(snippets)}},
                  1000};
  const int n = static_cast<int>(snippets.size());
  bool any_valid = false;
  Written out;
  for (auto& p : split_paragraphs(gw.lm->complete(spec))) {
    auto kept = text::rewrite_citations(p, [&](int k) -> std::optional<int> {
      if (k < 1 || k > n) return std::nullopt;
      any_valid = true;
      return k;
    });
    kept = text::trim(kept);
    if (!kept.empty()) out.paragraphs.push_back(std::move(kept));
  }
  out.grounded = any_valid;
  return out;
}

}  // namespace

std::vector<std::string> split_paragraphs(const std::string& completion) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto t = text::trim(cur);
    if (!t.empty()) out.push_back(t);
    cur.clear();
  };
  for (const auto& line : text::split_lines(completion)) {
    auto t = text::trim(line);
    if (t.empty()) {
      flush();
      continue;
    }
    if (t.front() == '#') continue;
    if (!cur.empty()) cur += ' ';
    cur += t;
  }
  flush();
  return out;
}

Report renumber_citations(std::string title, const std::vector<DraftSection>& sections,
                          const std::unordered_map<SnippetId, SourceRef>& index) {
  Report report;
  report.title = std::move(title);
  std::unordered_map<std::string, int> by_url;
  for (const auto& d : sections) {
    ReportSection s{d.heading_path, {}};
    for (const auto& p : d.paragraphs) {
      s.paragraphs.push_back(text::rewrite_citations(p, [&](int k) -> std::optional<int> {
        auto it = d.local.find(k);
        if (it == d.local.end())
          throw PreconditionError("dangling citation [" + std::to_string(k) + "] in section " +
                                  join(d.heading_path, " > "));
        auto src = index.find(it->second);
        if (src == index.end())
          throw PreconditionError("unknown snippet " + std::to_string(it->second));
        auto [pos, fresh] =
            by_url.emplace(src->second.url, static_cast<int>(report.references.size()) + 1);
        if (fresh) report.references.push_back({pos->second, src->second.url, src->second.title});
        return pos->second;
      }));
    }
    report.sections.push_back(std::move(s));
  }
  return report;
}

Report generate_report(const MindMap& map, const SessionState& session, const Gateways& gw,
                       const EventSink& sink) {
  const Outline outline = to_outline(map);
  std::vector<DraftSection> drafts;
  std::unordered_map<SnippetId, SourceRef> index;
  for (const auto& sec : outline.sections) {
    DraftSection d{sec.heading_path, {}, {}};
    if (!sec.snippet_ids.empty()) {
      std::vector<InfoSnippet> local;
      for (auto id : sec.snippet_ids) {
        local.push_back(map.snippet(id));
        index[id] = {local.back().url, local.back().title};
      }
      const auto heading = join(sec.heading_path, " > ");
      auto w = write_once(session.topic, heading, local, gw);
      if (!w.grounded) w = write_once(session.topic, heading, local, gw);
      if (!w.grounded && sink)
        sink(events::kWarning, {{"kind", "grounding_violation"},
                                {"where", "report_section"},
                                {"heading", heading}});
      d.paragraphs = std::move(w.paragraphs);
      for (std::size_t i = 0; i < local.size(); ++i)
        d.local[static_cast<int>(i) + 1] = local[i].id;
    }
    drafts.push_back(std::move(d));
  }
  return renumber_citations(session.topic, drafts, index);
}

std::string Report::to_markdown() const {
  std::string out = "# " + title + "\n";
  for (const auto& s : sections) {
    out += "\n" + std::string(s.heading_path.size() + 1, '#') + " " +
           (s.heading_path.empty() ? title : s.heading_path.back()) + "\n";
    for (const auto& p : s.paragraphs) out += "\n" + p + "\n";
  }
  out += "\n## References\n\n";
  for (const auto& r : references)
    out += "[" + std::to_string(r.index) + "] " + r.title + ". " + r.url + "\n";
  return out;
}

Json Report::to_json() const {
  Json secs = Json::array();
  for (const auto& s : sections)
    secs.push_back({{"heading", s.heading_path.empty() ? title : s.heading_path.back()},
                    {"heading_path", s.heading_path},
                    {"level", s.heading_path.size()},
                    {"paragraphs", s.paragraphs}});
  Json refs = Json::array();
  for (const auto& r : references)
    refs.push_back({{"index", r.index}, {"url", r.url}, {"title", r.title}});
  return {{"title", title}, {"sections", secs}, {"references", refs}};
}

}  // namespace costorm
