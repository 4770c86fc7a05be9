#pragma once

// Deterministic offline gateways driven by fixture tables.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "costorm/gateways.hpp"

namespace costorm {

// Completion lookup order: exact (template_id, field_hash), then the responder
// callback, then the template's "*" wildcard entry. When an entry lists several
// completions, the field hash picks one, so the gateway stays a pure function
// of the prompt. "{{name}}" in a completion expands to the bound field value.
class ScriptedLm : public LmGateway {
 public:
  using Responder = std::function<std::optional<std::string>(const PromptSpec&)>;

  ScriptedLm() = default;
  explicit ScriptedLm(Responder responder) : responder_(std::move(responder)) {}

  static std::shared_ptr<ScriptedLm> from_file(const std::string& path);

  void add(std::string template_id, std::string field_hash, std::string completion);
  void add(std::string template_id, std::string field_hash, std::vector<std::string> completions);
  void set_responder(Responder r) { responder_ = std::move(r); }

 protected:
  std::string raw_complete(const PromptSpec& spec, const std::string& prompt) override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> table_;
  Responder responder_;
};

// Query lookup with an optional "*" default whose url/title/snippets may use
// {{query}} and {{slug}}. Unknown queries without a default return no results.
class ScriptedSearch : public SearchGateway {
 public:
  explicit ScriptedSearch(SourceFilter filter = SourceFilter::defaults())
      : SearchGateway(std::move(filter)) {}

  static std::shared_ptr<ScriptedSearch> from_file(const std::string& path,
                                                   SourceFilter filter = SourceFilter::defaults());

  void add(std::string query, std::vector<WebResult> results);
  void set_default(std::vector<WebResult> results) { default_ = std::move(results); }

 protected:
  std::vector<WebResult> raw_search(const std::string& query) override;

 private:
  std::map<std::string, std::vector<WebResult>> table_;
  std::optional<std::vector<WebResult>> default_;
};

// Exact-text vectors; other texts fall back to a signed feature-hashed bag of
// words of dimension `dim` (or fail when the fallback is disabled).
class ScriptedEmbed : public EmbedGateway {
 public:
  explicit ScriptedEmbed(std::size_t dim = 64, bool hash_fallback = true)
      : dim_(dim), hash_fallback_(hash_fallback) {}

  static std::shared_ptr<ScriptedEmbed> from_file(const std::string& path);

  void add(std::string text, std::vector<double> vec);

 protected:
  std::vector<double> raw_embed(const std::string& text) override;

 private:
  std::size_t dim_;
  bool hash_fallback_;
  std::map<std::string, std::vector<double>> table_;
};

std::vector<double> hashed_bag_of_words(const std::string& text, std::size_t dim);

// Loads lm.json, search.json and embed.json from a fixtures directory; a
// missing file yields an empty table for that gateway.
Gateways load_scripted_gateways(const std::string& dir);

}  // namespace costorm
