#include "costorm/scripted.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {
namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open fixture file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw PreconditionError("malformed fixture file " + path + ": " + e.what());
  }
}

std::string expand(const std::string& tmpl, const std::function<const std::string*(std::string_view)>& lookup) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 2, "{{") == 0) {
      auto j = tmpl.find("}}", i + 2);
      if (j != std::string::npos) {
        if (const auto* v = lookup(std::string_view(tmpl).substr(i + 2, j - i - 2))) {
          out += *v;
          i = j + 2;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

WebResult result_from_json(const json& j) {
  WebResult r;
  r.url = j.at("url").get<std::string>();
  r.title = j.value("title", std::string{});
  if (j.contains("snippets")) r.snippets = j.at("snippets").get<std::vector<std::string>>();
  return r;
}

}  // namespace

std::shared_ptr<ScriptedLm> ScriptedLm::from_file(const std::string& path) {
  auto doc = read_json(path);
  const json& entries = doc.is_array() ? doc : doc.at("entries");
  auto lm = std::make_shared<ScriptedLm>();
  for (const auto& e : entries) {
    auto id = e.at("template_id").get<std::string>();
    auto hash = e.value("field_hash", std::string("*"));
    const auto& c = e.at("completion");
    if (c.is_array())
      lm->add(id, hash, c.get<std::vector<std::string>>());
    else
      lm->add(id, hash, c.get<std::string>());
  }
  return lm;
}

void ScriptedLm::add(std::string template_id, std::string field_hash, std::string completion) {
  add(std::move(template_id), std::move(field_hash), std::vector<std::string>{std::move(completion)});
}

void ScriptedLm::add(std::string template_id, std::string field_hash,
                     std::vector<std::string> completions) {
  if (completions.empty()) throw PreconditionError("scripted completion list is empty");
  table_[{std::move(template_id), std::move(field_hash)}] = std::move(completions);
}

std::string ScriptedLm::raw_complete(const PromptSpec& spec, const std::string&) {
  auto hash = prompts::field_hash(spec);
  auto pick = [&](const std::vector<std::string>& options) {
    const auto& chosen = options[text::fnv1a64(hash) % options.size()];
    return expand(chosen, [&](std::string_view name) { return spec.field(name); });
  };
  if (auto it = table_.find({spec.template_id, hash}); it != table_.end()) return pick(it->second);
  if (responder_) {
    if (auto r = responder_(spec)) return *r;
  }
  if (auto it = table_.find({spec.template_id, "*"}); it != table_.end()) return pick(it->second);
  throw GatewayError("no scripted completion for " + spec.template_id + " / " + hash);
}

std::shared_ptr<ScriptedSearch> ScriptedSearch::from_file(const std::string& path,
                                                          SourceFilter filter) {
  auto doc = read_json(path);
  auto s = std::make_shared<ScriptedSearch>(std::move(filter));
  for (const auto& [query, results] : doc.items()) {
    std::vector<WebResult> rs;
    for (const auto& r : results) rs.push_back(result_from_json(r));
    if (query == "*")
      s->set_default(std::move(rs));
    else
      s->add(query, std::move(rs));
  }
  return s;
}

void ScriptedSearch::add(std::string query, std::vector<WebResult> results) {
  table_[std::move(query)] = std::move(results);
}

std::vector<WebResult> ScriptedSearch::raw_search(const std::string& query) {
  if (auto it = table_.find(query); it != table_.end()) return it->second;
  if (!default_) return {};
  const std::string slug = text::slugify(query);
  auto lookup = [&](std::string_view name) -> const std::string* {
    if (name == "query") return &query;
    if (name == "slug") return &slug;
    return nullptr;
  };
  std::vector<WebResult> out;
  for (const auto& r : *default_) {
    WebResult e;
    e.url = expand(r.url, lookup);
    e.title = expand(r.title, lookup);
    for (const auto& sn : r.snippets) e.snippets.push_back(expand(sn, lookup));
    out.push_back(std::move(e));
  }
  return out;
}

std::shared_ptr<ScriptedEmbed> ScriptedEmbed::from_file(const std::string& path) {
  auto doc = read_json(path);
  auto e = std::make_shared<ScriptedEmbed>(doc.value("dim", std::size_t{64}),
                                           doc.value("hash_fallback", true));
  if (doc.contains("vectors")) {
    for (const auto& [text, vec] : doc.at("vectors").items())
      e->add(text, vec.get<std::vector<double>>());
  }
  return e;
}

void ScriptedEmbed::add(std::string text, std::vector<double> vec) {
  table_[std::move(text)] = std::move(vec);
}

std::vector<double> hashed_bag_of_words(const std::string& s, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  std::string token;
  bool any = false;
  auto flush = [&] {
    if (token.empty()) return;
    auto h = text::fnv1a64(token);
    v[h % dim] += ((h >> 32) & 1U) ? 1.0 : -1.0;
    any = true;
    token.clear();
  };
  for (unsigned char c : s) {
    if (std::isalnum(c))
      token += static_cast<char>(std::tolower(c));
    else
      flush();
  }
  flush();
  if (!any || std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }))
    v[text::fnv1a64(s) % dim] = 1.0;
  return v;
}

std::vector<double> ScriptedEmbed::raw_embed(const std::string& s) {
  if (auto it = table_.find(s); it != table_.end()) return it->second;
  if (!hash_fallback_) throw GatewayError("no scripted embedding for text: " + s);
  return hashed_bag_of_words(s, dim_);
}

Gateways load_scripted_gateways(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw PreconditionError("fixtures directory not found: " + dir);
  Gateways g;
  auto lm_path = fs::path(dir) / "lm.json";
  auto search_path = fs::path(dir) / "search.json";
  auto embed_path = fs::path(dir) / "embed.json";
  auto block_path = fs::path(dir) / "blocklist.json";
  SourceFilter filter =
      fs::exists(block_path) ? SourceFilter::from_file(block_path.string()) : SourceFilter::defaults();
  g.lm = fs::exists(lm_path) ? ScriptedLm::from_file(lm_path.string()) : std::make_shared<ScriptedLm>();
  g.search = fs::exists(search_path) ? ScriptedSearch::from_file(search_path.string(), filter)
                                     : std::make_shared<ScriptedSearch>(filter);
  g.embed = fs::exists(embed_path) ? ScriptedEmbed::from_file(embed_path.string())
                                   : std::make_shared<ScriptedEmbed>();
  return g;
}

}  // namespace costorm
