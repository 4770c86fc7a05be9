#include "costorm/gateways.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "costorm/errors.hpp"
#include "costorm/text.hpp"

namespace costorm {

Embedding normalized(std::vector<double> raw) {
  double sq = 0.0;
  for (double v : raw) sq += v * v;
  double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw GatewayError("embedding has zero norm");
  for (double& v : raw) v /= norm;
  return Embedding{std::move(raw)};
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw PreconditionError("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot, -1.0, 1.0);
}

std::string url_host(std::string_view url) {
  auto scheme = url.find("://");
  std::size_t start = scheme == std::string_view::npos ? 0 : scheme + 3;
  std::size_t end = url.find_first_of("/?#", start);
  auto host = text::to_lower(url.substr(start, end == std::string_view::npos ? url.size() - start
                                                                              : end - start));
  if (auto at = host.rfind('@'); at != std::string::npos) host = host.substr(at + 1);
  if (auto colon = host.find(':'); colon != std::string::npos) host.resize(colon);
  return host;
}

std::string canonical_url(std::string_view url) {
  std::string u = text::trim(url);
  if (auto hash = u.find('#'); hash != std::string::npos) u.resize(hash);
  auto scheme = u.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  std::size_t host_end = u.find_first_of("/?", host_start);
  if (host_end == std::string::npos) host_end = u.size();
  for (std::size_t i = 0; i < host_end; ++i)
    u[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(u[i])));
  while (u.size() > host_start + 1 && u.back() == '/') u.pop_back();
  return u;
}

SourceFilter::SourceFilter(std::vector<std::string> patterns) {
  for (auto& p : patterns) {
    auto t = text::to_lower(text::trim(p));
    if (t.rfind("*.", 0) == 0) t = t.substr(2);
    if (!t.empty()) patterns_.push_back(std::move(t));
  }
}

SourceFilter SourceFilter::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open blocklist file: " + path);
  auto doc = nlohmann::json::parse(in);
  const auto& arr = doc.is_array() ? doc : doc.at("blocked_domains");
  return SourceFilter(arr.get<std::vector<std::string>>());
}

SourceFilter SourceFilter::defaults() {
  // Deprecated or generally unreliable sources on the Wikipedia perennial
  // sources list; data/source_blocklist.json carries the editable copy.
  return SourceFilter({
      "dailymail.co.uk", "mailonline.com", "thesun.co.uk", "breitbart.com", "infowars.com",
      "naturalnews.com", "rt.com", "sputniknews.com", "globalresearch.ca", "thegatewaypundit.com",
      "zerohedge.com", "occupydemocrats.com", "newsmax.com", "oann.com", "lifesitenews.com",
      "veteranstoday.com", "mintpressnews.com", "thecanary.co", "frontpagemag.com",
      "famousbirthdays.com", "answers.com", "quora.com", "reddit.com",
      "medium.com", "wikia.com", "fandom.com", "ancestry.com",
      "findagrave.com", "imdb.com", "discogs.com", "change.org", "blogspot.com",
      "wordpress.com", "twitter.com", "x.com", "facebook.com", "instagram.com", "tiktok.com",
  });
}

bool SourceFilter::blocked(std::string_view url) const {
  auto host = url_host(url);
  for (const auto& p : patterns_) {
    if (host == p) return true;
    if (host.size() > p.size() && host.compare(host.size() - p.size(), p.size(), p) == 0 &&
        host[host.size() - p.size() - 1] == '.')
      return true;
  }
  return false;
}

std::string LmGateway::complete(const PromptSpec& spec) {
  auto prompt = prompts::render(spec);
  for (int attempt = 0; attempt < 2; ++attempt) {
    calls_.fetch_add(1);
    auto out = raw_complete(spec, prompt);
    if (!text::trim(out).empty()) return out;
  }
  throw GatewayError("empty completion for prompt " + spec.template_id);
}

std::vector<WebResult> SearchGateway::search(const std::string& query, BudgetCounter& budget) {
  if (budget.exhausted()) throw BudgetExhausted();
  auto raw = raw_search(query);
  --budget.remaining;
  std::vector<WebResult> out;
  std::set<std::string> seen;
  for (auto& r : raw) {
    r.url = canonical_url(r.url);
    if (r.url.empty()) continue;
    r.trusted = !filter_.blocked(r.url);
    if (!r.trusted) continue;
    if (!seen.insert(r.url).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

Embedding EmbedGateway::embed(const std::string& text) {
  if (text.empty()) throw PreconditionError("embed: empty text");
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(text); it != cache_.end()) return it->second;
  }
  auto e = normalized(raw_embed(text));
  std::lock_guard lock(mu_);
  if (dim_ == 0) dim_ = e.dim();
  if (e.dim() != dim_)
    throw GatewayError("embedding dimension changed from " + std::to_string(dim_) + " to " +
                       std::to_string(e.dim()));
  return cache_.emplace(text, std::move(e)).first->second;
}

std::size_t EmbedGateway::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

}  // namespace costorm
