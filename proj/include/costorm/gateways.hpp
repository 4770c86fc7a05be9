#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "costorm/prompts.hpp"

namespace costorm {

// Unit-normalized text embedding.
struct Embedding {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

// Returns a unit vector in the direction of `raw`; throws GatewayError for a zero vector.
Embedding normalized(std::vector<double> raw);

// Inner product of two unit vectors, clamped to [-1, 1]. Dimensions must match.
double cosine(const Embedding& a, const Embedding& b);

struct WebResult {
  std::string url;
  std::string title;
  std::vector<std::string> snippets;
  bool trusted = true;
};

// Search queries left in a session. Owned and mutated by one session writer.
struct BudgetCounter {
  int initial = 0;
  int remaining = 0;

  static BudgetCounter of(int n) { return {n, n}; }
  int used() const noexcept { return initial - remaining; }
  bool exhausted() const noexcept { return remaining <= 0; }
  friend bool operator==(const BudgetCounter&, const BudgetCounter&) = default;
};

// Lowercases scheme and host, drops the fragment and a trailing '/'.
std::string canonical_url(std::string_view url);
std::string url_host(std::string_view url);

// Domain blocklist; a pattern matches its exact host and any subdomain.
// A leading "*." is accepted and ignored.
class SourceFilter {
 public:
  SourceFilter() = default;
  explicit SourceFilter(std::vector<std::string> patterns);

  static SourceFilter from_file(const std::string& path);
  static SourceFilter defaults();

  bool blocked(std::string_view url) const;
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<std::string> patterns_;
};

class LmGateway {
 public:
  virtual ~LmGateway() = default;

  // Validates and renders the prompt, then asks the model. An empty answer is
  // retried once before GatewayError. Transport failures raise RetriableError.
  std::string complete(const PromptSpec& spec);

  std::size_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual std::string raw_complete(const PromptSpec& spec, const std::string& prompt) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

class SearchGateway {
 public:
  explicit SearchGateway(SourceFilter filter = SourceFilter::defaults())
      : filter_(std::move(filter)) {}
  virtual ~SearchGateway() = default;

  // One query against the budget. Returns trusted results only, deduplicated
  // by canonical URL. Throws BudgetExhausted when nothing remains.
  std::vector<WebResult> search(const std::string& query, BudgetCounter& budget);

  const SourceFilter& filter() const noexcept { return filter_; }

 protected:
  virtual std::vector<WebResult> raw_search(const std::string& query) = 0;

 private:
  SourceFilter filter_;
};

class EmbedGateway {
 public:
  virtual ~EmbedGateway() = default;

  // Cached by exact text; identical text yields a bitwise-identical vector.
  Embedding embed(const std::string& text);

  std::size_t cache_size() const;

 protected:
  virtual std::vector<double> raw_embed(const std::string& text) = 0;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
  std::size_t dim_ = 0;
};

struct Gateways {
  std::shared_ptr<LmGateway> lm;
  std::shared_ptr<SearchGateway> search;
  std::shared_ptr<EmbedGateway> embed;
};

// Completes `spec` and runs `parse` on the answer; on a parse failure asks
// once more. Returns nullopt if the second answer does not parse either.
template <class Parse>
auto complete_parsed(LmGateway& lm, const PromptSpec& spec, Parse&& parse)
    -> decltype(parse(std::string{})) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (auto parsed = parse(lm.complete(spec))) return parsed;
  }
  return {};
}

}  // namespace costorm
