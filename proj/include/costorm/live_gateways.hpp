#pragma once

#include <optional>
#include <string>
#include <vector>

#include "costorm/event_log.hpp"
#include "costorm/gateways.hpp"

namespace costorm {

struct EndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path;
  std::string model;
  std::string api_key_env;
  double temperature = 1.0;
  double top_p = 0.9;
  int timeout_s = 60;
  int num_results = 10;  // search only
  int max_attempts = 3;  // transport retries before RetriableError
};

struct GatewayConfig {
  EndpointConfig lm;
  EndpointConfig embed;
  EndpointConfig search;
  std::optional<EndpointConfig> grader;  // rubric grading model; defaults to lm
  std::vector<std::string> blocklist;    // empty: built-in defaults

  static GatewayConfig defaults();
  // Missing keys keep their defaults. "blocklist" may be a list of patterns or
  // a path (relative to `base_dir`) to a blocklist file.
  static GatewayConfig from_json(const Json& j, const std::string& base_dir = ".");
  static GatewayConfig from_file(const std::string& path);
};

// Chat-completions endpoint (OpenAI-compatible).
class HttpLm : public LmGateway {
 public:
  HttpLm(EndpointConfig cfg, std::string api_key);

 protected:
  std::string raw_complete(const PromptSpec& spec, const std::string& prompt) override;

 private:
  EndpointConfig cfg_;
  std::string key_;
};

// Embeddings endpoint (OpenAI-compatible).
class HttpEmbed : public EmbedGateway {
 public:
  HttpEmbed(EndpointConfig cfg, std::string api_key);

 protected:
  std::vector<double> raw_embed(const std::string& text) override;

 private:
  EndpointConfig cfg_;
  std::string key_;
};

// You.com web search.
class HttpSearch : public SearchGateway {
 public:
  HttpSearch(EndpointConfig cfg, std::string api_key, SourceFilter filter);

 protected:
  std::vector<WebResult> raw_search(const std::string& query) override;

 private:
  EndpointConfig cfg_;
  std::string key_;
};

// Reads the API keys named in `cfg` from the environment. A missing key or an
// https endpoint without TLS support throws GatewayError.
Gateways make_live_gateways(const GatewayConfig& cfg);
std::shared_ptr<LmGateway> make_live_grader(const GatewayConfig& cfg);

// True when LM_API_KEY and SEARCH_API_KEY are both set and nonempty.
bool live_keys_available();

// Parsers for the provider response bodies; exposed for tests.
std::string parse_chat_completion(const Json& body);
std::vector<double> parse_embedding(const Json& body);
std::vector<WebResult> parse_search_hits(const Json& body);

}  // namespace costorm
