#include "costorm/live_gateways.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "costorm/errors.hpp"

namespace costorm {
namespace {

std::string env_or_empty(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

std::string require_key(const EndpointConfig& cfg) {
  auto key = env_or_empty(cfg.api_key_env);
  if (key.empty()) throw GatewayError("environment variable " + cfg.api_key_env + " is not set");
  return key;
}

void check_scheme(const EndpointConfig& cfg) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (cfg.base_url.rfind("https://", 0) == 0)
    throw GatewayError("built without TLS support; cannot reach " + cfg.base_url);
#else
  (void)cfg;
#endif
}

void apply(const Json& j, EndpointConfig& e) {
  if (!j.is_object()) throw PreconditionError("endpoint config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "base_url") e.base_url = v.get<std::string>();
    else if (k == "path") e.path = v.get<std::string>();
    else if (k == "model") e.model = v.get<std::string>();
    else if (k == "api_key_env") e.api_key_env = v.get<std::string>();
    else if (k == "temperature") e.temperature = v.get<double>();
    else if (k == "top_p") e.top_p = v.get<double>();
    else if (k == "timeout_s") e.timeout_s = v.get<int>();
    else if (k == "num_results") e.num_results = v.get<int>();
    else if (k == "max_attempts") e.max_attempts = v.get<int>();
    else throw PreconditionError("unknown endpoint config key: " + k);
  }
}

// Sends one request with bounded retries on transport errors, 429 and 5xx.
Json send(const EndpointConfig& cfg, const httplib::Headers& headers,
          const std::function<httplib::Result(httplib::Client&)>& call) {
  std::string last;
  for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(500 << attempt));
    httplib::Client cli(cfg.base_url);
    cli.set_connection_timeout(cfg.timeout_s, 0);
    cli.set_read_timeout(cfg.timeout_s, 0);
    cli.set_default_headers(headers);
    auto res = call(cli);
    if (!res) {
      last = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400)
      throw GatewayError(cfg.base_url + cfg.path + " returned HTTP " + std::to_string(res->status) +
                         ": " + res->body.substr(0, 300));
    try {
      return Json::parse(res->body);
    } catch (const Json::exception& e) {
      throw GatewayError(std::string("malformed response body: ") + e.what());
    }
  }
  throw RetriableError(cfg.base_url + cfg.path + ": " + last);
}

}  // namespace

GatewayConfig GatewayConfig::defaults() {
  GatewayConfig c;
  c.lm = {"https://api.openai.com", "/v1/chat/completions", "gpt-4o-2024-05-13", "LM_API_KEY"};
  c.embed = {"https://api.openai.com", "/v1/embeddings", "text-embedding-3-small", "LM_API_KEY"};
  c.search = {"https://api.ydc-index.io", "/search", "", "SEARCH_API_KEY"};
  return c;
}

GatewayConfig GatewayConfig::from_json(const Json& j, const std::string& base_dir) {
  GatewayConfig c = defaults();
  if (!j.is_object()) throw PreconditionError("gateway config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "lm") apply(v, c.lm);
    else if (k == "embed") apply(v, c.embed);
    else if (k == "search") apply(v, c.search);
    else if (k == "grader") {
      EndpointConfig g = c.lm;
      apply(v, g);
      c.grader = g;
    } else if (k == "blocklist") {
      if (v.is_string()) {
        std::filesystem::path p(v.get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.blocklist = SourceFilter::from_file(p.string()).patterns();
      } else {
        c.blocklist = v.get<std::vector<std::string>>();
      }
    } else {
      throw PreconditionError("unknown gateway config key: " + k);
    }
  }
  return c;
}

GatewayConfig GatewayConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open gateway config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw PreconditionError("gateway config " + path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

std::string parse_chat_completion(const Json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const Json::exception& e) {
    throw GatewayError(std::string("unexpected chat completion body: ") + e.what());
  }
}

std::vector<double> parse_embedding(const Json& body) {
  try {
    return body.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw GatewayError(std::string("unexpected embedding body: ") + e.what());
  }
}

std::vector<WebResult> parse_search_hits(const Json& body) {
  std::vector<WebResult> out;
  const Json* hits = nullptr;
  if (body.contains("hits")) hits = &body["hits"];
  else if (body.contains("results") && body["results"].contains("web"))
    hits = &body["results"]["web"];
  if (!hits || !hits->is_array()) return out;
  for (const auto& h : *hits) {
    WebResult r;
    r.url = h.value("url", "");
    r.title = h.value("title", "");
    if (h.contains("snippets") && h["snippets"].is_array())
      for (const auto& s : h["snippets"])
        if (s.is_string()) r.snippets.push_back(s.get<std::string>());
    if (r.snippets.empty()) {
      auto d = h.value("description", "");
      if (!d.empty()) r.snippets.push_back(d);
    }
    if (!r.url.empty()) out.push_back(std::move(r));
  }
  return out;
}

HttpLm::HttpLm(EndpointConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), key_(std::move(api_key)) {}

std::string HttpLm::raw_complete(const PromptSpec& spec, const std::string& prompt) {
  Json req{{"model", cfg_.model},
           {"messages", Json::array({{{"role", "user"}, {"content", prompt}}})},
           {"temperature", cfg_.temperature},
           {"top_p", cfg_.top_p},
           {"max_tokens", spec.max_output_tokens}};
  auto body = send(cfg_, {{"Authorization", "Bearer " + key_}}, [&](httplib::Client& c) {
    return c.Post(cfg_.path, req.dump(), "application/json");
  });
  return parse_chat_completion(body);
}

HttpEmbed::HttpEmbed(EndpointConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), key_(std::move(api_key)) {}

std::vector<double> HttpEmbed::raw_embed(const std::string& text) {
  Json req{{"model", cfg_.model}, {"input", text}};
  auto body = send(cfg_, {{"Authorization", "Bearer " + key_}}, [&](httplib::Client& c) {
    return c.Post(cfg_.path, req.dump(), "application/json");
  });
  return parse_embedding(body);
}

HttpSearch::HttpSearch(EndpointConfig cfg, std::string api_key, SourceFilter filter)
    : SearchGateway(std::move(filter)), cfg_(std::move(cfg)), key_(std::move(api_key)) {}

std::vector<WebResult> HttpSearch::raw_search(const std::string& query) {
  httplib::Params params{{"query", query}, {"num_web_results", std::to_string(cfg_.num_results)}};
  auto body = send(cfg_, {{"X-API-Key", key_}}, [&](httplib::Client& c) {
    return c.Get(cfg_.path, params, httplib::Headers{});
  });
  return parse_search_hits(body);
}

Gateways make_live_gateways(const GatewayConfig& cfg) {
  for (const auto* e : {&cfg.lm, &cfg.embed, &cfg.search}) check_scheme(*e);
  SourceFilter filter =
      cfg.blocklist.empty() ? SourceFilter::defaults() : SourceFilter(cfg.blocklist);
  Gateways gw;
  gw.lm = std::make_shared<HttpLm>(cfg.lm, require_key(cfg.lm));
  gw.embed = std::make_shared<HttpEmbed>(cfg.embed, require_key(cfg.embed));
  gw.search = std::make_shared<HttpSearch>(cfg.search, require_key(cfg.search), std::move(filter));
  return gw;
}

std::shared_ptr<LmGateway> make_live_grader(const GatewayConfig& cfg) {
  const EndpointConfig& e = cfg.grader ? *cfg.grader : cfg.lm;
  check_scheme(e);
  return std::make_shared<HttpLm>(e, require_key(e));
}

bool live_keys_available() {
  return !env_or_empty("LM_API_KEY").empty() && !env_or_empty("SEARCH_API_KEY").empty();
}

}  // namespace costorm
