#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "logu/gateway.hpp"

namespace logu {

// OpenAI-compatible chat-completion client. The one network dialect the
// pipeline speaks; GPT-style hosted models and vLLM-served local models both
// accept it.
class HttpBackend : public Backend {
 public:
  std::string complete(const ModelEndpoint& ep, const std::string& prompt,
                       const SamplingConfig& cfg, std::uint64_t) override {
    httplib::Client client(ep.base_url);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);

    httplib::Headers headers;
    if (!ep.api_key_env.empty()) {
      const char* key = std::getenv(ep.api_key_env.c_str());
      if (!key || !*key)
        throw AuthError("API key environment variable not set: " + ep.api_key_env);
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    nlohmann::json body{
        {"model", ep.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", cfg.temperature},
        {"top_p", cfg.top_p},
        {"max_tokens", cfg.max_tokens},
    };

    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransientError("connection failed: " + ep.base_url);
    if (res->status == 401 || res->status == 403)
      throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500)
      throw TransientError("HTTP " + std::to_string(res->status));
    if (res->status != 200)
      throw MalformedResponseError("unexpected HTTP status " + std::to_string(res->status));

    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw MalformedResponseError(std::string("cannot parse completion body: ") + e.what());
    }
  }
};

}  // namespace logu
