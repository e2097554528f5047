// Copyright 2026 The ChronoGate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Live chat, search, and embedding adapters. Everything here talks to real
// endpoints and is excluded from golden tests; the request/response field
// mappings are documented in docs/providers.md.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "chronogate/agent.hpp"
#include "chronogate/dct_search.hpp"
#include "chronogate/error.hpp"
#include "chronogate/metrics.hpp"

namespace chronogate {

inline constexpr const char* kLlmKeyEnv = "CHRONOGATE_LLM_KEY";
inline constexpr const char* kSearchKeyEnv = "CHRONOGATE_SEARCH_KEY";
inline constexpr const char* kEmbedKeyEnv = "CHRONOGATE_EMBED_KEY";

inline std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path...
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    raise(Errc::invalid_argument, "endpoint '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin,
                                                    double timeout_seconds) {
  auto cli = std::make_unique<httplib::Client>(origin);
  const auto secs = std::chrono::duration<double>(timeout_seconds);
  cli->set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
  cli->set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
  cli->set_follow_location(true);
  return cli;
}

}  // namespace detail

/// OpenAI-compatible chat completions endpoint; key from CHRONOGATE_LLM_KEY.
class HttpChatModel : public ChatModel {
 public:
  explicit HttpChatModel(ChatBackendConfig config) : config_(std::move(config)) {
    validate_backend_config(config_);
  }

  std::string complete(const std::vector<ChatMessage>& messages) override {
    json body;
    body["model"] = config_.model_name;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_output_tokens;
    body["messages"] = json::array();
    for (const auto& m : messages)
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    const auto url = detail::split_url(config_.endpoint);
    auto cli = detail::make_client(url.origin, config_.timeout_seconds);
    httplib::Headers headers;
    const std::string key = env_or_empty(kLlmKeyEnv);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = cli->Post(url.path, headers, body.dump(), "application/json");
    if (!res)
      raise(Errc::backend_unavailable,
            "chat endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      raise(Errc::backend_unavailable,
            "chat endpoint returned HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception& e) {
      raise(Errc::backend_unavailable, std::string("unexpected chat response: ") + e.what());
    }
  }

  std::string model_name() const override { return config_.model_name; }

 private:
  ChatBackendConfig config_;
};

/// GET-based web search with before/after date operators; results outside
/// the requested window are dropped so the window invariant holds no matter
/// what the provider returns. Key from CHRONOGATE_SEARCH_KEY.
class LiveSearchBackend : public SearchBackend {
 public:
  LiveSearchBackend(std::string base_url, double timeout_seconds = 30.0)
      : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

  std::vector<Snippet> search(const std::string& query, const DateWindow& window,
                              int k) const override {
    const auto url = detail::split_url(base_url_);
    auto cli = detail::make_client(url.origin, timeout_seconds_);
    httplib::Params params{{"q", query}, {"before", to_string(window.upper)},
                           {"num", std::to_string(k)}};
    if (window.lower) params.emplace("after", to_string(*window.lower));
    httplib::Headers headers;
    const std::string key = env_or_empty(kSearchKeyEnv);
    if (!key.empty()) headers.emplace("X-API-Key", key);
    auto res = cli->Get(url.path, params, headers);
    if (!res)
      raise(Errc::backend_unavailable,
            "search endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      raise(Errc::backend_unavailable,
            "search endpoint returned HTTP " + std::to_string(res->status));

    std::vector<Snippet> out;
    try {
      const json j = json::parse(res->body);
      std::size_t rank = 0;
      for (const auto& r : j.value("results", json::array())) {
        if (!r.contains("date")) continue;
        Snippet s;
        s.doc_date = parse_date(r.at("date").get<std::string>());
        if (!window.contains(s.doc_date)) continue;  // enforce the window client-side
        s.doc_id = r.contains("id") ? r.at("id").get<std::string>() : r.value("url", "");
        s.title = r.value("title", "");
        s.text = r.value("snippet", r.value("text", ""));
        s.score = 1.0 / static_cast<double>(++rank);
        out.push_back(std::move(s));
        if (static_cast<int>(out.size()) >= k) break;
      }
    } catch (const json::exception& e) {
      raise(Errc::backend_unavailable, std::string("unexpected search response: ") + e.what());
    } catch (const Error&) {
      raise(Errc::backend_unavailable, "search response contained an unparsable date");
    }
    return out;
  }

 private:
  std::string base_url_;
  double timeout_seconds_;
};

/// OpenAI-compatible embeddings endpoint; key from CHRONOGATE_EMBED_KEY.
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string endpoint, std::string model, int dimension,
                          double timeout_seconds = 30.0)
      : endpoint_(std::move(endpoint)), model_(std::move(model)), dim_(dimension),
        timeout_seconds_(timeout_seconds) {}

  EmbeddingResult embed(const std::string& text) const override {
    if (trim(text).empty()) return {std::vector<double>(static_cast<std::size_t>(dim_), 0.0), true};
    json body{{"model", model_}, {"input", text}};
    const auto url = detail::split_url(endpoint_);
    auto cli = detail::make_client(url.origin, timeout_seconds_);
    httplib::Headers headers;
    const std::string key = env_or_empty(kEmbedKeyEnv);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = cli->Post(url.path, headers, body.dump(), "application/json");
    if (!res)
      raise(Errc::provider_unavailable,
            "embedding endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      raise(Errc::provider_unavailable,
            "embedding endpoint returned HTTP " + std::to_string(res->status));
    try {
      auto values = json::parse(res->body).at("data").at(0).at("embedding")
                        .get<std::vector<double>>();
      return {std::move(values), false};
    } catch (const json::exception& e) {
      raise(Errc::provider_unavailable, std::string("unexpected embedding response: ") + e.what());
    }
  }

  std::string provider_id() const override { return "remote-" + model_; }
  int dimension() const override { return dim_; }

 private:
  std::string endpoint_;
  std::string model_;
  int dim_;
  double timeout_seconds_;
};

}  // namespace chronogate
