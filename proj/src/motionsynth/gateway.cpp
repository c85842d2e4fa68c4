/*
 * Copyright 2026 The motionsynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "motionsynth/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos ||
      (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0)) {
    throw ConfigError("endpoint URL must start with http:// or https://: '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpEndpoint : public CompletionEndpoint {
 public:
  explicit HttpEndpoint(EndpointConfig cfg)
      : cfg_(std::move(cfg)), url_(split_url(cfg_.url)) {}

  CompletionResponse complete(const ChatPrompt& prompt) override {
    nlohmann::json body;
    body["model"] = cfg_.model;
    body["max_tokens"] = cfg_.max_tokens;
    body["temperature"] = cfg_.temperature;
    if (cfg_.shape == RequestShape::kCompletion) {
      body["prompt"] = prompt.text();
    } else {
      auto& messages = body["messages"] = nlohmann::json::array();
      messages.push_back({{"role", "system"}, {"content", prompt.system}});
      for (const ChatTurn& t : prompt.turns) {
        messages.push_back({{"role", t.role}, {"content", t.content}});
      }
    }

    httplib::Client client(url_.origin);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : cfg_.headers) headers.emplace(k, v);

    CompletionResponse out;
    auto res = client.Post(url_.path, headers, body.dump(), "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    if (res->status < 200 || res->status >= 300) {
      out.error = res->body.substr(0, 512);
      return out;
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      out.text = cfg_.shape == RequestShape::kCompletion
                     ? choice.at("text").get<std::string>()
                     : choice.at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      // A 2xx with an unreadable body is not worth retrying.
      out.status = 502;
      out.error = std::string("malformed completion body: ") + e.what();
    }
    return out;
  }

  std::string model_id() const override { return cfg_.model; }

 private:
  EndpointConfig cfg_;
  ParsedUrl url_;
};

}  // namespace

std::string ChatPrompt::text() const {
  std::string out = system;
  for (const ChatTurn& t : turns) {
    out += '\n';
    out += t.role == "assistant" ? "ASSISTANT: " : "USER: ";
    out += t.content;
    if (t.role == "assistant") out += "</s>";
  }
  out += "\nASSISTANT:";
  return out;
}

int RetryPolicy::delay_ms(int attempt) const {
  const double d = initial_delay_ms * std::pow(multiplier, std::max(0, attempt - 1));
  return static_cast<int>(std::min<double>(d, max_delay_ms));
}

std::unique_ptr<CompletionEndpoint> make_http_endpoint(const EndpointConfig& cfg) {
  return std::make_unique<HttpEndpoint>(cfg);
}

bool is_transient(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

std::string complete_with_retry(CompletionEndpoint& endpoint,
                                const ChatPrompt& prompt,
                                const RetryPolicy& policy, const Sleeper& sleep) {
  CompletionResponse last;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last = endpoint.complete(prompt);
    if (last.status >= 200 && last.status < 300) return last.text;
    if (!is_transient(last.status)) break;
    if (attempt == attempts) break;
    const auto delay = std::chrono::milliseconds(policy.delay_ms(attempt));
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
  throw GatewayError("completion failed with status " + std::to_string(last.status) +
                         (last.error.empty() ? "" : ": " + last.error),
                     last.status);
}

}  // namespace motionsynth
