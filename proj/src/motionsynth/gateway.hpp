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

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace motionsynth {

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string content;
};

// A conversation in the Vicuna v1.5 layout. text() is the raw completion
// prompt; chat-style endpoints receive the turns as messages instead.
struct ChatPrompt {
  std::string system;
  std::vector<ChatTurn> turns;

  std::string text() const;
};

struct RetryPolicy {
  int max_attempts = 4;
  int initial_delay_ms = 250;
  double multiplier = 2.0;
  int max_delay_ms = 4000;

  // Delay before attempt `attempt` + 1 (attempts count from 1).
  int delay_ms(int attempt) const;
};

// Result of one transport attempt. status is the HTTP status, or 0 when the
// request never produced a response.
struct CompletionResponse {
  int status = 0;
  std::string text;
  std::string error;
};

class CompletionEndpoint {
 public:
  virtual ~CompletionEndpoint() = default;
  // Must be safe to call from several threads at once.
  virtual CompletionResponse complete(const ChatPrompt& prompt) = 0;
  virtual std::string model_id() const = 0;
};

enum class RequestShape { kCompletion, kChat };

struct EndpointConfig {
  std::string url;  // e.g. http://localhost:8000/v1/completions
  std::map<std::string, std::string> headers;
  std::string model = "vicuna-13b-v1.5";
  int max_tokens = 96;
  double temperature = 0.7;
  RequestShape shape = RequestShape::kCompletion;
  int timeout_ms = 30000;
};

// OpenAI-compatible HTTP endpoint. kCompletion posts {model, prompt,
// max_tokens, temperature} and reads choices[0].text; kChat posts messages
// and reads choices[0].message.content. Throws ConfigError for a bad URL.
std::unique_ptr<CompletionEndpoint> make_http_endpoint(const EndpointConfig& cfg);

// 0 (transport), 408, 429 and 5xx are retried; everything else is final.
bool is_transient(int status);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Calls the endpoint until a 2xx response, a non-transient failure or the
// attempt budget runs out; the latter two throw GatewayError carrying the
// last status.
std::string complete_with_retry(CompletionEndpoint& endpoint,
                                const ChatPrompt& prompt,
                                const RetryPolicy& policy,
                                const Sleeper& sleep = {});

}  // namespace motionsynth
