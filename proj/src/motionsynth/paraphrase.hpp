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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionsynth/caption.hpp"
#include "motionsynth/gateway.hpp"
#include "motionsynth/lexicon.hpp"

namespace motionsynth {

struct PromptTemplate {
  std::string system_preamble =
      "A chat between a curious user and an artificial intelligence assistant. "
      "The assistant gives helpful, detailed, and polite answers to the user's "
      "questions.";
  // {object} and {caption} are substituted once each.
  std::string user_turn =
      "Rephrase this video caption using verbs related to {object} to "
      "describe the motion: {caption}";
};

// Builds the verb-variation request. Throws ArgumentError on empty inputs.
ChatPrompt build_prompt(std::string_view object_name, std::string_view caption,
                        const PromptTemplate& tmpl = {});

// build_prompt(...).text().
std::string render_prompt(std::string_view object_name, std::string_view caption,
                          const PromptTemplate& tmpl = {});

// Everything generated after the last "ASSISTANT:", without "</s>", trimmed.
std::string extract_completion(std::string_view raw);

enum class Verdict : std::uint8_t { kAccepted, kRejected };

struct ScreenVerdict {
  Verdict verdict = Verdict::kAccepted;
  std::string reason;  // empty when accepted

  bool accepted() const { return verdict == Verdict::kAccepted; }
};

// Checks that a paraphrase keeps the motion facts of the original caption:
//   object-missing           the object name or a registered synonym is absent
//   direction-missing        a stated direction has no word from its class
//   direction-contradiction  the opposite direction appears and is not stated
//   rotation-contradiction   the opposite rotation appears and is not stated
// Location phrases ("in the left", "the right side") and rotation phrases
// ("rotating left", "clockwise") are set aside before direction matching.
ScreenVerdict screen_consistency(const MotionCaption& original,
                                 std::string_view paraphrase,
                                 const DirectionLexicon& lexicon);

// Deterministic rule-based paraphrase built from the caption's slots with the
// lexicon's rewrite tables; choices are keyed by a digest of the caption.
std::string offline_paraphrase(const MotionCaption& caption,
                               const DirectionLexicon& lexicon);

struct ParaphraseResult {
  std::string text;
  ScreenVerdict verdict;
  std::string model_id;
  double latency_ms = 0.0;
};

struct ParaphraseOptions {
  PromptTemplate prompt;
  RetryPolicy retry;
  Sleeper sleep;  // defaults to std::this_thread::sleep_for
  const DirectionLexicon* lexicon = nullptr;  // defaults to builtin()
};

inline constexpr std::string_view kOfflineModelId = "offline-synonym-rewriter";

// Paraphrases through `endpoint`, or through offline_paraphrase when it is
// null. An empty completion is rejected with reason "empty". Throws
// GatewayError when retries are exhausted.
ParaphraseResult paraphrase(const MotionCaption& caption,
                            CompletionEndpoint* endpoint,
                            const ParaphraseOptions& options = {});

// One result per caption, in input order, with at most `max_in_flight`
// requests outstanding. Gateway failures are reported per caption as a
// rejected result whose reason starts with "gateway:".
std::vector<ParaphraseResult> paraphrase_batch(std::span<const MotionCaption> captions,
                                               CompletionEndpoint* endpoint,
                                               const ParaphraseOptions& options,
                                               int max_in_flight);

}  // namespace motionsynth
