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

#include "motionsynth/paraphrase.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <set>
#include <thread>

#include "motionsynth/digest.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {
namespace {

std::string replace_once(std::string text, std::string_view key,
                         std::string_view value) {
  const auto at = text.find(key);
  if (at != std::string::npos) text.replace(at, key.size(), value);
  return text;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string class_key(Direction d) {
  switch (d) {
    case Direction::kUpwards: return "direction.up";
    case Direction::kDownwards: return "direction.down";
    case Direction::kLeft: return "direction.left";
    case Direction::kRight: return "direction.right";
    default: return {};
  }
}

Direction opposite(Direction d) {
  switch (d) {
    case Direction::kUpwards: return Direction::kDownwards;
    case Direction::kDownwards: return Direction::kUpwards;
    case Direction::kLeft: return Direction::kRight;
    case Direction::kRight: return Direction::kLeft;
    default: return Direction::kNone;
  }
}

// Words a rotation verb may skip before its left/right complement.
bool rotation_filler(std::string_view w) {
  static const std::set<std::string_view> kFiller = {
      "to", "the", "toward", "towards", "around", "a", "bit", "slightly",
      "significantly", "sharply", "gently", "subtly", "its", "itself"};
  return kFiller.count(w) > 0;
}

bool contains_sequence(const std::vector<std::string>& words,
                       const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > words.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= words.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) {
      const std::string& w = words[i + k];
      const std::string& n = needle[k];
      // The last word may carry a plural "s".
      match = w == n || (k + 1 == needle.size() && w == n + "s");
    }
    if (match) return true;
  }
  return false;
}

class Chooser {
 public:
  Chooser(const DirectionLexicon& lex, std::string_view key_text)
      : lex_(lex) {
    const std::string hex = sha256_hex(key_text).substr(0, 16);
    seed_ = std::stoull(hex, nullptr, 16);
  }

  std::string pick(const std::string& table, std::string_view fallback) {
    const auto& options = lex_.phrases(table);
    const std::uint64_t h = splitmix64(seed_ + 0x9E3779B97F4A7C15ULL * ++salt_);
    if (options.empty()) return std::string(fallback);
    return options[h % options.size()];
  }

 private:
  const DirectionLexicon& lex_;
  std::uint64_t seed_ = 0;
  std::uint64_t salt_ = 0;
};

std::string segment_text(const SegmentSlots& s, Chooser& choose) {
  if (s.still()) return choose.pick("rewrite.still", "stays still");
  std::string out;
  auto add = [&out](const std::string& part) {
    if (part.empty()) return;
    if (!out.empty()) out += ' ';
    out += part;
  };
  if (s.translates()) {
    switch (s.direction) {
      case Direction::kUpwards: add(choose.pick("rewrite.up", "moves upwards")); break;
      case Direction::kDownwards: add(choose.pick("rewrite.down", "moves downwards")); break;
      case Direction::kLeft: add(choose.pick("rewrite.left", "moves left")); break;
      default: add(choose.pick("rewrite.right", "moves right")); break;
    }
    if (s.speed == Speed::kQuickly) add(choose.pick("rewrite.quickly", "quickly"));
    if (s.speed == Speed::kSlowly) add(choose.pick("rewrite.slowly", "slowly"));
    if (s.diagonal) add(choose.pick("rewrite.diagonally", "diagonally"));
    if (s.distance == Distance::kALot) add(choose.pick("rewrite.a_lot", "a lot"));
    if (s.distance == Distance::kALittle) add(choose.pick("rewrite.a_little", "a little"));
  }
  if (s.rotates()) {
    if (s.translates()) add("while");
    add(s.rot_direction == RotDirection::kLeft
            ? choose.pick("rewrite.rot_left", "rotating left")
            : choose.pick("rewrite.rot_right", "rotating right"));
    if (s.rot_amount == RotAmount::kSlightly) add(choose.pick("rewrite.slightly", "slightly"));
    if (s.rot_amount == RotAmount::kSignificantly) {
      add(choose.pick("rewrite.significantly", "significantly"));
    }
  }
  return out;
}

}  // namespace

ChatPrompt build_prompt(std::string_view object_name, std::string_view caption,
                        const PromptTemplate& tmpl) {
  if (object_name.empty()) throw ArgumentError("build_prompt: empty object name");
  if (caption.empty()) throw ArgumentError("build_prompt: empty caption");
  ChatPrompt prompt;
  prompt.system = tmpl.system_preamble;
  prompt.turns.push_back({"user", "Hello!"});
  prompt.turns.push_back({"assistant", "Hi!"});
  // Substitute the caption last so braces inside the object name stay literal.
  const std::string with_object = replace_once(tmpl.user_turn, "{object}", object_name);
  prompt.turns.push_back({"user", replace_once(with_object, "{caption}", caption)});
  return prompt;
}

std::string render_prompt(std::string_view object_name, std::string_view caption,
                          const PromptTemplate& tmpl) {
  return build_prompt(object_name, caption, tmpl).text();
}

std::string extract_completion(std::string_view raw) {
  constexpr std::string_view kMarker = "ASSISTANT:";
  const auto at = raw.rfind(kMarker);
  if (at != std::string_view::npos) raw.remove_prefix(at + kMarker.size());
  std::string text(raw);
  for (auto eos = text.find("</s>"); eos != std::string::npos; eos = text.find("</s>")) {
    text.erase(eos, 4);
  }
  return trim(text);
}

ScreenVerdict screen_consistency(const MotionCaption& original,
                                 std::string_view paraphrase,
                                 const DirectionLexicon& lex) {
  auto reject = [](std::string reason) {
    return ScreenVerdict{Verdict::kRejected, std::move(reason)};
  };
  const std::vector<std::string> words = words_of(paraphrase);
  const std::size_t n = words.size();

  bool object_found = false;
  for (const std::string& name : lex.object_names(original.slots.object)) {
    if (contains_sequence(words, words_of(name))) {
      object_found = true;
      break;
    }
  }
  if (!object_found) return reject("object-missing");

  auto directional = [&lex](const std::string& w) {
    for (const char* key : {"direction.up", "direction.down", "direction.left", "direction.right"}) {
      if (lex.contains(key, w)) return true;
    }
    return false;
  };

  std::vector<bool> consumed(n, false);
  // Location phrases.
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 2 < n && lex.contains("position.preps", words[i]) && words[i + 1] == "the" &&
        directional(words[i + 2])) {
      consumed[i + 2] = true;
    }
    if (i + 1 < n && directional(words[i]) && lex.contains("position.nouns", words[i + 1])) {
      consumed[i] = true;
    }
  }
  // Rotation phrases.
  std::set<RotDirection> rotations;
  for (std::size_t i = 0; i < n; ++i) {
    if (lex.contains("rotation.left", words[i])) {
      rotations.insert(RotDirection::kLeft);
      consumed[i] = true;
    } else if (lex.contains("rotation.right", words[i])) {
      rotations.insert(RotDirection::kRight);
      consumed[i] = true;
    } else if (lex.contains("rotation.verbs", words[i])) {
      for (std::size_t j = i + 1; j < n && j <= i + 4; ++j) {
        if (lex.contains("direction.left", words[j])) {
          rotations.insert(RotDirection::kLeft);
          consumed[j] = true;
        } else if (lex.contains("direction.right", words[j])) {
          rotations.insert(RotDirection::kRight);
          consumed[j] = true;
        } else if (rotation_filler(words[j])) {
          continue;
        }
        break;
      }
    }
  }
  std::set<Direction> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (consumed[i]) continue;
    for (Direction d : {Direction::kUpwards, Direction::kDownwards, Direction::kLeft,
                        Direction::kRight}) {
      if (lex.contains(class_key(d), words[i])) seen.insert(d);
    }
  }

  std::set<Direction> stated;
  std::set<RotDirection> stated_rotations;
  for (const SegmentSlots& s : original.slots.segments) {
    if (s.translates()) stated.insert(s.direction);
    if (s.rotates()) stated_rotations.insert(s.rot_direction);
  }
  for (Direction d : stated) {
    if (!seen.count(d)) return reject("direction-missing");
  }
  for (Direction d : stated) {
    if (seen.count(opposite(d)) && !stated.count(opposite(d))) {
      return reject("direction-contradiction");
    }
  }
  for (RotDirection r : stated_rotations) {
    const RotDirection other = r == RotDirection::kLeft ? RotDirection::kRight : RotDirection::kLeft;
    if (rotations.count(other) && !stated_rotations.count(other)) {
      return reject("rotation-contradiction");
    }
  }
  return {};
}

std::string offline_paraphrase(const MotionCaption& caption,
                               const DirectionLexicon& lex) {
  const CaptionSlots& slots = caption.slots;
  Chooser choose(lex, caption.rendered);
  std::string out = "A";
  if (slots.size != SizeWord::kNone) out += " " + std::string(to_string(slots.size));
  out += " " + slots.object + " " + choose.pick("rewrite.prep", "in the") + " " +
         std::string(to_string(slots.position));

  const bool all_still = std::all_of(slots.segments.begin(), slots.segments.end(),
                                     [](const SegmentSlots& s) { return s.still(); });
  if (all_still) return out;
  if (slots.segments.size() == 1) return out + " " + segment_text(slots.segments[0], choose);
  for (std::size_t i = 0; i < slots.segments.size(); ++i) {
    out += i == 0 ? " " + choose.pick("rewrite.first", "first") + " "
                  : ", " + choose.pick("rewrite.before_it", "before it") + " ";
    out += segment_text(slots.segments[i], choose);
  }
  return out;
}

ParaphraseResult paraphrase(const MotionCaption& caption,
                            CompletionEndpoint* endpoint,
                            const ParaphraseOptions& options) {
  const DirectionLexicon& lex =
      options.lexicon != nullptr ? *options.lexicon : DirectionLexicon::builtin();
  const auto start = std::chrono::steady_clock::now();
  ParaphraseResult result;
  if (endpoint == nullptr) {
    result.text = offline_paraphrase(caption, lex);
    result.model_id = std::string(kOfflineModelId);
  } else {
    const ChatPrompt prompt =
        build_prompt(caption.slots.object, caption.rendered, options.prompt);
    result.text = extract_completion(
        complete_with_retry(*endpoint, prompt, options.retry, options.sleep));
    result.model_id = endpoint->model_id();
  }
  result.latency_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start).count();
  result.verdict = result.text.empty()
                       ? ScreenVerdict{Verdict::kRejected, "empty"}
                       : screen_consistency(caption, result.text, lex);
  return result;
}

std::vector<ParaphraseResult> paraphrase_batch(std::span<const MotionCaption> captions,
                                               CompletionEndpoint* endpoint,
                                               const ParaphraseOptions& options,
                                               int max_in_flight) {
  std::vector<ParaphraseResult> results(captions.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < captions.size(); i = next++) {
      try {
        results[i] = paraphrase(captions[i], endpoint, options);
      } catch (const GatewayError& e) {
        results[i].verdict = {Verdict::kRejected, std::string("gateway: ") + e.what()};
        results[i].model_id = endpoint != nullptr ? endpoint->model_id() : "";
      }
    }
  };
  const int workers = std::clamp<int>(max_in_flight, 1,
                                      static_cast<int>(std::max<std::size_t>(1, captions.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace motionsynth
