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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "motionsynth/caption.hpp"

namespace motionsynth {

enum class PosTag : std::uint8_t {
  kNoun, kAdjective, kVerb, kAdverb, kAdposition,
  kDeterminer, kPronoun, kConjunction, kSpatial, kOther,
};
inline constexpr std::size_t kNumPosTags = 10;

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view name);

struct TaggedWord {
  std::string text;
  PosTag tag = PosTag::kOther;
  std::string lemma;
};

// Word -> tag map read from assets/pos_lexicon.txt or a file in that format.
class TagLexicon {
 public:
  static const TagLexicon& builtin();
  // Throws ConfigError on malformed lines or unknown tags.
  static TagLexicon parse(std::string_view text);
  static TagLexicon load(const std::filesystem::path& path);

  // `phrase` may span several space-separated words.
  void add(std::string_view phrase, PosTag tag, std::string_view lemma = {});

  // Tags the words of `text` with longest-match lookup; unknown words get
  // kOther and themselves as lemma. Punctuation is dropped.
  std::vector<TaggedWord> tag(std::string_view text) const;

 private:
  struct Entry {
    PosTag tag;
    std::string lemma;
  };
  std::map<std::string, Entry, std::less<>> entries_;
  std::size_t max_words_ = 1;
};

// Tag of a grammar slot; commas have no tag (nullopt).
std::optional<PosTag> slot_tag(SlotKind kind);

struct PosProfile {
  std::array<double, kNumPosTags> mean{};  // per-caption average per tag
  std::size_t num_captions = 0;

  double operator[](PosTag tag) const { return mean[static_cast<std::size_t>(tag)]; }
};

// Empty captions are skipped; throws ArgumentError when none remain.
PosProfile pos_profile(std::span<const std::string> captions, const TagLexicon& lexicon);
// Exact profile of grammar captions from their slot records.
PosProfile pos_profile(std::span<const CaptionSlots> captions);

// Distinct noun lemmas of a caption.
std::set<std::string> noun_set(std::string_view caption, const TagLexicon& lexicon);
std::set<std::string> noun_set(const CaptionSlots& caption);

// Fraction of entries whose set occurs exactly once.
double set_uniqueness(std::span<const std::set<std::string>> sets);
// Empty captions are skipped; throws ArgumentError when none remain.
double noun_uniqueness(std::span<const std::string> captions, const TagLexicon& lexicon);

nlohmann::ordered_json to_json(const PosProfile& profile);

}  // namespace motionsynth
