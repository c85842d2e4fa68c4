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

#include "motionsynth/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "motionsynth/errors.hpp"
#include "motionsynth/lexicon.hpp"

namespace motionsynth {
namespace assets {
extern const char* const k_pos_lexicon;
}

namespace {

constexpr std::array<std::string_view, kNumPosTags> kTagNames = {
    "noun", "adjective", "verb", "adverb", "adposition",
    "determiner", "pronoun", "conjunction", "spatial", "other"};

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t n) {
  std::string out;
  for (std::size_t k = from; k < from + n; ++k) {
    if (!out.empty()) out.push_back(' ');
    out += words[k];
  }
  return out;
}

std::vector<std::string> non_empty(std::span<const std::string> captions) {
  std::vector<std::string> out;
  for (const std::string& c : captions) {
    if (c.find_first_not_of(" \t\r\n") != std::string::npos) out.push_back(c);
  }
  if (out.empty()) throw ArgumentError("no non-empty captions");
  return out;
}

}  // namespace

std::string_view to_string(PosTag tag) {
  return kTagNames[static_cast<std::size_t>(tag)];
}

std::optional<PosTag> parse_pos_tag(std::string_view name) {
  for (std::size_t i = 0; i < kNumPosTags; ++i) {
    if (kTagNames[i] == name) return static_cast<PosTag>(i);
  }
  return std::nullopt;
}

const TagLexicon& TagLexicon::builtin() {
  static const TagLexicon lexicon = parse(assets::k_pos_lexicon);
  return lexicon;
}

TagLexicon TagLexicon::parse(std::string_view text) {
  TagLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::string word, tag, lemma, extra;
    if (!(fields >> word) || word.front() == '#') continue;
    const auto where = "pos lexicon line " + std::to_string(number);
    if (!(fields >> tag)) throw ConfigError(where + ": missing tag");
    fields >> lemma;
    if (fields >> extra) throw ConfigError(where + ": too many fields");
    const auto parsed = parse_pos_tag(tag);
    if (!parsed) throw ConfigError(where + ": unknown tag '" + tag + "'");
    std::replace(word.begin(), word.end(), '_', ' ');
    std::replace(lemma.begin(), lemma.end(), '_', ' ');
    lex.add(word, *parsed, lemma);
  }
  return lex;
}

TagLexicon TagLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

void TagLexicon::add(std::string_view phrase, PosTag tag, std::string_view lemma) {
  const std::vector<std::string> words = words_of(phrase);
  if (words.empty()) throw ArgumentError("empty lexicon phrase");
  const std::string key = join(words, 0, words.size());
  entries_[key] = Entry{tag, lemma.empty() ? key : std::string(lemma)};
  max_words_ = std::max(max_words_, words.size());
}

std::vector<TaggedWord> TagLexicon::tag(std::string_view text) const {
  const std::vector<std::string> words = words_of(text);
  std::vector<TaggedWord> out;
  for (std::size_t i = 0; i < words.size();) {
    bool matched = false;
    for (std::size_t n = std::min(max_words_, words.size() - i); n >= 1; --n) {
      const std::string key = join(words, i, n);
      const auto it = entries_.find(key);
      if (it == entries_.end()) continue;
      out.push_back({key, it->second.tag, it->second.lemma});
      i += n;
      matched = true;
      break;
    }
    if (!matched) {
      out.push_back({words[i], PosTag::kOther, words[i]});
      ++i;
    }
  }
  return out;
}

std::optional<PosTag> slot_tag(SlotKind kind) {
  switch (kind) {
    case SlotKind::kArticle:
    case SlotKind::kThe: return PosTag::kDeterminer;
    case SlotKind::kSize:
    case SlotKind::kStill: return PosTag::kAdjective;
    case SlotKind::kObject: return PosTag::kNoun;
    case SlotKind::kIn:
    case SlotKind::kBefore: return PosTag::kAdposition;
    case SlotKind::kPosition:
    case SlotKind::kDirection:
    case SlotKind::kRotDirection: return PosTag::kSpatial;
    case SlotKind::kFirst:
    case SlotKind::kSpeed:
    case SlotKind::kDiagonal:
    case SlotKind::kDistance:
    case SlotKind::kRotAmount: return PosTag::kAdverb;
    case SlotKind::kIt: return PosTag::kPronoun;
    case SlotKind::kMoves:
    case SlotKind::kRotating:
    case SlotKind::kStays: return PosTag::kVerb;
    case SlotKind::kWhile: return PosTag::kConjunction;
    case SlotKind::kComma: return std::nullopt;
  }
  return std::nullopt;
}

PosProfile pos_profile(std::span<const std::string> captions, const TagLexicon& lexicon) {
  const std::vector<std::string> kept = non_empty(captions);
  PosProfile p;
  p.num_captions = kept.size();
  for (const std::string& c : kept) {
    for (const TaggedWord& w : lexicon.tag(c)) p.mean[static_cast<std::size_t>(w.tag)] += 1.0;
  }
  for (double& m : p.mean) m /= static_cast<double>(p.num_captions);
  return p;
}

PosProfile pos_profile(std::span<const CaptionSlots> captions) {
  if (captions.empty()) throw ArgumentError("no captions");
  PosProfile p;
  p.num_captions = captions.size();
  for (const CaptionSlots& c : captions) {
    for (const TaggedToken& t : render_tokens(c)) {
      if (const auto tag = slot_tag(t.kind)) p.mean[static_cast<std::size_t>(*tag)] += 1.0;
    }
  }
  for (double& m : p.mean) m /= static_cast<double>(p.num_captions);
  return p;
}

std::set<std::string> noun_set(std::string_view caption, const TagLexicon& lexicon) {
  std::set<std::string> out;
  for (const TaggedWord& w : lexicon.tag(caption)) {
    if (w.tag == PosTag::kNoun) out.insert(w.lemma);
  }
  return out;
}

std::set<std::string> noun_set(const CaptionSlots& caption) {
  return {caption.object};
}

double set_uniqueness(std::span<const std::set<std::string>> sets) {
  if (sets.empty()) throw ArgumentError("no captions");
  std::map<std::set<std::string>, std::size_t> counts;
  for (const auto& s : sets) ++counts[s];
  std::size_t singles = 0;
  for (const auto& s : sets) singles += counts[s] == 1 ? 1 : 0;
  return static_cast<double>(singles) / static_cast<double>(sets.size());
}

double noun_uniqueness(std::span<const std::string> captions, const TagLexicon& lexicon) {
  std::vector<std::set<std::string>> sets;
  for (const std::string& c : non_empty(captions)) sets.push_back(noun_set(c, lexicon));
  return set_uniqueness(sets);
}

nlohmann::ordered_json to_json(const PosProfile& profile) {
  nlohmann::ordered_json j;
  j["num_captions"] = profile.num_captions;
  for (std::size_t i = 0; i < kNumPosTags; ++i) j[std::string(kTagNames[i])] = profile.mean[i];
  return j;
}

}  // namespace motionsynth
