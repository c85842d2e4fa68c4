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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace motionsynth {

// Lowercased words of `text`: runs of letters, digits, '-' and '\''.
std::vector<std::string> words_of(std::string_view text);

// Keyed word classes and phrase tables read from the direction lexicon asset.
class DirectionLexicon {
 public:
  // The lexicon shipped in assets/direction_lexicon.txt.
  static const DirectionLexicon& builtin();
  // Throws ConfigError on malformed lines.
  static DirectionLexicon parse(std::string_view text);
  static DirectionLexicon load(const std::filesystem::path& path);

  // Entries of a word class; empty when the key is absent.
  const std::vector<std::string>& words(const std::string& key) const;
  bool contains(const std::string& key, std::string_view word) const;
  // Alternatives of a rewrite.* table.
  const std::vector<std::string>& phrases(const std::string& key) const;

  // The object name plus its registered synonyms.
  std::vector<std::string> object_names(const std::string& object) const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

}  // namespace motionsynth
