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

#include "motionsynth/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace assets {
extern const char* const k_direction_lexicon;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const std::vector<std::string> kEmpty;

}  // namespace

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string w;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '-' || c == '\'') {
      w.push_back(static_cast<char>(std::tolower(u)));
    } else if (!w.empty()) {
      out.push_back(std::move(w));
      w.clear();
    }
  }
  if (!w.empty()) out.push_back(std::move(w));
  return out;
}

const DirectionLexicon& DirectionLexicon::builtin() {
  static const DirectionLexicon lexicon = parse(assets::k_direction_lexicon);
  return lexicon;
}

DirectionLexicon DirectionLexicon::parse(std::string_view text) {
  DirectionLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("lexicon line " + std::to_string(number) + ": missing '='");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string rest = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("lexicon line " + std::to_string(number) + ": empty key");
    }
    auto& values = lex.entries_[key];
    if (key.rfind("rewrite.", 0) == 0) {
      std::istringstream alts(rest);
      std::string alt;
      while (std::getline(alts, alt, '|')) {
        if (auto a = trim(alt); !a.empty()) values.push_back(a);
      }
    } else {
      for (auto& w : words_of(rest)) values.push_back(std::move(w));
    }
  }
  return lex;
}

DirectionLexicon DirectionLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::vector<std::string>& DirectionLexicon::words(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? kEmpty : it->second;
}

bool DirectionLexicon::contains(const std::string& key, std::string_view word) const {
  const auto& ws = words(key);
  return std::find(ws.begin(), ws.end(), word) != ws.end();
}

const std::vector<std::string>& DirectionLexicon::phrases(const std::string& key) const {
  return words(key);
}

std::vector<std::string> DirectionLexicon::object_names(const std::string& object) const {
  std::vector<std::string> out{object};
  for (const auto& s : words("object." + object)) out.push_back(s);
  return out;
}

}  // namespace motionsynth
