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
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "caption_goldens.hpp"

namespace testing {

// Hand counts in the order noun, adjective, verb, adverb, adposition.
struct PosRow {
  std::string caption;
  std::array<int, 5> counts{};
};

inline std::vector<PosRow> load_pos_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<PosRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 6) throw std::runtime_error("bad fixture row: " + line);
    PosRow r;
    r.caption = cols[0];
    for (int i = 0; i < 5; ++i) r.counts[i] = std::stoi(cols[i + 1]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace testing
