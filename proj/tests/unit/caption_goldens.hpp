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

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionsynth/kinematics.hpp"

namespace testing {

struct CaptionGolden {
  motionsynth::MotionSpec spec;
  std::string expected;
  int line = 0;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

// Rows: object, height, width, "frame,x,y,angle;..." keyframes, caption.
inline std::vector<CaptionGolden> load_caption_goldens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<CaptionGolden> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 5) throw std::runtime_error("bad golden row " + std::to_string(n));
    CaptionGolden g;
    g.line = n;
    g.spec.object_name = cols[0];
    g.spec.height = std::stoi(cols[1]);
    g.spec.width = std::stoi(cols[2]);
    for (const auto& k : split(cols[3], ';')) {
      const auto v = split(k, ',');
      g.spec.keyframes.push_back(
          {std::stoi(v.at(0)), std::stod(v.at(1)), std::stod(v.at(2)), std::stod(v.at(3))});
    }
    g.expected = cols[4];
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace testing
