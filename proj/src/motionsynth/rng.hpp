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
#include <random>

namespace motionsynth {

// Seedable generator with a fixed, portable output sequence.
//
// The engine is std::mt19937_64, whose output is pinned by the standard. The
// standard distributions are not, so all variates are derived here from raw
// 64-bit draws. Streams are split per video: `child(i)` seeds a new engine
// from splitmix64(seed ^ splitmix64(i)), so the stream of video i does not
// depend on how many other videos were generated or in which order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();

  // Uniform on [lo, hi]; returns lo when hi <= lo.
  double uniform(double lo, double hi);

  // Uniform integer on [0, n), unbiased. Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer on [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace motionsynth
