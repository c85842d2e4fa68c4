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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "motionsynth/rng.hpp"

namespace motionsynth {

// Generation hyperparameters. Coordinates follow image conventions: x grows
// to the right along frame_width, y grows downwards along frame_height.
struct GenConfig {
  int frame_width = 224;
  int frame_height = 224;
  int num_frames = 16;
  int num_keyframes = 3;
  int min_obj_side = 32;
  int max_obj_side = 128;
  // Largest per-frame displacement along either axis, in pixels.
  double delta_max = 10.0;
  // Keyframe angles are drawn from [-theta_range, theta_range] degrees.
  double theta_range = 25.0;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;
};

// What sample_motion needs to know about an object asset.
struct SpriteInfo {
  std::string name;
  int width = 0;
  int height = 0;
};

struct Keyframe {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  double angle = 0.0;  // degrees, positive is counter-clockwise on screen

  bool operator==(const Keyframe&) const = default;
};

struct MotionSpec {
  std::string object_name;
  int object_index = 0;
  // Scaled object size H' x W'.
  int height = 0;
  int width = 0;
  std::vector<Keyframe> keyframes;

  int num_frames() const {
    return keyframes.empty() ? 0 : keyframes.back().frame + 1;
  }
  bool operator==(const MotionSpec&) const = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double angle = 0.0;

  bool operator==(const Pose&) const = default;
};

using PoseTrack = std::vector<Pose>;

// Draws one motion: object, aspect-preserving scale, keyframe indices, a
// contained start center, delta-bounded subsequent centers, and angles.
// Throws AssetError for an empty sprite set, ConfigError for an invalid cfg.
MotionSpec sample_motion(const GenConfig& cfg,
                         std::span<const SpriteInfo> sprites, Rng& rng);

// Per-frame poses, linear between neighbouring keyframes and exact at them.
// Throws ArgumentError when num_frames does not match the last keyframe.
PoseTrack interpolate(const MotionSpec& spec, int num_frames);

// (cos -sin; sin cos) in a y-up frame. Exact for multiples of 90 degrees.
Eigen::Matrix2d rotation_matrix(double degrees);

// Lists every MotionSpec invariant the spec breaks under cfg; empty when valid.
std::vector<std::string> check_motion(const MotionSpec& spec,
                                      const GenConfig& cfg);

nlohmann::ordered_json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::ordered_json& j,
                               GenConfig defaults = {});

nlohmann::ordered_json to_json(const MotionSpec& spec);
MotionSpec motion_spec_from_json(const nlohmann::ordered_json& j);

}  // namespace motionsynth
