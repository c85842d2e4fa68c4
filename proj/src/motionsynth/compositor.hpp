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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motionsynth/image.hpp"
#include "motionsynth/kinematics.hpp"
#include "motionsynth/sprites.hpp"

namespace motionsynth {

enum class BackgroundMode { kVideo, kStaticFrame, kBlack };

std::string_view to_string(BackgroundMode mode);
// Accepts "video", "static_frame" and "black"; throws ConfigError otherwise.
BackgroundMode parse_background_mode(std::string_view text);

struct FrameSeq {
  std::vector<RgbImage> frames;
  BackgroundMode mode = BackgroundMode::kBlack;

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

// Scales the sprite to width x height and rotates it counter-clockwise by
// theta degrees into a raster that tightly bounds the rotated rectangle.
// Color and alpha share one bilinear filter on premultiplied values.
// Throws ArgumentError for a non-positive target size.
Sprite transform_sprite(const Sprite& sprite, int height, int width,
                        double theta);

// Size of transform_sprite's output.
ImageSize rotated_bounds(int height, int width, double theta);

// Source-over composite of the moving sprite onto every background frame.
// The sprite is resampled once per frame straight into frame space, so
// sub-pixel centers move smoothly. Frames where the transformed alpha is
// zero keep their background bytes. Throws ArgumentError when the track and
// background lengths differ or sizes are degenerate.
FrameSeq composite(const FrameSeq& background, const Sprite& sprite,
                   int height, int width, const PoseTrack& track);

// Background for the three ablation modes. For non-black modes `source`
// supplies the clip: static_frame repeats its frame 0, video samples frame
// floor(i * M / N) for output i. Source frames are center-cropped to the
// target aspect and bilinearly resized. Throws ArgumentError when a non-black
// mode has no source.
FrameSeq make_background(BackgroundMode mode, const FrameSeq* source,
                         int num_frames, int width, int height);

// Frames `*.png` of one clip directory, in file-name order.
FrameSeq load_clip(const std::filesystem::path& dir);

// Sorted clip directories under root (subdirectories containing PNGs).
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root);

// Deterministic textured clip with drifting color bands, for tests and
// asset-free runs of the static_frame and video modes.
FrameSeq procedural_clip(std::uint64_t seed, int num_frames, int width,
                         int height);

}  // namespace motionsynth
