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
#include <string>
#include <vector>

#include "motionsynth/image.hpp"
#include "motionsynth/kinematics.hpp"

namespace motionsynth {

// A segmented object: straight (non-premultiplied) RGBA plus its name.
struct Sprite {
  std::string name;
  RgbaImage rgba;
};

// Object names end up inside captions and must parse back unambiguously:
// lowercase words separated by single spaces, not starting with a size word
// and not containing " in the ".
bool is_valid_object_name(const std::string& name);

// Throws AssetError when the sprite has no name or no visible pixel.
void validate_sprite(const Sprite& sprite);

class SpriteSet {
 public:
  SpriteSet() = default;
  explicit SpriteSet(std::vector<Sprite> sprites);

  bool empty() const { return sprites_.empty(); }
  std::size_t size() const { return sprites_.size(); }
  const Sprite& operator[](std::size_t i) const { return sprites_[i]; }
  const std::vector<SpriteInfo>& infos() const { return infos_; }

  // SHA-256 over names, sizes and pixels, in set order.
  std::string digest() const;

 private:
  std::vector<Sprite> sprites_;
  std::vector<SpriteInfo> infos_;
};

// Loads `<dir>/<object_name>/<id>.png`, ordered by (name, file name).
// Throws AssetError when the directory holds no usable sprite.
SpriteSet load_sprite_dir(const std::filesystem::path& dir);

// Writes a set back out in the layout load_sprite_dir reads.
void save_sprite_dir(const SpriteSet& set, const std::filesystem::path& dir);

// Built-in colored shapes, all point-symmetric about their center so the
// alpha centroid coincides with the placement center.
SpriteSet procedural_sprites(int count, std::uint64_t seed);

}  // namespace motionsynth
