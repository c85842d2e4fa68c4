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

#include "motionsynth/sprites.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "motionsynth/digest.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {
namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 40> kObjectNames = {
    "car",      "apple",   "ball",     "piano",    "airplane", "zebra",
    "bottle",   "chair",   "kite",     "clock",    "boat",     "cup",
    "umbrella", "bicycle", "lamp",     "book",     "guitar",   "hat",
    "shoe",     "teapot",  "drum",     "balloon",  "leaf",     "fish",
    "bird",     "truck",   "banana",   "orange",   "pumpkin",  "mug",
    "vase",     "helmet",  "backpack", "frisbee",  "donut",    "pillow",
    "candle",   "bucket",  "trumpet",  "suitcase"};

enum class Shape { kRect, kEllipse, kDiamond, kHexagon, kOctagon, kCross };

// Inside test in the unit square centred at the origin, half-extents 1.
bool inside(Shape shape, double u, double v) {
  const double au = std::abs(u);
  const double av = std::abs(v);
  switch (shape) {
    case Shape::kRect:
      return au <= 1 && av <= 1;
    case Shape::kEllipse:
      return u * u + v * v <= 1;
    case Shape::kDiamond:
      return au + av <= 1;
    case Shape::kHexagon:
      return av <= 1 && au <= 1 && au + 0.5 * av <= 1;
    case Shape::kOctagon:
      return au <= 1 && av <= 1 && au + av <= 1.5;
    case Shape::kCross:
      return (au <= 1 && av <= 0.4) || (au <= 0.4 && av <= 1);
  }
  return false;
}

RgbaImage draw_shape(Shape shape, int w, int h, std::array<int, 3> base,
                     std::array<int, 3> accent, bool striped) {
  constexpr int kSuper = 4;
  RgbaImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double u = ((x + (sx + 0.5) / kSuper) / w) * 2 - 1;
          const double v = ((y + (sy + 0.5) / kSuper) / h) * 2 - 1;
          hits += inside(shape, u, v) ? 1 : 0;
        }
      }
      if (hits == 0) continue;
      // Stripes are symmetric about the center row.
      const bool band = striped && (std::abs(2 * y + 1 - h) / 8) % 2 == 1;
      const auto& col = band ? accent : base;
      std::uint8_t* px = img.at(x, y);
      px[0] = static_cast<std::uint8_t>(col[0]);
      px[1] = static_cast<std::uint8_t>(col[1]);
      px[2] = static_cast<std::uint8_t>(col[2]);
      px[3] = static_cast<std::uint8_t>((hits * 255 + kSuper * kSuper / 2) /
                                        (kSuper * kSuper));
    }
  }
  return img;
}

}  // namespace

bool is_valid_object_name(const std::string& name) {
  if (name.empty() || name.front() == ' ' || name.back() == ' ') return false;
  if (name.find("  ") != std::string::npos) return false;
  if (name.find(" in the ") != std::string::npos) return false;
  if (name == "big" || name == "small" || name.rfind("big ", 0) == 0 ||
      name.rfind("small ", 0) == 0) {
    return false;
  }
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == ' ' ||
           c == '-';
  });
}

void validate_sprite(const Sprite& sprite) {
  if (!is_valid_object_name(sprite.name)) {
    throw AssetError("invalid object name '" + sprite.name + "'");
  }
  if (sprite.rgba.empty()) throw AssetError("sprite '" + sprite.name + "' is empty");
  bool visible = false;
  for (std::size_t i = 3; i < sprite.rgba.data.size() && !visible; i += 4) {
    visible = sprite.rgba.data[i] != 0;
  }
  if (!visible) {
    throw AssetError("sprite '" + sprite.name + "' is fully transparent");
  }
}

SpriteSet::SpriteSet(std::vector<Sprite> sprites) : sprites_(std::move(sprites)) {
  infos_.reserve(sprites_.size());
  for (const Sprite& s : sprites_) {
    validate_sprite(s);
    infos_.push_back(SpriteInfo{s.name, s.rgba.width, s.rgba.height});
  }
}

std::string SpriteSet::digest() const {
  Sha256 sha;
  for (const Sprite& s : sprites_) {
    sha.update(s.name).update(std::string_view("\0", 1));
    sha.update(std::to_string(s.rgba.width) + "x" +
               std::to_string(s.rgba.height) + ";");
    sha.update(std::span<const std::uint8_t>(s.rgba.data));
  }
  return sha.hex();
}

SpriteSet load_sprite_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw AssetError("sprite directory not found: " + dir.string());
  }
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& object_dir : fs::directory_iterator(dir)) {
    if (!object_dir.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(object_dir.path())) {
      if (f.is_regular_file() && f.path().extension() == ".png") {
        files.emplace_back(object_dir.path().filename().string(), f.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw AssetError("no sprites under " + dir.string());
  std::vector<Sprite> sprites;
  sprites.reserve(files.size());
  for (const auto& [name, path] : files) {
    try {
      sprites.push_back(Sprite{name, read_png_rgba(path)});
    } catch (const IoError& e) {
      throw AssetError(e.what());
    }
  }
  return SpriteSet(std::move(sprites));
}

void save_sprite_dir(const SpriteSet& set, const fs::path& dir) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    const fs::path object_dir = dir / set[i].name;
    fs::create_directories(object_dir);
    char file[32];
    std::snprintf(file, sizeof(file), "%05zu.png", i);
    write_png(object_dir / file, set[i].rgba);
  }
}

SpriteSet procedural_sprites(int count, std::uint64_t seed) {
  if (count <= 0) throw AssetError("procedural sprite count must be positive");
  Rng rng(seed);
  std::vector<Sprite> sprites;
  for (int i = 0; i < count; ++i) {
    Rng r = rng.child(static_cast<std::uint64_t>(i));
    const auto shape = static_cast<Shape>(r.below(6));
    const int longest = static_cast<int>(r.between(96, 160));
    const int shorter = static_cast<int>(std::lround(longest * r.uniform(0.6, 1.0)));
    const bool tall = r.below(2) == 1;
    auto channel = [&r] { return static_cast<int>(r.between(60, 255)); };
    const std::array<int, 3> base{channel(), channel(), channel()};
    const std::array<int, 3> accent{channel(), channel(), channel()};
    const bool striped = r.below(2) == 1;
    sprites.push_back(Sprite{
        kObjectNames[static_cast<std::size_t>(i) % kObjectNames.size()],
        draw_shape(shape, tall ? shorter : longest, tall ? longest : shorter,
                   base, accent, striped)});
  }
  return SpriteSet(std::move(sprites));
}

}  // namespace motionsynth
