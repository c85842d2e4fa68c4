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
#include <vector>

namespace motionsynth {

// Interleaved 8-bit raster, row-major, no padding.
template <int Channels>
struct Image {
  static constexpr int kChannels = Channels;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * h * Channels, 0) {}

  bool empty() const { return width == 0 || height == 0; }

  std::uint8_t* at(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * Channels;
  }
  const std::uint8_t* at(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * Channels;
  }

  bool operator==(const Image&) const = default;
};

using RgbImage = Image<3>;
using RgbaImage = Image<4>;

struct ImageSize {
  int width = 0;
  int height = 0;
};

// PNG IO via libpng; writes are byte-deterministic for identical pixels.
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbaImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);
RgbaImage read_png_rgba(const std::filesystem::path& path);
// Reads only the header.
ImageSize png_size(const std::filesystem::path& path);

// Bilinear resampling with pixel centers at i + 0.5 and edge clamping.
RgbImage resize_bilinear(const RgbImage& src, int width, int height);

// Largest centered crop with the aspect ratio width:height.
RgbImage center_crop(const RgbImage& src, int aspect_w, int aspect_h);

}  // namespace motionsynth
