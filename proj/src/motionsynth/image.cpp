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

#include "motionsynth/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace {

template <int C>
void write_png_impl(const std::filesystem::path& path, const Image<C>& image,
                    png_uint_32 format) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0,
                               nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

template <int C>
Image<C> read_png_impl(const std::filesystem::path& path, png_uint_32 format) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + png.message);
  }
  png.format = format;
  Image<C> image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.data.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode " + path.string() + ": " + msg);
  }
  return image;
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_png_impl(path, image, PNG_FORMAT_RGB);
}

void write_png(const std::filesystem::path& path, const RgbaImage& image) {
  write_png_impl(path, image, PNG_FORMAT_RGBA);
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  return read_png_impl<3>(path, PNG_FORMAT_RGB);
}

RgbaImage read_png_rgba(const std::filesystem::path& path) {
  return read_png_impl<4>(path, PNG_FORMAT_RGBA);
}

ImageSize png_size(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + png.message);
  }
  ImageSize size{static_cast<int>(png.width), static_cast<int>(png.height)};
  png_image_free(&png);
  return size;
}

RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  if (width <= 0 || height <= 0 || src.empty()) {
    throw ArgumentError("resize_bilinear: empty source or target");
  }
  RgbImage out(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(v);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = v - y0;
    for (int x = 0; x < width; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(u);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = u - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(x0, y0)[c] * (1 - fx) + src.at(x1, y0)[c] * fx;
        const double bot = src.at(x0, y1)[c] * (1 - fx) + src.at(x1, y1)[c] * fx;
        out.at(x, y)[c] =
            static_cast<std::uint8_t>(std::lround(top * (1 - fy) + bot * fy));
      }
    }
  }
  return out;
}

RgbImage center_crop(const RgbImage& src, int aspect_w, int aspect_h) {
  int w = src.width;
  int h = src.height;
  // Keep the full width when the source is relatively taller, else full height.
  if (static_cast<long long>(src.width) * aspect_h >
      static_cast<long long>(src.height) * aspect_w) {
    w = static_cast<int>(static_cast<long long>(src.height) * aspect_w / aspect_h);
  } else {
    h = static_cast<int>(static_cast<long long>(src.width) * aspect_h / aspect_w);
  }
  const int x0 = (src.width - w) / 2;
  const int y0 = (src.height - h) / 2;
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    std::memcpy(out.at(0, y), src.at(x0, y0 + y), static_cast<std::size_t>(w) * 3);
  }
  return out;
}

}  // namespace motionsynth
