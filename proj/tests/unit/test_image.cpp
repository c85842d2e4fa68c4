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

#include <algorithm>
#include <cmath>
#include <fstream>

#include "doctest.h"

#include "helpers.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/image.hpp"
#include "motionsynth/rng.hpp"

using namespace motionsynth;

namespace {

RgbImage noise(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(w, h);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_CASE("2x downscale is a 2x2 box average") {
  const RgbImage src = noise(40, 30, 1);
  const RgbImage out = resize_bilinear(src, 20, 15);
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int sum = src.at(2 * x, 2 * y)[c] + src.at(2 * x + 1, 2 * y)[c] +
                        src.at(2 * x, 2 * y + 1)[c] + src.at(2 * x + 1, 2 * y + 1)[c];
        REQUIRE(out.at(x, y)[c] == std::lround(sum / 4.0));
      }
    }
  }
}

TEST_CASE("same-size resize is the identity") {
  const RgbImage src = noise(17, 9, 2);
  CHECK(resize_bilinear(src, 17, 9) == src);
}

TEST_CASE("resize of a constant image stays constant") {
  RgbImage src(13, 7);
  for (std::size_t i = 0; i < src.data.size(); i += 3) {
    src.data[i] = 10;
    src.data[i + 1] = 200;
    src.data[i + 2] = 77;
  }
  const RgbImage out = resize_bilinear(src, 31, 5);
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    CHECK(out.data[i] == 10);
    CHECK(out.data[i + 1] == 200);
    CHECK(out.data[i + 2] == 77);
  }
}

TEST_CASE("center crop keeps the middle") {
  const RgbImage src = noise(100, 60, 3);
  const RgbImage sq = center_crop(src, 1, 1);
  CHECK(sq.width == 60);
  CHECK(sq.height == 60);
  CHECK(std::equal(sq.at(0, 0), sq.at(0, 0) + 3, src.at(20, 0)));
  CHECK(std::equal(sq.at(59, 59), sq.at(59, 59) + 3, src.at(79, 59)));

  const RgbImage tall = noise(50, 90, 4);
  const RgbImage wide = center_crop(tall, 2, 1);
  CHECK(wide.width == 50);
  CHECK(wide.height == 25);
  CHECK(std::equal(wide.at(0, 0), wide.at(0, 0) + 3, tall.at(0, 32)));
}

TEST_CASE("png round trip") {
  testing::TempDir dir("png");
  const RgbImage rgb = noise(21, 11, 5);
  write_png(dir.path() / "a.png", rgb);
  CHECK(read_png_rgb(dir.path() / "a.png") == rgb);
  const ImageSize size = png_size(dir.path() / "a.png");
  CHECK(size.width == 21);
  CHECK(size.height == 11);

  RgbaImage rgba(5, 4);
  Rng rng(6);
  for (auto& b : rgba.data) b = static_cast<std::uint8_t>(rng.below(256));
  write_png(dir.path() / "b.png", rgba);
  CHECK(read_png_rgba(dir.path() / "b.png") == rgba);

  CHECK_THROWS_AS(read_png_rgb(dir.path() / "missing.png"), IoError);
}

TEST_CASE("png bytes are deterministic") {
  testing::TempDir dir("pngdet");
  const RgbImage rgb = noise(33, 12, 7);
  write_png(dir.path() / "a.png", rgb);
  write_png(dir.path() / "b.png", rgb);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir.path() / "a.png") == slurp(dir.path() / "b.png"));
}
