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

#include "motionsynth/compositor.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "motionsynth/errors.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {
namespace fs = std::filesystem;

namespace {

// Premultiplied float copy of a sprite, sampled bilinearly with edge clamping
// inside the sprite rectangle and zero outside it.
class PremultipliedSprite {
 public:
  explicit PremultipliedSprite(const RgbaImage& src)
      : width_(src.width), height_(src.height),
        texels_(static_cast<std::size_t>(src.width) * src.height) {
    for (std::size_t i = 0; i < texels_.size(); ++i) {
      const std::uint8_t* p = src.data.data() + i * 4;
      const float a = p[3] / 255.0f;
      texels_[i] = {p[0] * a, p[1] * a, p[2] * a, a};
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  // (u, v) in source pixel units, pixel centers at i + 0.5.
  std::array<float, 4> sample(double u, double v) const {
    const double fu = std::clamp(u - 0.5, 0.0, width_ - 1.0);
    const double fv = std::clamp(v - 0.5, 0.0, height_ - 1.0);
    const int x0 = static_cast<int>(fu);
    const int y0 = static_cast<int>(fv);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const float wx = static_cast<float>(fu - x0);
    const float wy = static_cast<float>(fv - y0);
    const auto& a = texel(x0, y0);
    const auto& b = texel(x1, y0);
    const auto& c = texel(x0, y1);
    const auto& d = texel(x1, y1);
    std::array<float, 4> out;
    for (int k = 0; k < 4; ++k) {
      const float top = a[k] + (b[k] - a[k]) * wx;
      const float bot = c[k] + (d[k] - c[k]) * wx;
      out[k] = top + (bot - top) * wy;
    }
    return out;
  }

 private:
  const std::array<float, 4>& texel(int x, int y) const {
    return texels_[static_cast<std::size_t>(y) * width_ + x];
  }

  int width_;
  int height_;
  std::vector<std::array<float, 4>> texels_;
};

// Maps a point given relative to the placed object's center (y down) back to
// source sprite coordinates; nullopt outside the scaled object rectangle.
struct InverseMap {
  InverseMap(const PremultipliedSprite& src, int height, int width,
             double theta)
      : rot(rotation_matrix(theta)), half_w(width / 2.0), half_h(height / 2.0),
        out_w(width), out_h(height), sx(static_cast<double>(src.width()) / width),
        sy(static_cast<double>(src.height()) / height) {}

  std::optional<std::array<double, 2>> operator()(double rx, double ry) const {
    // For on-screen counter-clockwise rotation in y-down coordinates the
    // inverse map is the y-up rotation matrix itself.
    const double lx = rot(0, 0) * rx + rot(0, 1) * ry + half_w;
    const double ly = rot(1, 0) * rx + rot(1, 1) * ry + half_h;
    if (lx < 0.0 || ly < 0.0 || lx > out_w || ly > out_h) return std::nullopt;
    return std::array<double, 2>{lx * sx, ly * sy};
  }

  Eigen::Matrix2d rot;
  double half_w, half_h, out_w, out_h, sx, sy;
};

void check_size(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ArgumentError("target sprite size must be positive, got " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

std::string_view to_string(BackgroundMode mode) {
  switch (mode) {
    case BackgroundMode::kVideo:
      return "video";
    case BackgroundMode::kStaticFrame:
      return "static_frame";
    case BackgroundMode::kBlack:
      return "black";
  }
  return "black";
}

BackgroundMode parse_background_mode(std::string_view text) {
  if (text == "video") return BackgroundMode::kVideo;
  if (text == "static_frame") return BackgroundMode::kStaticFrame;
  if (text == "black") return BackgroundMode::kBlack;
  throw ConfigError("unknown background mode '" + std::string(text) + "'");
}

ImageSize rotated_bounds(int height, int width, double theta) {
  check_size(height, width);
  const Eigen::Matrix2d r = rotation_matrix(theta);
  const double c = std::abs(r(0, 0));
  const double s = std::abs(r(1, 0));
  // The epsilon keeps exact products like 64 * 1.0 from rounding up.
  return ImageSize{static_cast<int>(std::ceil(width * c + height * s - 1e-9)),
                   static_cast<int>(std::ceil(width * s + height * c - 1e-9))};
}

Sprite transform_sprite(const Sprite& sprite, int height, int width,
                        double theta) {
  check_size(height, width);
  const PremultipliedSprite src(sprite.rgba);
  const InverseMap map(src, height, width, theta);
  const ImageSize bounds = rotated_bounds(height, width, theta);
  Sprite out{sprite.name, RgbaImage(bounds.width, bounds.height)};
  const double cx = bounds.width / 2.0;
  const double cy = bounds.height / 2.0;
  for (int y = 0; y < bounds.height; ++y) {
    for (int x = 0; x < bounds.width; ++x) {
      const auto uv = map(x + 0.5 - cx, y + 0.5 - cy);
      if (!uv) continue;
      const auto p = src.sample((*uv)[0], (*uv)[1]);
      if (p[3] <= 0.0f) continue;
      std::uint8_t* dst = out.rgba.at(x, y);
      for (int k = 0; k < 3; ++k) {
        dst[k] = static_cast<std::uint8_t>(
            std::clamp(std::lround(p[k] / p[3]), 0L, 255L));
      }
      dst[3] = static_cast<std::uint8_t>(std::lround(p[3] * 255.0f));
    }
  }
  return out;
}

FrameSeq composite(const FrameSeq& background, const Sprite& sprite,
                   int height, int width, const PoseTrack& track) {
  check_size(height, width);
  if (static_cast<int>(track.size()) != background.size()) {
    throw ArgumentError("composite: track has " + std::to_string(track.size()) +
                        " poses for " + std::to_string(background.size()) +
                        " frames");
  }
  const PremultipliedSprite src(sprite.rgba);
  FrameSeq out = background;
  for (std::size_t i = 0; i < track.size(); ++i) {
    RgbImage& frame = out.frames[i];
    const Pose& pose = track[i];
    const InverseMap map(src, height, width, pose.angle);
    const ImageSize bounds = rotated_bounds(height, width, pose.angle);
    const int x_begin = std::max(0, static_cast<int>(std::floor(pose.x - bounds.width / 2.0)));
    const int x_end = std::min(frame.width, static_cast<int>(std::ceil(pose.x + bounds.width / 2.0)));
    const int y_begin = std::max(0, static_cast<int>(std::floor(pose.y - bounds.height / 2.0)));
    const int y_end = std::min(frame.height, static_cast<int>(std::ceil(pose.y + bounds.height / 2.0)));
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = x_begin; x < x_end; ++x) {
        const auto uv = map(x + 0.5 - pose.x, y + 0.5 - pose.y);
        if (!uv) continue;
        const auto p = src.sample((*uv)[0], (*uv)[1]);
        if (p[3] <= 0.0f) continue;
        std::uint8_t* dst = frame.at(x, y);
        const float keep = 1.0f - p[3];
        for (int k = 0; k < 3; ++k) {
          dst[k] = static_cast<std::uint8_t>(
              std::clamp(std::lround(p[k] + dst[k] * keep), 0L, 255L));
        }
      }
    }
  }
  return out;
}

FrameSeq make_background(BackgroundMode mode, const FrameSeq* source,
                         int num_frames, int width, int height) {
  if (num_frames < 1 || width <= 0 || height <= 0) {
    throw ArgumentError("make_background: degenerate output size");
  }
  FrameSeq out;
  out.mode = mode;
  if (mode == BackgroundMode::kBlack) {
    out.frames.assign(static_cast<std::size_t>(num_frames), RgbImage(width, height));
    return out;
  }
  if (source == nullptr || source->frames.empty()) {
    throw ArgumentError(std::string("background mode '") +
                        std::string(to_string(mode)) + "' needs a source clip");
  }
  auto fit = [&](const RgbImage& f) {
    if (f.width == width && f.height == height) return f;
    return resize_bilinear(center_crop(f, width, height), width, height);
  };
  if (mode == BackgroundMode::kStaticFrame) {
    out.frames.assign(static_cast<std::size_t>(num_frames), fit(source->frames.front()));
    return out;
  }
  const auto m = static_cast<long long>(source->frames.size());
  for (int i = 0; i < num_frames; ++i) {
    out.frames.push_back(fit(source->frames[static_cast<std::size_t>(i * m / num_frames)]));
  }
  return out;
}

FrameSeq load_clip(const fs::path& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& f : fs::directory_iterator(dir, ec)) {
    if (f.is_regular_file() && f.path().extension() == ".png") {
      files.push_back(f.path());
    }
  }
  if (ec) throw AssetError("cannot list clip " + dir.string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw AssetError("clip has no frames: " + dir.string());
  FrameSeq clip;
  clip.mode = BackgroundMode::kVideo;
  for (const auto& f : files) {
    try {
      clip.frames.push_back(read_png_rgb(f));
    } catch (const IoError& e) {
      throw AssetError(e.what());
    }
  }
  return clip;
}

std::vector<fs::path> list_clips(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw AssetError("clip directory not found: " + root.string());
  }
  std::vector<fs::path> clips;
  for (const auto& d : fs::directory_iterator(root)) {
    if (!d.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(d.path())) {
      if (f.is_regular_file() && f.path().extension() == ".png") {
        clips.push_back(d.path());
        break;
      }
    }
  }
  std::sort(clips.begin(), clips.end());
  return clips;
}

FrameSeq procedural_clip(std::uint64_t seed, int num_frames, int width,
                         int height) {
  Rng rng(seed);
  const double fx = rng.uniform(0.02, 0.08);
  const double fy = rng.uniform(0.02, 0.08);
  const double drift = rng.uniform(-2.0, 2.0);
  std::array<double, 3> phase{rng.uniform(0, 6.283), rng.uniform(0, 6.283),
                              rng.uniform(0, 6.283)};
  FrameSeq clip;
  clip.mode = BackgroundMode::kVideo;
  for (int t = 0; t < num_frames; ++t) {
    RgbImage f(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double v = std::sin((x + drift * t) * fx + phase[c]) *
                           std::cos(y * fy + phase[(c + 1) % 3]);
          f.at(x, y)[c] = static_cast<std::uint8_t>(std::lround(96 + 64 * v));
        }
      }
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

}  // namespace motionsynth
