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

#include "motionsynth/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace {

constexpr double kEps = 1e-9;

template <typename T>
void read_optional(const nlohmann::ordered_json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void GenConfig::validate() const {
  std::ostringstream err;
  if (frame_width <= 0 || frame_height <= 0) {
    err << "frame size must be positive";
  } else if (num_keyframes < 2) {
    err << "num_keyframes must be >= 2 (got " << num_keyframes << ")";
  } else if (num_frames < num_keyframes) {
    err << "num_frames (" << num_frames << ") must be >= num_keyframes ("
        << num_keyframes << ")";
  } else if (min_obj_side < 1 || min_obj_side > max_obj_side) {
    err << "object side range [" << min_obj_side << ", " << max_obj_side
        << "] is empty";
  } else if (max_obj_side >= std::min(frame_width, frame_height)) {
    err << "max_obj_side (" << max_obj_side
        << ") must be smaller than the frame";
  } else if (!(delta_max >= 0.0) || !std::isfinite(delta_max)) {
    err << "delta_max must be finite and >= 0";
  } else if (!(theta_range >= 0.0) || !std::isfinite(theta_range)) {
    err << "theta_range must be finite and >= 0";
  }
  if (!err.str().empty()) throw ConfigError(err.str());
}

MotionSpec sample_motion(const GenConfig& cfg,
                         std::span<const SpriteInfo> sprites, Rng& rng) {
  if (sprites.empty()) throw AssetError("sprite set is empty");
  cfg.validate();

  MotionSpec spec;
  spec.object_index = static_cast<int>(rng.below(sprites.size()));
  const SpriteInfo& sprite = sprites[spec.object_index];
  if (sprite.width <= 0 || sprite.height <= 0) {
    throw AssetError("sprite '" + sprite.name + "' has no pixels");
  }
  spec.object_name = sprite.name;

  // The longest side takes the sampled length; the other keeps the aspect.
  const int longest = static_cast<int>(
      rng.between(cfg.min_obj_side, cfg.max_obj_side));
  if (sprite.height >= sprite.width) {
    spec.height = longest;
    spec.width = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(longest) *
                                        sprite.width / sprite.height)));
  } else {
    spec.width = longest;
    spec.height = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(longest) *
                                        sprite.height / sprite.width)));
  }

  // K-2 interior indices drawn without replacement from {1, ..., N-2}.
  const int n = cfg.num_frames;
  std::vector<int> interior(static_cast<std::size_t>(std::max(0, n - 2)));
  std::iota(interior.begin(), interior.end(), 1);
  const int picks = cfg.num_keyframes - 2;
  for (int i = 0; i < picks; ++i) {
    const auto j = i + static_cast<int>(rng.below(interior.size() - i));
    std::swap(interior[i], interior[j]);
  }
  std::vector<int> frames{0};
  frames.insert(frames.end(), interior.begin(), interior.begin() + picks);
  std::sort(frames.begin() + 1, frames.end());
  frames.push_back(n - 1);

  const double x_lo = spec.width / 2.0;
  const double x_hi = cfg.frame_width - spec.width / 2.0;
  const double y_lo = spec.height / 2.0;
  const double y_hi = cfg.frame_height - spec.height / 2.0;

  Keyframe first;
  first.frame = 0;
  first.x = rng.uniform(x_lo, x_hi);
  first.y = rng.uniform(y_lo, y_hi);
  spec.keyframes.push_back(first);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Keyframe& prev = spec.keyframes.back();
    const double reach = cfg.delta_max * (frames[i] - prev.frame);
    Keyframe next;
    next.frame = frames[i];
    next.x = rng.uniform(std::max(x_lo, prev.x - reach),
                         std::min(x_hi, prev.x + reach));
    next.y = rng.uniform(std::max(y_lo, prev.y - reach),
                         std::min(y_hi, prev.y + reach));
    spec.keyframes.push_back(next);
  }
  for (Keyframe& k : spec.keyframes) {
    k.angle = rng.uniform(-cfg.theta_range, cfg.theta_range);
  }
  return spec;
}

PoseTrack interpolate(const MotionSpec& spec, int num_frames) {
  if (spec.keyframes.size() < 2 || spec.num_frames() != num_frames) {
    throw ArgumentError("interpolate: spec covers " +
                        std::to_string(spec.num_frames()) + " frames, asked " +
                        std::to_string(num_frames));
  }
  PoseTrack track(static_cast<std::size_t>(num_frames));
  for (std::size_t s = 0; s + 1 < spec.keyframes.size(); ++s) {
    const Keyframe& a = spec.keyframes[s];
    const Keyframe& b = spec.keyframes[s + 1];
    const double span = b.frame - a.frame;
    for (int f = a.frame; f <= b.frame; ++f) {
      // (1-t)a + tb reproduces both endpoints bit-for-bit.
      const double t = (f - a.frame) / span;
      track[f] = Pose{(1.0 - t) * a.x + t * b.x, (1.0 - t) * a.y + t * b.y,
                      (1.0 - t) * a.angle + t * b.angle};
    }
  }
  return track;
}

Eigen::Matrix2d rotation_matrix(double degrees) {
  double c;
  double s;
  const double turns = degrees / 90.0;
  if (std::isfinite(degrees) && turns == std::floor(turns)) {
    static constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
    const auto q = static_cast<int>(std::fmod(std::fmod(turns, 4.0) + 4.0, 4.0));
    c = kCos[q];
    s = kSin[q];
  } else {
    const double rad = degrees * M_PI / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

std::vector<std::string> check_motion(const MotionSpec& spec,
                                      const GenConfig& cfg) {
  std::vector<std::string> out;
  const auto& ks = spec.keyframes;
  if (ks.size() < 2) {
    out.push_back("fewer than two keyframes");
    return out;
  }
  if (ks.front().frame != 0) out.push_back("first keyframe is not frame 0");
  if (ks.back().frame != cfg.num_frames - 1) {
    out.push_back("last keyframe is not frame N-1");
  }
  const double x_lo = spec.width / 2.0;
  const double x_hi = cfg.frame_width - spec.width / 2.0;
  const double y_lo = spec.height / 2.0;
  const double y_hi = cfg.frame_height - spec.height / 2.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const Keyframe& k = ks[i];
    const std::string at = "keyframe " + std::to_string(i) + ": ";
    if (k.x < x_lo - kEps || k.x > x_hi + kEps || k.y < y_lo - kEps ||
        k.y > y_hi + kEps) {
      out.push_back(at + "center outside containment box");
    }
    if (std::abs(k.angle) > cfg.theta_range + kEps) {
      out.push_back(at + "angle outside theta range");
    }
    if (i == 0) continue;
    const Keyframe& p = ks[i - 1];
    if (k.frame <= p.frame) out.push_back(at + "index not increasing");
    const double reach = cfg.delta_max * (k.frame - p.frame);
    if (std::abs(k.x - p.x) > reach + kEps ||
        std::abs(k.y - p.y) > reach + kEps) {
      out.push_back(at + "displacement exceeds delta bound");
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["frame_width"] = cfg.frame_width;
  j["frame_height"] = cfg.frame_height;
  j["num_frames"] = cfg.num_frames;
  j["num_keyframes"] = cfg.num_keyframes;
  j["min_obj_side"] = cfg.min_obj_side;
  j["max_obj_side"] = cfg.max_obj_side;
  j["delta_max"] = cfg.delta_max;
  j["theta_range"] = cfg.theta_range;
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

GenConfig gen_config_from_json(const nlohmann::ordered_json& j,
                               GenConfig cfg) {
  if (!j.is_object()) throw ConfigError("generation config must be an object");
  read_optional(j, "frame_width", cfg.frame_width);
  read_optional(j, "frame_height", cfg.frame_height);
  read_optional(j, "num_frames", cfg.num_frames);
  read_optional(j, "num_keyframes", cfg.num_keyframes);
  read_optional(j, "min_obj_side", cfg.min_obj_side);
  read_optional(j, "max_obj_side", cfg.max_obj_side);
  read_optional(j, "delta_max", cfg.delta_max);
  read_optional(j, "theta_range", cfg.theta_range);
  read_optional(j, "rng_seed", cfg.rng_seed);
  return cfg;
}

nlohmann::ordered_json to_json(const MotionSpec& spec) {
  nlohmann::ordered_json j;
  j["object_name"] = spec.object_name;
  j["object_index"] = spec.object_index;
  j["height"] = spec.height;
  j["width"] = spec.width;
  auto& ks = j["keyframes"] = nlohmann::ordered_json::array();
  for (const Keyframe& k : spec.keyframes) {
    nlohmann::ordered_json kj;
    kj["frame"] = k.frame;
    kj["x"] = k.x;
    kj["y"] = k.y;
    kj["angle"] = k.angle;
    ks.push_back(std::move(kj));
  }
  return j;
}

MotionSpec motion_spec_from_json(const nlohmann::ordered_json& j) {
  try {
    MotionSpec spec;
    spec.object_name = j.at("object_name").get<std::string>();
    spec.object_index = j.at("object_index").get<int>();
    spec.height = j.at("height").get<int>();
    spec.width = j.at("width").get<int>();
    for (const auto& kj : j.at("keyframes")) {
      spec.keyframes.push_back(Keyframe{kj.at("frame").get<int>(),
                                        kj.at("x").get<double>(),
                                        kj.at("y").get<double>(),
                                        kj.at("angle").get<double>()});
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed motion spec: ") + e.what());
  }
}

}  // namespace motionsynth
