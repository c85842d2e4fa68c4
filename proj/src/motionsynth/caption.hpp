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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "motionsynth/kinematics.hpp"

namespace motionsynth {

// Qualifier boundaries. Every comparison is strict, so a value sitting on a
// boundary falls into the unqualified middle band.
struct ThresholdConfig {
  double size_small_max = 64.0 * 64.0;  // px^2
  double size_big_min = 96.0 * 96.0;    // px^2
  double speed_slow_max = 3.0;          // px/frame
  double speed_quick_min = 7.0;         // px/frame
  double dist_little_max = 0.10;        // fraction of frame width
  double dist_lot_min = 0.30;           // fraction of frame width
  double rot_slight_max = 8.0;          // degrees
  double rot_signif_min = 16.0;         // degrees
  double diag_low = 30.0;               // degrees, on |theta| mod 90
  double diag_high = 60.0;

  void validate() const;
};

nlohmann::ordered_json to_json(const ThresholdConfig& t);
ThresholdConfig threshold_config_from_json(const nlohmann::ordered_json& j,
                                           ThresholdConfig defaults = {});

enum class SizeWord : std::uint8_t { kNone, kBig, kSmall };
enum class Position : std::uint8_t {
  kTopLeft, kTop, kTopRight,
  kLeft, kCenter, kRight,
  kBottomLeft, kBottom, kBottomRight,
};
enum class Speed : std::uint8_t { kNone, kQuickly, kSlowly };
enum class Direction : std::uint8_t { kNone, kUpwards, kRight, kDownwards, kLeft };
enum class Distance : std::uint8_t { kNone, kALot, kALittle };
enum class RotDirection : std::uint8_t { kNone, kLeft, kRight };
enum class RotAmount : std::uint8_t { kNone, kSlightly, kSignificantly };

std::string_view to_string(SizeWord w);
std::string_view to_string(Position w);
std::string_view to_string(Speed w);
std::string_view to_string(Direction w);
std::string_view to_string(Distance w);
std::string_view to_string(RotDirection w);
std::string_view to_string(RotAmount w);

// One keyframe-to-keyframe stage. No direction means no translation clause;
// no rotation direction means no rotation clause.
struct SegmentSlots {
  Speed speed = Speed::kNone;
  bool diagonal = false;
  Direction direction = Direction::kNone;
  Distance distance = Distance::kNone;
  RotDirection rot_direction = RotDirection::kNone;
  RotAmount rot_amount = RotAmount::kNone;

  bool translates() const { return direction != Direction::kNone; }
  bool rotates() const { return rot_direction != RotDirection::kNone; }
  bool still() const { return !translates() && !rotates(); }
  bool operator==(const SegmentSlots&) const = default;
};

struct CaptionSlots {
  SizeWord size = SizeWord::kNone;
  std::string object;
  Position position = Position::kCenter;
  std::vector<SegmentSlots> segments;  // K - 1 entries

  bool operator==(const CaptionSlots&) const = default;
};

struct MotionCaption {
  std::string rendered;
  CaptionSlots slots;
};

enum class SlotKind : std::uint8_t {
  kArticle, kSize, kObject, kIn, kThe, kPosition,
  kFirst, kComma, kBefore, kIt,
  kMoves, kSpeed, kDiagonal, kDirection, kDistance,
  kWhile, kRotating, kRotDirection, kRotAmount,
  kStays, kStill,
};

// A rendered token with its grammatical role. Object names and "a lot" /
// "a little" are single tokens even though they contain spaces.
struct TaggedToken {
  std::string text;
  SlotKind kind;
  int segment = -1;  // -1 for appearance tokens
};

SizeWord size_word(int height, int width, const ThresholdConfig& t);
// Cell of the 3x3 grid holding (x, y); boundaries go to the lower index.
Position grid_position(double x, double y, int frame_width, int frame_height);

// Appearance slots and phrase ("A small car in the left").
std::string describe_appearance(const MotionSpec& spec, const GenConfig& gen,
                                const ThresholdConfig& t,
                                CaptionSlots* slots = nullptr);

// Translation slots between track frames `from` and `to`. Speed is the mean
// per-frame center displacement, distance the straight-line displacement,
// direction the nearest cardinal of the screen-space heading (0 degrees is
// rightwards, 90 is upwards; ties go to the vertical word). Returns the
// phrase, empty for zero displacement.
std::string describe_translation(const PoseTrack& track, int from, int to,
                                 int frame_width, const ThresholdConfig& t,
                                 SegmentSlots* slots = nullptr);

// Rotation slots from the angle change over the segment; positive change is
// counter-clockwise and reads as "left". Empty phrase for no change.
std::string describe_rotation(const PoseTrack& track, int from, int to,
                              const ThresholdConfig& t,
                              SegmentSlots* slots = nullptr);

// Full caption: appearance, then one stage per keyframe pair. With two
// keyframes the stage follows directly; with more, stages read
// "first <stage>, before it <stage>, ...". A motionless stage between moving
// ones reads "stays still"; a fully motionless video keeps only appearance.
MotionCaption assemble_caption(const MotionSpec& spec, const PoseTrack& track,
                               const GenConfig& gen, const ThresholdConfig& t);

std::vector<TaggedToken> render_tokens(const CaptionSlots& slots);
std::string render_caption(const CaptionSlots& slots);

// Inverse of render_caption. When the caption has no motion clause the slot
// record gets `num_segments` still segments. Throws ArgumentError on text
// outside the grammar.
CaptionSlots parse_caption(std::string_view text, int num_segments = 1);

struct CaptionSpaceQuery {
  int num_keyframes = 2;
  bool appearance = true;
  bool translation = true;
  bool rotation = true;
};

// Number of distinct non-empty strings the grammar renders for one object,
// found by rendering every slot combination and de-duplicating the strings by
// 64-bit hash. Throws ArgumentError beyond num_keyframes = 3.
std::uint64_t count_caption_space(const CaptionSpaceQuery& q);

// Product formula for the same count.
std::uint64_t caption_space_closed_form(const CaptionSpaceQuery& q);

}  // namespace motionsynth
