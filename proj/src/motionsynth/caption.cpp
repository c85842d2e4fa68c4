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

#include "motionsynth/caption.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace {

constexpr std::array<std::string_view, 9> kPositionWords = {
    "top-left", "top", "top-right", "left", "center",
    "right", "bottom-left", "bottom", "bottom-right"};

template <typename T>
void read_optional(const nlohmann::ordered_json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void push(std::vector<TaggedToken>& out, std::string_view text, SlotKind kind,
          int segment) {
  out.push_back(TaggedToken{std::string(text), kind, segment});
}

void push_segment(std::vector<TaggedToken>& out, const SegmentSlots& s,
                  int index) {
  if (s.still()) {
    push(out, "stays", SlotKind::kStays, index);
    push(out, "still", SlotKind::kStill, index);
    return;
  }
  if (s.translates()) {
    push(out, "moves", SlotKind::kMoves, index);
    if (s.speed != Speed::kNone) push(out, to_string(s.speed), SlotKind::kSpeed, index);
    if (s.diagonal) push(out, "diagonally", SlotKind::kDiagonal, index);
    push(out, to_string(s.direction), SlotKind::kDirection, index);
    if (s.distance != Distance::kNone) {
      push(out, to_string(s.distance), SlotKind::kDistance, index);
    }
  }
  if (s.rotates()) {
    push(out, "while", SlotKind::kWhile, index);
    push(out, "rotating", SlotKind::kRotating, index);
    push(out, to_string(s.rot_direction), SlotKind::kRotDirection, index);
    if (s.rot_amount != RotAmount::kNone) {
      push(out, to_string(s.rot_amount), SlotKind::kRotAmount, index);
    }
  }
}

std::vector<TaggedToken> tokens_for(const CaptionSlots& slots,
                                    bool with_appearance) {
  std::vector<TaggedToken> out;
  if (with_appearance) {
    push(out, "A", SlotKind::kArticle, -1);
    if (slots.size != SizeWord::kNone) push(out, to_string(slots.size), SlotKind::kSize, -1);
    push(out, slots.object, SlotKind::kObject, -1);
    push(out, "in", SlotKind::kIn, -1);
    push(out, "the", SlotKind::kThe, -1);
    push(out, to_string(slots.position), SlotKind::kPosition, -1);
  }
  const bool all_still = std::all_of(slots.segments.begin(), slots.segments.end(),
                                     [](const SegmentSlots& s) { return s.still(); });
  if (all_still) return out;
  if (slots.segments.size() == 1) {
    push_segment(out, slots.segments.front(), 0);
    return out;
  }
  for (std::size_t i = 0; i < slots.segments.size(); ++i) {
    const int seg = static_cast<int>(i);
    if (i == 0) {
      push(out, "first", SlotKind::kFirst, seg);
    } else {
      push(out, ",", SlotKind::kComma, seg);
      push(out, "before", SlotKind::kBefore, seg);
      push(out, "it", SlotKind::kIt, seg);
    }
    push_segment(out, slots.segments[i], seg);
  }
  return out;
}

std::string join_tokens(const std::vector<TaggedToken>& tokens) {
  std::string out;
  for (const TaggedToken& t : tokens) {
    if (!out.empty() && t.kind != SlotKind::kComma) out.push_back(' ');
    out += t.text;
  }
  return out;
}

// Word cursor over a caption; commas become separate words.
class Cursor {
 public:
  explicit Cursor(std::string_view text) {
    std::string word;
    auto flush = [&] {
      if (!word.empty()) words_.push_back(std::move(word));
      word.clear();
    };
    for (char c : text) {
      if (c == ' ') {
        flush();
      } else if (c == ',') {
        flush();
        words_.emplace_back(",");
      } else {
        word.push_back(c);
      }
    }
    flush();
  }

  bool done() const { return pos_ >= words_.size(); }
  std::string_view peek(std::size_t ahead = 0) const {
    return pos_ + ahead < words_.size() ? std::string_view(words_[pos_ + ahead])
                                        : std::string_view();
  }
  bool accept(std::string_view w) {
    if (peek() != w) return false;
    ++pos_;
    return true;
  }
  bool accept2(std::string_view a, std::string_view b) {
    if (peek() != a || peek(1) != b) return false;
    pos_ += 2;
    return true;
  }
  void expect(std::string_view w) {
    if (!accept(w)) fail("expected '" + std::string(w) + "'");
  }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  const std::vector<std::string>& words() const { return words_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ArgumentError("caption parse error at word " + std::to_string(pos_) +
                        ": " + what);
  }

 private:
  std::vector<std::string> words_;
  std::size_t pos_ = 0;
};

std::optional<Position> position_from(std::string_view w) {
  for (std::size_t i = 0; i < kPositionWords.size(); ++i) {
    if (kPositionWords[i] == w) return static_cast<Position>(i);
  }
  return std::nullopt;
}

SegmentSlots parse_segment(Cursor& c) {
  SegmentSlots s;
  if (c.accept2("stays", "still")) return s;
  bool any = false;
  if (c.accept("moves")) {
    any = true;
    if (c.accept("quickly")) s.speed = Speed::kQuickly;
    else if (c.accept("slowly")) s.speed = Speed::kSlowly;
    s.diagonal = c.accept("diagonally");
    if (c.accept("upwards")) s.direction = Direction::kUpwards;
    else if (c.accept("right")) s.direction = Direction::kRight;
    else if (c.accept("downwards")) s.direction = Direction::kDownwards;
    else if (c.accept("left")) s.direction = Direction::kLeft;
    else c.fail("expected a direction");
    if (c.accept2("a", "lot")) s.distance = Distance::kALot;
    else if (c.accept2("a", "little")) s.distance = Distance::kALittle;
  }
  if (c.accept2("while", "rotating")) {
    any = true;
    if (c.accept("left")) s.rot_direction = RotDirection::kLeft;
    else if (c.accept("right")) s.rot_direction = RotDirection::kRight;
    else c.fail("expected a rotation direction");
    if (c.accept("slightly")) s.rot_amount = RotAmount::kSlightly;
    else if (c.accept("significantly")) s.rot_amount = RotAmount::kSignificantly;
  }
  if (!any) c.fail("expected a motion clause");
  return s;
}

}  // namespace

void ThresholdConfig::validate() const {
  auto bad = [](const char* what) { throw ConfigError(what); };
  if (!(size_small_max < size_big_min)) bad("size_small_max must be < size_big_min");
  if (!(speed_slow_max < speed_quick_min)) bad("speed_slow_max must be < speed_quick_min");
  if (!(dist_little_max < dist_lot_min)) bad("dist_little_max must be < dist_lot_min");
  if (!(rot_slight_max < rot_signif_min)) bad("rot_slight_max must be < rot_signif_min");
  if (!(diag_low < diag_high) || diag_low < 0 || diag_high > 90) {
    bad("diagonal band must satisfy 0 <= diag_low < diag_high <= 90");
  }
}

nlohmann::ordered_json to_json(const ThresholdConfig& t) {
  nlohmann::ordered_json j;
  j["size_small_max"] = t.size_small_max;
  j["size_big_min"] = t.size_big_min;
  j["speed_slow_max"] = t.speed_slow_max;
  j["speed_quick_min"] = t.speed_quick_min;
  j["dist_little_max"] = t.dist_little_max;
  j["dist_lot_min"] = t.dist_lot_min;
  j["rot_slight_max"] = t.rot_slight_max;
  j["rot_signif_min"] = t.rot_signif_min;
  j["diag_low"] = t.diag_low;
  j["diag_high"] = t.diag_high;
  return j;
}

ThresholdConfig threshold_config_from_json(const nlohmann::ordered_json& j,
                                           ThresholdConfig t) {
  if (!j.is_object()) throw ConfigError("thresholds must be an object");
  read_optional(j, "size_small_max", t.size_small_max);
  read_optional(j, "size_big_min", t.size_big_min);
  read_optional(j, "speed_slow_max", t.speed_slow_max);
  read_optional(j, "speed_quick_min", t.speed_quick_min);
  read_optional(j, "dist_little_max", t.dist_little_max);
  read_optional(j, "dist_lot_min", t.dist_lot_min);
  read_optional(j, "rot_slight_max", t.rot_slight_max);
  read_optional(j, "rot_signif_min", t.rot_signif_min);
  read_optional(j, "diag_low", t.diag_low);
  read_optional(j, "diag_high", t.diag_high);
  return t;
}

std::string_view to_string(SizeWord w) {
  switch (w) {
    case SizeWord::kBig: return "big";
    case SizeWord::kSmall: return "small";
    default: return "";
  }
}

std::string_view to_string(Position w) {
  return kPositionWords[static_cast<std::size_t>(w)];
}

std::string_view to_string(Speed w) {
  switch (w) {
    case Speed::kQuickly: return "quickly";
    case Speed::kSlowly: return "slowly";
    default: return "";
  }
}

std::string_view to_string(Direction w) {
  switch (w) {
    case Direction::kUpwards: return "upwards";
    case Direction::kRight: return "right";
    case Direction::kDownwards: return "downwards";
    case Direction::kLeft: return "left";
    default: return "";
  }
}

std::string_view to_string(Distance w) {
  switch (w) {
    case Distance::kALot: return "a lot";
    case Distance::kALittle: return "a little";
    default: return "";
  }
}

std::string_view to_string(RotDirection w) {
  switch (w) {
    case RotDirection::kLeft: return "left";
    case RotDirection::kRight: return "right";
    default: return "";
  }
}

std::string_view to_string(RotAmount w) {
  switch (w) {
    case RotAmount::kSlightly: return "slightly";
    case RotAmount::kSignificantly: return "significantly";
    default: return "";
  }
}

SizeWord size_word(int height, int width, const ThresholdConfig& t) {
  const double area = static_cast<double>(height) * width;
  if (area < t.size_small_max) return SizeWord::kSmall;
  if (area > t.size_big_min) return SizeWord::kBig;
  return SizeWord::kNone;
}

Position grid_position(double x, double y, int frame_width, int frame_height) {
  auto cell = [](double v, int extent) {
    if (v * 3 <= extent) return 0;
    if (v * 3 <= 2.0 * extent) return 1;
    return 2;
  };
  return static_cast<Position>(cell(y, frame_height) * 3 + cell(x, frame_width));
}

std::string describe_appearance(const MotionSpec& spec, const GenConfig& gen,
                                const ThresholdConfig& t, CaptionSlots* slots) {
  if (spec.keyframes.empty()) throw ArgumentError("motion spec has no keyframes");
  CaptionSlots s;
  s.size = size_word(spec.height, spec.width, t);
  s.object = spec.object_name;
  s.position = grid_position(spec.keyframes.front().x, spec.keyframes.front().y,
                             gen.frame_width, gen.frame_height);
  const std::string phrase = join_tokens(tokens_for(s, true));
  if (slots != nullptr) {
    slots->size = s.size;
    slots->object = s.object;
    slots->position = s.position;
  }
  return phrase;
}

std::string describe_translation(const PoseTrack& track, int from, int to,
                                 int frame_width, const ThresholdConfig& t,
                                 SegmentSlots* slots) {
  if (from < 0 || to <= from || to >= static_cast<int>(track.size())) {
    throw ArgumentError("describe_translation: bad segment");
  }
  SegmentSlots s;
  const double dx = track[to].x - track[from].x;
  const double dy = track[to].y - track[from].y;
  const double total = std::hypot(dx, dy);
  if (total > 0.0) {
    double path = 0.0;
    for (int f = from; f < to; ++f) {
      path += std::hypot(track[f + 1].x - track[f].x, track[f + 1].y - track[f].y);
    }
    // Interpolated frames can accumulate rounding; on a straight segment the
    // mean step equals total / frames exactly, which is what boundary
    // comparisons should see.
    double speed = path / (to - from);
    const double straight = total / (to - from);
    if (std::abs(speed - straight) <= 1e-9 * std::max(1.0, straight)) speed = straight;
    if (speed > t.speed_quick_min) s.speed = Speed::kQuickly;
    else if (speed < t.speed_slow_max) s.speed = Speed::kSlowly;

    const double heading = std::atan2(-dy, dx) * 180.0 / M_PI;
    const double folded = std::fmod(std::abs(heading), 90.0);
    s.diagonal = folded > t.diag_low && folded < t.diag_high;
    if (std::abs(dy) >= std::abs(dx)) {
      s.direction = dy < 0 ? Direction::kUpwards : Direction::kDownwards;
    } else {
      s.direction = dx > 0 ? Direction::kRight : Direction::kLeft;
    }
    if (total > t.dist_lot_min * frame_width) s.distance = Distance::kALot;
    else if (total < t.dist_little_max * frame_width) s.distance = Distance::kALittle;
  }
  if (slots != nullptr) {
    slots->speed = s.speed;
    slots->diagonal = s.diagonal;
    slots->direction = s.direction;
    slots->distance = s.distance;
  }
  if (!s.translates()) return {};
  std::vector<TaggedToken> tokens;
  push_segment(tokens, s, 0);
  return join_tokens(tokens);
}

std::string describe_rotation(const PoseTrack& track, int from, int to,
                              const ThresholdConfig& t, SegmentSlots* slots) {
  if (from < 0 || to <= from || to >= static_cast<int>(track.size())) {
    throw ArgumentError("describe_rotation: bad segment");
  }
  SegmentSlots s;
  const double delta = track[to].angle - track[from].angle;
  if (delta != 0.0) {
    s.rot_direction = delta > 0 ? RotDirection::kLeft : RotDirection::kRight;
    const double mag = std::abs(delta);
    if (mag < t.rot_slight_max) s.rot_amount = RotAmount::kSlightly;
    else if (mag > t.rot_signif_min) s.rot_amount = RotAmount::kSignificantly;
  }
  if (slots != nullptr) {
    slots->rot_direction = s.rot_direction;
    slots->rot_amount = s.rot_amount;
  }
  if (!s.rotates()) return {};
  std::vector<TaggedToken> tokens;
  push_segment(tokens, s, 0);
  return join_tokens(tokens);
}

MotionCaption assemble_caption(const MotionSpec& spec, const PoseTrack& track,
                               const GenConfig& gen, const ThresholdConfig& t) {
  if (spec.keyframes.size() < 2 ||
      static_cast<int>(track.size()) != spec.num_frames()) {
    throw ArgumentError("assemble_caption: track does not match spec");
  }
  MotionCaption caption;
  CaptionSlots& slots = caption.slots;
  describe_appearance(spec, gen, t, &slots);
  // Appearance describes the pixels too: the start cell comes from the track.
  slots.position = grid_position(track.front().x, track.front().y,
                                 gen.frame_width, gen.frame_height);
  for (std::size_t i = 0; i + 1 < spec.keyframes.size(); ++i) {
    SegmentSlots seg;
    const int a = spec.keyframes[i].frame;
    const int b = spec.keyframes[i + 1].frame;
    describe_translation(track, a, b, gen.frame_width, t, &seg);
    describe_rotation(track, a, b, t, &seg);
    slots.segments.push_back(seg);
  }
  caption.rendered = render_caption(slots);
  return caption;
}

std::vector<TaggedToken> render_tokens(const CaptionSlots& slots) {
  return tokens_for(slots, true);
}

std::string render_caption(const CaptionSlots& slots) {
  return join_tokens(tokens_for(slots, true));
}

CaptionSlots parse_caption(std::string_view text, int num_segments) {
  Cursor c(text);
  CaptionSlots slots;
  c.expect("A");
  // A leading size word belongs to the object only if no object would be
  // left, which valid object names rule out.
  if (c.accept("big")) slots.size = SizeWord::kBig;
  else if (c.accept("small")) slots.size = SizeWord::kSmall;

  const auto& words = c.words();
  std::size_t in_at = c.pos();
  while (in_at + 2 < words.size() &&
         !(words[in_at] == "in" && words[in_at + 1] == "the" &&
           position_from(words[in_at + 2]))) {
    ++in_at;
  }
  if (in_at == c.pos() || in_at + 2 >= words.size()) c.fail("expected '<object> in the <position>'");
  for (std::size_t i = c.pos(); i < in_at; ++i) {
    if (!slots.object.empty()) slots.object.push_back(' ');
    slots.object += words[i];
  }
  c.seek(in_at + 2);
  slots.position = *position_from(c.peek());
  c.seek(in_at + 3);

  if (c.done()) {
    slots.segments.assign(static_cast<std::size_t>(std::max(1, num_segments)), SegmentSlots{});
    return slots;
  }
  if (c.accept("first")) {
    slots.segments.push_back(parse_segment(c));
    while (!c.done()) {
      c.expect(",");
      c.expect("before");
      c.expect("it");
      slots.segments.push_back(parse_segment(c));
    }
    if (slots.segments.size() < 2) c.fail("'first' needs a following stage");
  } else {
    const SegmentSlots s = parse_segment(c);
    if (s.still()) c.fail("single-stage caption cannot be still");
    slots.segments.push_back(s);
  }
  if (!c.done()) c.fail("trailing words");
  return slots;
}

namespace {

std::vector<SegmentSlots> segment_options(const CaptionSpaceQuery& q) {
  std::vector<SegmentSlots> translations{SegmentSlots{}};
  if (q.translation) {
    for (auto speed : {Speed::kNone, Speed::kQuickly, Speed::kSlowly}) {
      for (bool diag : {false, true}) {
        for (auto dir : {Direction::kUpwards, Direction::kRight,
                         Direction::kDownwards, Direction::kLeft}) {
          for (auto dist : {Distance::kNone, Distance::kALot, Distance::kALittle}) {
            SegmentSlots s;
            s.speed = speed;
            s.diagonal = diag;
            s.direction = dir;
            s.distance = dist;
            translations.push_back(s);
          }
        }
      }
    }
  }
  std::vector<SegmentSlots> out;
  for (const SegmentSlots& tr : translations) {
    out.push_back(tr);
    if (!q.rotation) continue;
    for (auto dir : {RotDirection::kLeft, RotDirection::kRight}) {
      for (auto amount : {RotAmount::kNone, RotAmount::kSlightly, RotAmount::kSignificantly}) {
        SegmentSlots s = tr;
        s.rot_direction = dir;
        s.rot_amount = amount;
        out.push_back(s);
      }
    }
  }
  return out;
}

}  // namespace

std::uint64_t count_caption_space(const CaptionSpaceQuery& q) {
  if (q.num_keyframes < 2 || q.num_keyframes > 3) {
    throw ArgumentError("count_caption_space enumerates 2 or 3 keyframes");
  }
  std::vector<CaptionSlots> appearances;
  if (q.appearance) {
    for (auto size : {SizeWord::kNone, SizeWord::kBig, SizeWord::kSmall}) {
      for (int p = 0; p < 9; ++p) {
        CaptionSlots s;
        s.size = size;
        s.object = "object";
        s.position = static_cast<Position>(p);
        appearances.push_back(s);
      }
    }
  } else {
    appearances.emplace_back();
  }
  const std::vector<SegmentSlots> options = segment_options(q);
  const int segments = q.num_keyframes - 1;

  std::vector<std::uint64_t> seen;
  CaptionSlots slots;
  std::vector<std::size_t> idx(static_cast<std::size_t>(segments), 0);
  std::hash<std::string> hasher;
  for (const CaptionSlots& app : appearances) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      slots = app;
      slots.segments.clear();
      for (std::size_t k : idx) slots.segments.push_back(options[k]);
      const std::string text = join_tokens(tokens_for(slots, q.appearance));
      if (!text.empty()) seen.push_back(hasher(text));
      std::size_t d = 0;
      while (d < idx.size() && ++idx[d] == options.size()) idx[d++] = 0;
      if (d == idx.size()) break;
    }
  }
  std::sort(seen.begin(), seen.end());
  return static_cast<std::uint64_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

std::uint64_t caption_space_closed_form(const CaptionSpaceQuery& q) {
  const std::uint64_t appearance = q.appearance ? 3 * 9 : 1;
  const std::uint64_t translation = q.translation ? 1 + 3 * 2 * 4 * 3 : 1;
  const std::uint64_t rotation = q.rotation ? 1 + 2 * 3 : 1;
  const std::uint64_t per_segment = translation * rotation;
  std::uint64_t sequences = 1;
  for (int i = 1; i < q.num_keyframes; ++i) sequences *= per_segment;
  return appearance * sequences - (q.appearance ? 0 : 1);
}

}  // namespace motionsynth
