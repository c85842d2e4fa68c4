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
#include <vector>

#include "json.hpp"

#include "motionsynth/analytics.hpp"
#include "motionsynth/caption.hpp"
#include "motionsynth/compositor.hpp"
#include "motionsynth/gateway.hpp"
#include "motionsynth/kinematics.hpp"
#include "motionsynth/paraphrase.hpp"
#include "motionsynth/probe.hpp"
#include "motionsynth/sprites.hpp"

namespace motionsynth {

std::string_view tool_version();

enum class ScreenMode { kAdvisory, kStrict };

struct ParaphraseSettings {
  bool enabled = false;
  // Empty URL selects the offline rewriter.
  EndpointConfig endpoint;
  std::string auth_header;  // "Name: value", or a bare Authorization value
  RetryPolicy retry;
  int max_in_flight = 4;
  ScreenMode screen = ScreenMode::kAdvisory;
  std::string lexicon;  // direction lexicon file; empty uses the built-in one

  bool offline() const { return endpoint.url.empty(); }
};

struct PipelineSettings {
  int count = 0;
  int workers = 1;
  BackgroundMode background = BackgroundMode::kBlack;
  std::string sprite_dir;      // empty: procedural sprites
  int procedural_sprites = 20;
  std::string background_dir;  // clip folders; empty: procedural clips
  int procedural_clips = 8;
  double failure_cap = 0.1;    // tolerated fraction of failed videos
};

struct PipelineConfig {
  GenConfig gen;
  ThresholdConfig thresholds;
  PipelineSettings pipeline;
  ParaphraseSettings paraphrase;
  ProbeHyperparams probe;

  void validate() const;
};

// Sections "generation", "thresholds", "pipeline", "paraphrase" and "probe";
// absent keys keep their defaults, unknown keys are a ConfigError.
PipelineConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

// Sets one dotted key ("generation.num_frames") from its text form.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

// MOTIONSYNTH_ENDPOINT_URL, MOTIONSYNTH_AUTH_HEADER ("Name: value" or a bare
// Authorization value), MOTIONSYNTH_MODEL and MOTIONSYNTH_OFFLINE.
void apply_env_overrides(PipelineConfig& cfg);

// Digest of every setting that influences manifest content. Endpoint URL and
// credentials are excluded.
std::string config_digest(const nlohmann::ordered_json& gen, const nlohmann::ordered_json& thresholds,
                          const nlohmann::ordered_json& paraphrase, std::string_view background_mode);

// Background clips for the non-black modes: clip folders on disk or the
// procedural pool.
class ClipSource {
 public:
  ClipSource() = default;
  static ClipSource from_settings(const PipelineSettings& s);

  std::size_t size() const;
  std::string label(std::size_t index) const;
  FrameSeq load(std::size_t index, const GenConfig& gen) const;
  std::optional<std::string> caption(std::size_t index) const;
  // Resolves a label written by label(); throws AssetError when unknown.
  static FrameSeq load_label(const std::string& label, const GenConfig& gen);

 private:
  std::vector<std::filesystem::path> dirs_;
  int procedural_ = 0;
};

struct SynthesizedPair {
  std::uint64_t seed = 0;
  MotionSpec spec;
  PoseTrack track;
  MotionCaption caption;
  std::string background_clip;
  std::optional<std::string> source_caption;
  FrameSeq background;
  FrameSeq frames;
};

// Video `index` of a run: its own child stream of the run seed drives motion
// sampling and clip choice.
SynthesizedPair synthesize_pair(const PipelineConfig& cfg, const SpriteSet& sprites,
                                const ClipSource& clips, std::uint64_t index);

// Sprites from sprite_dir, or the procedural set when it is empty.
SpriteSet sprites_for(const PipelineSettings& s);

std::string video_id(std::uint64_t index);
std::filesystem::path frame_path(const std::filesystem::path& video_dir, int frame);

struct GenerateSummary {
  std::size_t requested = 0;
  std::size_t written = 0;
  std::size_t failed = 0;
  std::size_t paraphrases_accepted = 0;
  std::size_t paraphrases_rejected = 0;
  std::filesystem::path manifest;
};

// Writes frames under out_dir/videos/<id>/ and then out_dir/manifest.jsonl.
// Per-video failures go to out_dir/failures.jsonl. Throws AssetError before
// any output for unusable sprites or clips, and Error(kPartialFailure) when
// failures exceed the cap, in which case no manifest is written.
// `endpoint` overrides the configured paraphrase endpoint (tests).
GenerateSummary generate_dataset(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                                 CompletionEndpoint* endpoint = nullptr);

struct RecordCheck {
  std::string video_id;
  std::vector<std::string> problems;  // "caption-mismatch: ...", "missing-frames: ..."

  bool ok() const { return problems.empty(); }
};

struct VerifyReport {
  std::vector<std::string> header_problems;
  std::vector<RecordCheck> records;

  std::size_t failed() const;
  bool ok() const { return header_problems.empty() && failed() == 0; }
};

// Throws IoError when the manifest cannot be read.
VerifyReport verify_manifest(const std::filesystem::path& manifest_path);
nlohmann::ordered_json to_json(const VerifyReport& report);

struct Manifest {
  nlohmann::ordered_json header;
  std::vector<nlohmann::ordered_json> records;
};

Manifest read_manifest(const std::filesystem::path& path);

// Caption statistics of a manifest (template captions tagged through their
// slots, paraphrases through the lexicon) or of a plain text file with one
// caption per line.
nlohmann::ordered_json stats_for_manifest(const std::filesystem::path& manifest_path,
                                          const TagLexicon& lexicon);
nlohmann::ordered_json stats_for_captions(const std::filesystem::path& captions_path,
                                          const TagLexicon& lexicon);

// Probe examples from a manifest: frames are read back from disk and the
// background is rebuilt from the recorded clip.
std::vector<ProbeExample> probe_examples(const std::filesystem::path& manifest_path,
                                         int mask_threshold);

// Probe examples straight from synthesize_pair, videos [first, first + count)
// of the configured run, without touching disk.
std::vector<ProbeExample> synthesize_probe_examples(const PipelineConfig& cfg, std::uint64_t first,
                                                    std::size_t count);

// Trains on the first train_count records and evaluates on the next
// heldout_count. Writes the loss curve CSV when the path is non-empty.
ProbeReport probe_manifest(const PipelineConfig& cfg, const std::filesystem::path& manifest_path,
                           const std::filesystem::path& curve_csv, bool controls = true);

// Contact sheet of every frame of one record, left to right, top to bottom.
void write_preview(const std::filesystem::path& manifest_path, const std::string& id,
                   const std::filesystem::path& out_png, int columns = 0);

}  // namespace motionsynth
