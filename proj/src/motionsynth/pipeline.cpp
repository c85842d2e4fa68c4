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

#include "motionsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "motionsynth/analytics.hpp"
#include "motionsynth/digest.hpp"
#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kSections[] = {"generation", "thresholds", "pipeline", "paraphrase", "probe"};

template <typename T>
void read_optional(const ordered_json& j, const char* key, T& value, const char* section) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " has the wrong type");
  }
}

std::string_view to_string(ScreenMode m) { return m == ScreenMode::kStrict ? "strict" : "advisory"; }

ScreenMode parse_screen_mode(const std::string& s) {
  if (s == "advisory") return ScreenMode::kAdvisory;
  if (s == "strict") return ScreenMode::kStrict;
  throw ConfigError("paraphrase.screen_mode must be 'advisory' or 'strict', got '" + s + "'");
}

std::string_view to_string(RequestShape s) { return s == RequestShape::kChat ? "chat" : "completion"; }

RequestShape parse_request_shape(const std::string& s) {
  if (s == "completion") return RequestShape::kCompletion;
  if (s == "chat") return RequestShape::kChat;
  throw ConfigError("paraphrase.request_shape must be 'completion' or 'chat', got '" + s + "'");
}

ordered_json pipeline_json(const PipelineSettings& p) {
  ordered_json j;
  j["count"] = p.count;
  j["workers"] = p.workers;
  j["background_mode"] = std::string(to_string(p.background));
  j["sprite_dir"] = p.sprite_dir;
  j["procedural_sprites"] = p.procedural_sprites;
  j["background_dir"] = p.background_dir;
  j["procedural_clips"] = p.procedural_clips;
  j["failure_cap"] = p.failure_cap;
  return j;
}

PipelineSettings pipeline_from_json(const ordered_json& j, PipelineSettings p) {
  const char* s = "pipeline";
  read_optional(j, "count", p.count, s);
  read_optional(j, "workers", p.workers, s);
  std::string mode(to_string(p.background));
  read_optional(j, "background_mode", mode, s);
  p.background = parse_background_mode(mode);
  read_optional(j, "sprite_dir", p.sprite_dir, s);
  read_optional(j, "procedural_sprites", p.procedural_sprites, s);
  read_optional(j, "background_dir", p.background_dir, s);
  read_optional(j, "procedural_clips", p.procedural_clips, s);
  read_optional(j, "failure_cap", p.failure_cap, s);
  return p;
}

ordered_json paraphrase_json(const ParaphraseSettings& p) {
  ordered_json j;
  j["enabled"] = p.enabled;
  j["endpoint_url"] = p.endpoint.url;
  j["auth_header"] = p.auth_header;
  j["model"] = p.endpoint.model;
  j["request_shape"] = std::string(to_string(p.endpoint.shape));
  j["max_tokens"] = p.endpoint.max_tokens;
  j["temperature"] = p.endpoint.temperature;
  j["timeout_ms"] = p.endpoint.timeout_ms;
  j["retry_attempts"] = p.retry.max_attempts;
  j["retry_initial_ms"] = p.retry.initial_delay_ms;
  j["retry_multiplier"] = p.retry.multiplier;
  j["retry_max_ms"] = p.retry.max_delay_ms;
  j["max_in_flight"] = p.max_in_flight;
  j["screen_mode"] = std::string(to_string(p.screen));
  j["lexicon"] = p.lexicon;
  return j;
}

ParaphraseSettings paraphrase_from_json(const ordered_json& j, ParaphraseSettings p) {
  const char* s = "paraphrase";
  read_optional(j, "enabled", p.enabled, s);
  read_optional(j, "endpoint_url", p.endpoint.url, s);
  read_optional(j, "auth_header", p.auth_header, s);
  read_optional(j, "model", p.endpoint.model, s);
  std::string shape(to_string(p.endpoint.shape));
  read_optional(j, "request_shape", shape, s);
  p.endpoint.shape = parse_request_shape(shape);
  read_optional(j, "max_tokens", p.endpoint.max_tokens, s);
  read_optional(j, "temperature", p.endpoint.temperature, s);
  read_optional(j, "timeout_ms", p.endpoint.timeout_ms, s);
  read_optional(j, "retry_attempts", p.retry.max_attempts, s);
  read_optional(j, "retry_initial_ms", p.retry.initial_delay_ms, s);
  read_optional(j, "retry_multiplier", p.retry.multiplier, s);
  read_optional(j, "retry_max_ms", p.retry.max_delay_ms, s);
  read_optional(j, "max_in_flight", p.max_in_flight, s);
  std::string screen(to_string(p.screen));
  read_optional(j, "screen_mode", screen, s);
  p.screen = parse_screen_mode(screen);
  read_optional(j, "lexicon", p.lexicon, s);
  return p;
}

// What the manifest header records about paraphrasing.
ordered_json paraphrase_header(const ParaphraseSettings& p) {
  ordered_json j;
  j["enabled"] = p.enabled;
  j["backend"] = p.offline() ? "offline" : "endpoint";
  j["model"] = p.offline() ? std::string(kOfflineModelId) : p.endpoint.model;
  if (!p.offline()) {
    j["request_shape"] = std::string(to_string(p.endpoint.shape));
    j["max_tokens"] = p.endpoint.max_tokens;
    j["temperature"] = p.endpoint.temperature;
  }
  j["screen_mode"] = std::string(to_string(p.screen));
  return j;
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> auth_headers(const std::string& auth) {
  std::map<std::string, std::string> out;
  if (auth.empty()) return out;
  const auto colon = auth.find(':');
  if (colon == std::string::npos) {
    out["Authorization"] = auth;
  } else {
    out[trim(auth.substr(0, colon))] = trim(auth.substr(colon + 1));
  }
  return out;
}

struct Failure {
  std::uint64_t index = 0;
  std::string stage;
  std::string message;
};

ordered_json failure_json(const Failure& f) {
  ordered_json j;
  j["video_id"] = video_id(f.index);
  j["stage"] = f.stage;
  j["error"] = f.message;
  return j;
}

std::string verdict_text(const ScreenVerdict& v) {
  return v.accepted() ? "accepted" : "rejected:" + v.reason;
}

}  // namespace

std::string_view tool_version() { return MOTIONSYNTH_VERSION; }

void PipelineConfig::validate() const {
  gen.validate();
  thresholds.validate();
  probe.validate();
  if (pipeline.count < 0) throw ConfigError("pipeline.count must be non-negative");
  if (pipeline.workers < 1) throw ConfigError("pipeline.workers must be at least 1");
  if (pipeline.procedural_sprites < 1) throw ConfigError("pipeline.procedural_sprites must be at least 1");
  if (pipeline.procedural_clips < 1) throw ConfigError("pipeline.procedural_clips must be at least 1");
  if (!(pipeline.failure_cap >= 0.0 && pipeline.failure_cap <= 1.0)) {
    throw ConfigError("pipeline.failure_cap must be in [0, 1]");
  }
  if (paraphrase.max_in_flight < 1) throw ConfigError("paraphrase.max_in_flight must be at least 1");
  if (paraphrase.retry.max_attempts < 1) throw ConfigError("paraphrase.retry_attempts must be at least 1");
  if (paraphrase.endpoint.max_tokens < 1) throw ConfigError("paraphrase.max_tokens must be at least 1");
}

ordered_json to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["generation"] = to_json(cfg.gen);
  j["thresholds"] = to_json(cfg.thresholds);
  j["pipeline"] = pipeline_json(cfg.pipeline);
  j["paraphrase"] = paraphrase_json(cfg.paraphrase);
  j["probe"] = to_json(cfg.probe);
  return j;
}

PipelineConfig config_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const ordered_json defaults = to_json(PipelineConfig{});
  for (const auto& [section, body] : j.items()) {
    if (!defaults.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!defaults[section].contains(key)) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
    }
  }
  auto section = [&j](const char* name) { return j.contains(name) ? j.at(name) : ordered_json::object(); };
  PipelineConfig cfg;
  cfg.gen = gen_config_from_json(section("generation"));
  cfg.thresholds = threshold_config_from_json(section("thresholds"));
  cfg.pipeline = pipeline_from_json(section("pipeline"), {});
  cfg.paraphrase = paraphrase_from_json(section("paraphrase"), {});
  cfg.probe = probe_hyperparams_from_json(section("probe"));
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("config key '" + key + "' must be <section>.<name>");
  const std::string section = key.substr(0, dot);
  const std::string name = key.substr(dot + 1);
  ordered_json j = to_json(cfg);
  if (!j.contains(section) || !j[section].contains(name)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  ordered_json& slot = j[section][name];
  try {
    std::size_t used = 0;
    if (slot.is_boolean()) {
      if (value == "true" || value == "1") slot = true;
      else if (value == "false" || value == "0") slot = false;
      else throw ConfigError("");
    } else if (slot.is_number_unsigned()) {
      if (!value.empty() && value.front() == '-') throw ConfigError("");
      slot = std::stoull(value, &used, 0);
    } else if (slot.is_number_integer()) {
      slot = std::stoll(value, &used, 10);
    } else if (slot.is_number_float()) {
      slot = std::stod(value, &used);
    } else {
      slot = value;
      used = value.size();
    }
    if (!slot.is_boolean() && used != value.size()) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  cfg = config_from_json(j);
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* url = std::getenv("MOTIONSYNTH_ENDPOINT_URL")) cfg.paraphrase.endpoint.url = url;
  if (const char* auth = std::getenv("MOTIONSYNTH_AUTH_HEADER")) cfg.paraphrase.auth_header = auth;
  if (const char* model = std::getenv("MOTIONSYNTH_MODEL")) cfg.paraphrase.endpoint.model = model;
  if (const char* off = std::getenv("MOTIONSYNTH_OFFLINE")) {
    const std::string v = off;
    if (!v.empty() && v != "0" && v != "false") cfg.paraphrase.endpoint.url.clear();
  }
}

std::string config_digest(const ordered_json& gen, const ordered_json& thresholds,
                          const ordered_json& paraphrase, std::string_view background_mode) {
  ordered_json j;
  j["gen_config"] = gen;
  j["thresholds"] = thresholds;
  j["paraphrase"] = paraphrase;
  j["background_mode"] = std::string(background_mode);
  return sha256_hex(j.dump());
}

ClipSource ClipSource::from_settings(const PipelineSettings& s) {
  ClipSource src;
  if (s.background == BackgroundMode::kBlack) return src;
  if (s.background_dir.empty()) {
    src.procedural_ = s.procedural_clips;
  } else {
    src.dirs_ = list_clips(s.background_dir);
    if (src.dirs_.empty()) throw AssetError("no clips under " + s.background_dir);
  }
  return src;
}

std::size_t ClipSource::size() const {
  return dirs_.empty() ? static_cast<std::size_t>(procedural_) : dirs_.size();
}

std::string ClipSource::label(std::size_t index) const {
  if (dirs_.empty()) return "procedural:" + std::to_string(index);
  return dirs_.at(index).string();
}

FrameSeq ClipSource::load(std::size_t index, const GenConfig& gen) const {
  return load_label(label(index), gen);
}

FrameSeq ClipSource::load_label(const std::string& label, const GenConfig& gen) {
  constexpr std::string_view kProcedural = "procedural:";
  if (label.rfind(kProcedural, 0) == 0) {
    const std::string number = label.substr(kProcedural.size());
    if (number.empty() || number.find_first_not_of("0123456789") != std::string::npos) {
      throw AssetError("bad procedural clip label '" + label + "'");
    }
    return procedural_clip(std::stoull(number), gen.num_frames, gen.frame_width, gen.frame_height);
  }
  return load_clip(label);
}

std::optional<std::string> ClipSource::caption(std::size_t index) const {
  if (dirs_.empty()) return std::nullopt;
  std::ifstream in(dirs_.at(index) / "caption.txt");
  if (!in) return std::nullopt;
  std::ostringstream text;
  text << in.rdbuf();
  return trim(text.str());
}

SpriteSet sprites_for(const PipelineSettings& s) {
  if (s.sprite_dir.empty()) return procedural_sprites(s.procedural_sprites, 0);
  return load_sprite_dir(s.sprite_dir);
}

SynthesizedPair synthesize_pair(const PipelineConfig& cfg, const SpriteSet& sprites,
                                const ClipSource& clips, std::uint64_t index) {
  Rng rng = Rng(cfg.gen.rng_seed).child(index);
  SynthesizedPair pair;
  pair.seed = rng.seed();
  pair.spec = sample_motion(cfg.gen, sprites.infos(), rng);
  pair.track = interpolate(pair.spec, cfg.gen.num_frames);
  const BackgroundMode mode = cfg.pipeline.background;
  if (mode == BackgroundMode::kBlack) {
    pair.background = make_background(mode, nullptr, cfg.gen.num_frames, cfg.gen.frame_width,
                                      cfg.gen.frame_height);
  } else {
    if (clips.size() == 0) throw AssetError("no background clips available");
    const auto k = static_cast<std::size_t>(rng.below(clips.size()));
    const FrameSeq source = clips.load(k, cfg.gen);
    pair.background_clip = clips.label(k);
    pair.source_caption = clips.caption(k);
    pair.background = make_background(mode, &source, cfg.gen.num_frames, cfg.gen.frame_width,
                                      cfg.gen.frame_height);
  }
  pair.frames = composite(pair.background, sprites[static_cast<std::size_t>(pair.spec.object_index)],
                          pair.spec.height, pair.spec.width, pair.track);
  pair.caption = assemble_caption(pair.spec, pair.track, cfg.gen, cfg.thresholds);
  return pair;
}

std::string video_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(index));
  return buf;
}

fs::path frame_path(const fs::path& video_dir, int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", frame);
  return video_dir / buf;
}

GenerateSummary generate_dataset(const PipelineConfig& cfg, const fs::path& out_dir,
                                 CompletionEndpoint* endpoint) {
  cfg.validate();
  const SpriteSet sprites = sprites_for(cfg.pipeline);
  const ClipSource clips = ClipSource::from_settings(cfg.pipeline);
  std::optional<DirectionLexicon> custom_lexicon;
  if (!cfg.paraphrase.lexicon.empty()) custom_lexicon = DirectionLexicon::load(cfg.paraphrase.lexicon);
  std::unique_ptr<CompletionEndpoint> owned_endpoint;
  if (cfg.paraphrase.enabled && endpoint == nullptr && !cfg.paraphrase.offline()) {
    EndpointConfig ec = cfg.paraphrase.endpoint;
    for (const auto& [k, v] : auth_headers(cfg.paraphrase.auth_header)) ec.headers[k] = v;
    owned_endpoint = make_http_endpoint(ec);
    endpoint = owned_endpoint.get();
  }

  std::error_code ec;
  fs::create_directories(out_dir / "videos", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "videos").string() + ": " + ec.message());
  GenerateSummary summary;
  summary.manifest = out_dir / "manifest.jsonl";
  fs::remove(summary.manifest, ec);
  fs::remove(out_dir / "failures.jsonl", ec);

  const auto count = static_cast<std::size_t>(cfg.pipeline.count);
  summary.requested = count;
  const auto cap = static_cast<std::size_t>(std::floor(cfg.pipeline.failure_cap * static_cast<double>(count)));
  std::vector<std::optional<ordered_json>> records(count);
  std::vector<MotionCaption> captions(count);
  std::vector<Failure> failures;
  std::mutex failures_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto fail = [&](std::uint64_t index, std::string stage, std::string message) {
    std::lock_guard<std::mutex> lock(failures_mutex);
    failures.push_back({index, std::move(stage), std::move(message)});
    if (failures.size() > cap) abort = true;
  };

  auto work = [&] {
    for (std::size_t i = next++; i < count && !abort; i = next++) {
      try {
        const SynthesizedPair pair = synthesize_pair(cfg, sprites, clips, i);
        const std::string id = video_id(i);
        const fs::path dir = out_dir / "videos" / id;
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (int f = 0; f < pair.frames.size(); ++f) {
          write_png(frame_path(dir, f), pair.frames.frames[static_cast<std::size_t>(f)]);
        }
        ordered_json r;
        r["video_id"] = id;
        r["frames_path"] = "videos/" + id;
        r["background_mode"] = std::string(to_string(cfg.pipeline.background));
        r["background_clip"] = pair.background_clip.empty() ? ordered_json(nullptr)
                                                             : ordered_json(pair.background_clip);
        r["motion_spec"] = to_json(pair.spec);
        r["template_caption"] = pair.caption.rendered;
        r["paraphrase"] = nullptr;
        r["paraphrase_verdict"] = "disabled";
        r["seed"] = pair.seed;
        if (pair.source_caption) r["source_caption"] = *pair.source_caption;
        captions[i] = pair.caption;
        records[i] = std::move(r);
      } catch (const std::exception& e) {
        fail(i, "synthesis", e.what());
      }
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.pipeline.workers, static_cast<int>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  auto write_failures = [&] {
    std::sort(failures.begin(), failures.end(),
              [](const Failure& a, const Failure& b) { return a.index < b.index; });
    std::string text;
    for (const Failure& f : failures) text += failure_json(f).dump() + "\n";
    write_text_atomically(out_dir / "failures.jsonl", text);
  };
  auto over_cap = [&] {
    write_failures();
    return Error(ErrorKind::kPartialFailure,
                 std::to_string(failures.size()) + " of " + std::to_string(count) +
                     " videos failed, above the cap of " + std::to_string(cap) +
                     "; see failures.jsonl");
  };
  if (abort) throw over_cap();

  if (cfg.paraphrase.enabled) {
    std::vector<std::size_t> live;
    std::vector<MotionCaption> batch;
    for (std::size_t i = 0; i < count; ++i) {
      if (records[i]) {
        live.push_back(i);
        batch.push_back(captions[i]);
      }
    }
    ParaphraseOptions options;
    options.retry = cfg.paraphrase.retry;
    options.lexicon = custom_lexicon ? &*custom_lexicon : nullptr;
    const std::vector<ParaphraseResult> results =
        paraphrase_batch(batch, endpoint, options, cfg.paraphrase.max_in_flight);
    for (std::size_t k = 0; k < live.size(); ++k) {
      const std::size_t i = live[k];
      const ParaphraseResult& res = results[k];
      ordered_json& r = *records[i];
      r["paraphrase_verdict"] = verdict_text(res.verdict);
      if (res.verdict.accepted()) {
        r["paraphrase"] = res.text;
        ++summary.paraphrases_accepted;
        continue;
      }
      ++summary.paraphrases_rejected;
      if (cfg.paraphrase.screen == ScreenMode::kStrict) {
        fs::remove_all(out_dir / "videos" / video_id(i), ec);
        records[i].reset();
        fail(i, "paraphrase", res.verdict.reason);
      } else {
        r["paraphrase"] = captions[i].rendered;
      }
    }
    if (abort) throw over_cap();
  }

  write_failures();
  ordered_json header;
  header["kind"] = "header";
  header["tool_version"] = std::string(tool_version());
  header["gen_config"] = to_json(cfg.gen);
  header["thresholds"] = to_json(cfg.thresholds);
  header["paraphrase"] = paraphrase_header(cfg.paraphrase);
  header["background_mode"] = std::string(to_string(cfg.pipeline.background));
  header["sprite_digest"] = sprites.digest();
  header["config_digest"] = config_digest(header["gen_config"], header["thresholds"],
                                          header["paraphrase"], header["background_mode"].get<std::string>());
  header["requested"] = count;
  header["failures"] = failures.size();
  std::string text = header.dump() + "\n";
  for (const auto& r : records) {
    if (!r) continue;
    text += r->dump() + "\n";
    ++summary.written;
  }
  write_text_atomically(summary.manifest, text);
  summary.failed = failures.size();
  return summary;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  Manifest m;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("manifest line " + std::to_string(number) + " is not JSON: " + e.what());
    }
    if (number == 1 || m.header.is_null()) {
      m.header = std::move(j);
    } else {
      m.records.push_back(std::move(j));
    }
  }
  if (m.header.is_null()) throw IoError("manifest " + path.string() + " is empty");
  return m;
}

std::size_t VerifyReport::failed() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [](const RecordCheck& r) { return !r.ok(); }));
}

VerifyReport verify_manifest(const fs::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  VerifyReport report;
  const ordered_json& h = m.header;
  GenConfig gen;
  ThresholdConfig thresholds;
  std::string mode;
  try {
    if (h.value("kind", "") != "header") report.header_problems.push_back("header: first line is not a header");
    gen = gen_config_from_json(h.at("gen_config"));
    thresholds = threshold_config_from_json(h.at("thresholds"));
    mode = h.at("background_mode").get<std::string>();
    const std::string digest = config_digest(h.at("gen_config"), h.at("thresholds"), h.at("paraphrase"), mode);
    if (digest != h.at("config_digest").get<std::string>()) {
      report.header_problems.push_back("config-digest-mismatch: header configs do not match config_digest");
    }
    const auto requested = h.at("requested").get<std::size_t>();
    const auto failures = h.at("failures").get<std::size_t>();
    if (requested < failures || m.records.size() != requested - failures) {
      report.header_problems.push_back("record-count-mismatch: " + std::to_string(m.records.size()) +
                                       " records for " + std::to_string(requested) + " requested and " +
                                       std::to_string(failures) + " failures");
    }
  } catch (const std::exception& e) {
    report.header_problems.push_back(std::string("malformed-header: ") + e.what());
    return report;
  }

  for (const ordered_json& r : m.records) {
    RecordCheck check;
    check.video_id = r.value("video_id", std::string("?"));
    try {
      const MotionSpec spec = motion_spec_from_json(r.at("motion_spec"));
      const auto violations = check_motion(spec, gen);
      for (const std::string& v : violations) check.problems.push_back("spec-invalid: " + v);
      if (violations.empty()) {
        const PoseTrack track = interpolate(spec, gen.num_frames);
        const std::string expected = assemble_caption(spec, track, gen, thresholds).rendered;
        const std::string found = r.at("template_caption").get<std::string>();
        if (expected != found) {
          check.problems.push_back("caption-mismatch: expected '" + expected + "', found '" + found + "'");
        }
      }
      if (r.at("background_mode").get<std::string>() != mode) {
        check.problems.push_back("background-mode-mismatch: record says " +
                                 r.at("background_mode").get<std::string>());
      }
      const std::string verdict = r.at("paraphrase_verdict").get<std::string>();
      if (verdict == "accepted" && !r.at("paraphrase").is_string()) {
        check.problems.push_back("paraphrase-missing: accepted verdict without text");
      }
      const fs::path dir = root / r.at("frames_path").get<std::string>();
      if (!fs::is_directory(dir)) {
        check.problems.push_back("missing-frames: directory " + dir.string() + " not found");
      } else {
        int missing = 0;
        for (int f = 0; f < gen.num_frames; ++f) {
          const fs::path file = frame_path(dir, f);
          if (!fs::is_regular_file(file)) {
            ++missing;
            continue;
          }
          const ImageSize size = png_size(file);
          if (size.width != gen.frame_width || size.height != gen.frame_height) {
            check.problems.push_back("bad-dimensions: " + file.filename().string() + " is " +
                                     std::to_string(size.width) + "x" + std::to_string(size.height));
          }
        }
        if (missing > 0) {
          check.problems.push_back("missing-frames: " + std::to_string(missing) + " of " +
                                   std::to_string(gen.num_frames) + " frames absent");
        }
      }
    } catch (const std::exception& e) {
      check.problems.push_back(std::string("malformed-record: ") + e.what());
    }
    report.records.push_back(std::move(check));
  }
  return report;
}

ordered_json to_json(const VerifyReport& report) {
  ordered_json j;
  j["ok"] = report.ok();
  j["records"] = report.records.size();
  j["failed"] = report.failed();
  j["header_problems"] = report.header_problems;
  auto& failures = j["failures"] = ordered_json::array();
  for (const RecordCheck& r : report.records) {
    if (r.ok()) continue;
    ordered_json f;
    f["video_id"] = r.video_id;
    f["problems"] = r.problems;
    failures.push_back(std::move(f));
  }
  return j;
}

ordered_json stats_for_manifest(const fs::path& manifest_path, const TagLexicon& lexicon) {
  const Manifest m = read_manifest(manifest_path);
  int segments = 1;
  try {
    segments = std::max(1, gen_config_from_json(m.header.at("gen_config")).num_keyframes - 1);
  } catch (const std::exception& e) {
    throw IoError(std::string("manifest header: ") + e.what());
  }
  std::vector<CaptionSlots> slots;
  std::vector<std::string> templates;
  std::vector<std::string> paraphrases;
  for (const ordered_json& r : m.records) {
    const std::string text = r.at("template_caption").get<std::string>();
    templates.push_back(text);
    slots.push_back(parse_caption(text, segments));
    if (r.contains("paraphrase") && r.at("paraphrase").is_string()) {
      paraphrases.push_back(r.at("paraphrase").get<std::string>());
    }
  }
  ordered_json j;
  j["source"] = "manifest";
  j["captions"] = templates.size();
  if (templates.empty()) {
    j["template"] = nullptr;
  } else {
    std::vector<std::set<std::string>> sets;
    for (const CaptionSlots& s : slots) sets.push_back(noun_set(s));
    ordered_json t;
    t["pos_from_slots"] = to_json(pos_profile(slots));
    t["pos_from_lexicon"] = to_json(pos_profile(templates, lexicon));
    t["noun_uniqueness"] = set_uniqueness(sets);
    j["template"] = std::move(t);
  }
  if (paraphrases.empty()) {
    j["paraphrase"] = nullptr;
  } else {
    ordered_json p;
    p["pos_from_lexicon"] = to_json(pos_profile(paraphrases, lexicon));
    p["noun_uniqueness"] = noun_uniqueness(paraphrases, lexicon);
    j["paraphrase"] = std::move(p);
  }
  return j;
}

ordered_json stats_for_captions(const fs::path& captions_path, const TagLexicon& lexicon) {
  std::ifstream in(captions_path);
  if (!in) throw IoError("cannot read captions " + captions_path.string());
  std::vector<std::string> captions;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) captions.push_back(line);
  }
  ordered_json j;
  j["source"] = "captions";
  j["captions"] = captions.size();
  j["pos_from_lexicon"] = to_json(pos_profile(captions, lexicon));
  j["noun_uniqueness"] = noun_uniqueness(captions, lexicon);
  return j;
}

std::vector<ProbeExample> probe_examples(const fs::path& manifest_path, int mask_threshold) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  GenConfig gen;
  BackgroundMode mode;
  try {
    gen = gen_config_from_json(m.header.at("gen_config"));
    mode = parse_background_mode(m.header.at("background_mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest header: ") + e.what());
  }
  std::vector<ProbeExample> out(m.records.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto work = [&] {
    for (std::size_t i = next++; i < m.records.size(); i = next++) {
      try {
        const ordered_json& r = m.records[i];
        const fs::path dir = root / r.at("frames_path").get<std::string>();
        FrameSeq frames;
        frames.mode = mode;
        for (int f = 0; f < gen.num_frames; ++f) frames.frames.push_back(read_png_rgb(frame_path(dir, f)));
        FrameSeq background;
        if (mode == BackgroundMode::kBlack) {
          background = make_background(mode, nullptr, gen.num_frames, gen.frame_width, gen.frame_height);
        } else {
          const FrameSeq source = ClipSource::load_label(r.at("background_clip").get<std::string>(), gen);
          background = make_background(mode, &source, gen.num_frames, gen.frame_width, gen.frame_height);
        }
        ProbeExample& e = out[i];
        e.video = extract_video_feature(frames, background, mask_threshold);
        e.caption = r.at("template_caption").get<std::string>();
        e.slots = parse_caption(e.caption, std::max(1, gen.num_keyframes - 1));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  const int workers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw AssetError("probe: cannot read record: " + first_error);
  return out;
}

std::vector<ProbeExample> synthesize_probe_examples(const PipelineConfig& cfg, std::uint64_t first,
                                                    std::size_t count) {
  cfg.validate();
  const SpriteSet sprites = sprites_for(cfg.pipeline);
  const ClipSource clips = ClipSource::from_settings(cfg.pipeline);
  std::vector<ProbeExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const SynthesizedPair pair = synthesize_pair(cfg, sprites, clips, first + i);
    out.push_back(ProbeExample{extract_video_feature(pair.frames, pair.background, cfg.probe.mask_threshold),
                               pair.caption.slots, pair.caption.rendered});
  }
  return out;
}

ProbeReport probe_manifest(const PipelineConfig& cfg, const fs::path& manifest_path,
                           const fs::path& curve_csv, bool controls) {
  cfg.probe.validate();
  std::vector<ProbeExample> examples = probe_examples(manifest_path, cfg.probe.mask_threshold);
  const std::size_t n = examples.size();
  if (n < 12) throw ArgumentError("probe needs at least 12 records (2 training, 10 held-out)");
  std::size_t train = static_cast<std::size_t>(cfg.probe.train_count);
  std::size_t held = static_cast<std::size_t>(cfg.probe.heldout_count);
  if (train + held > n) {
    held = std::max<std::size_t>(10, n * 2 / 7);
    train = n - held;
  }
  const std::vector<ProbeExample> train_set(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(train));
  const std::vector<ProbeExample> held_set(examples.begin() + static_cast<std::ptrdiff_t>(train),
                                           examples.begin() + static_cast<std::ptrdiff_t>(train + held));
  ProbeReport report = run_probe(train_set, held_set, cfg.probe, controls);
  if (!curve_csv.empty()) write_text_atomically(curve_csv, loss_curve_csv(report.curve));
  return report;
}

void write_preview(const fs::path& manifest_path, const std::string& id, const fs::path& out_png,
                   int columns) {
  const Manifest m = read_manifest(manifest_path);
  const ordered_json* record = nullptr;
  for (const ordered_json& r : m.records) {
    if (r.value("video_id", std::string()) == id) record = &r;
  }
  if (record == nullptr) throw ArgumentError("no record with video_id " + id);
  const fs::path dir = manifest_path.parent_path() / record->at("frames_path").get<std::string>();
  std::vector<RgbImage> frames;
  for (int f = 0; fs::is_regular_file(frame_path(dir, f)); ++f) frames.push_back(read_png_rgb(frame_path(dir, f)));
  if (frames.empty()) throw AssetError("no frames under " + dir.string());
  const int n = static_cast<int>(frames.size());
  const int cols = columns > 0 ? std::min(columns, n) : static_cast<int>(std::ceil(std::sqrt(n)));
  const int rows = (n + cols - 1) / cols;
  const int w = frames.front().width;
  const int h = frames.front().height;
  RgbImage sheet(cols * w, rows * h);
  for (int k = 0; k < n; ++k) {
    const RgbImage& f = frames[static_cast<std::size_t>(k)];
    if (f.width != w || f.height != h) throw AssetError("frames of " + id + " differ in size");
    const int ox = (k % cols) * w;
    const int oy = (k / cols) * h;
    for (int y = 0; y < h; ++y) std::copy_n(f.at(0, y), w * 3, sheet.at(ox, oy + y));
  }
  write_png(out_png, sheet);
}

}  // namespace motionsynth
