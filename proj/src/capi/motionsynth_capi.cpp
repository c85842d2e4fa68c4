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

#include "motionsynth/motionsynth.h"

#include <filesystem>
#include <string>

#include "motionsynth/analytics.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/paraphrase.hpp"
#include "motionsynth/pipeline.hpp"

struct ms_config {
  motionsynth::PipelineConfig cfg;
};

struct ms_text {
  std::string value;
};

namespace {

thread_local std::string g_last_error;

ms_status status_of(motionsynth::ErrorKind kind) {
  switch (kind) {
    case motionsynth::ErrorKind::kConfig: return MS_ERR_CONFIG;
    case motionsynth::ErrorKind::kAsset: return MS_ERR_ASSET;
    case motionsynth::ErrorKind::kPartialFailure: return MS_ERR_PARTIAL;
    case motionsynth::ErrorKind::kArgument: return MS_ERR_ARGUMENT;
    case motionsynth::ErrorKind::kIo: return MS_ERR_IO;
    case motionsynth::ErrorKind::kGateway: return MS_ERR_GATEWAY;
    case motionsynth::ErrorKind::kNumeric: return MS_ERR_NUMERIC;
  }
  return MS_ERR_INTERNAL;
}

template <typename F>
ms_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const motionsynth::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MS_ERR_INTERNAL;
  }
}

ms_status fail(ms_status status, const char* message) {
  g_last_error = message;
  return status;
}

ms_status emit(ms_text** out, std::string value) {
  if (out != nullptr) *out = new ms_text{std::move(value)};
  return MS_OK;
}

const motionsynth::TagLexicon& lexicon_or_builtin(const char* path,
                                                  std::optional<motionsynth::TagLexicon>& holder) {
  if (path == nullptr || *path == '\0') return motionsynth::TagLexicon::builtin();
  holder = motionsynth::TagLexicon::load(path);
  return *holder;
}

}  // namespace

extern "C" {

const char* ms_version(void) { return MOTIONSYNTH_VERSION; }

const char* ms_status_name(ms_status status) {
  switch (status) {
    case MS_OK: return "ok";
    case MS_ERR_CONFIG: return "config error";
    case MS_ERR_ASSET: return "asset error";
    case MS_ERR_PARTIAL: return "partial failure over cap";
    case MS_ERR_ARGUMENT: return "argument error";
    case MS_ERR_IO: return "io error";
    case MS_ERR_GATEWAY: return "gateway error";
    case MS_ERR_NUMERIC: return "numeric error";
    case MS_ERR_INTERNAL: return "internal error";
    case MS_ERR_VERIFY: return "verification failed";
  }
  return "unknown status";
}

const char* ms_last_error(void) { return g_last_error.c_str(); }

const char* ms_text_data(const ms_text* text) { return text ? text->value.c_str() : ""; }
size_t ms_text_size(const ms_text* text) { return text ? text->value.size() : 0; }
void ms_text_destroy(ms_text* text) { delete text; }

ms_status ms_config_create(ms_config** out) {
  if (out == nullptr) return fail(MS_ERR_ARGUMENT, "ms_config_create: null output");
  return guarded([&] {
    *out = new ms_config{};
    return MS_OK;
  });
}

void ms_config_destroy(ms_config* cfg) { delete cfg; }

ms_status ms_config_load_file(ms_config* cfg, const char* path) {
  if (cfg == nullptr || path == nullptr) return fail(MS_ERR_ARGUMENT, "ms_config_load_file: null argument");
  return guarded([&] {
    cfg->cfg = motionsynth::load_config(path);
    return MS_OK;
  });
}

ms_status ms_config_apply_env(ms_config* cfg) {
  if (cfg == nullptr) return fail(MS_ERR_ARGUMENT, "ms_config_apply_env: null config");
  return guarded([&] {
    motionsynth::apply_env_overrides(cfg->cfg);
    return MS_OK;
  });
}

ms_status ms_config_set(ms_config* cfg, const char* key, const char* value) {
  if (cfg == nullptr || key == nullptr || value == nullptr) {
    return fail(MS_ERR_ARGUMENT, "ms_config_set: null argument");
  }
  return guarded([&] {
    motionsynth::set_config_value(cfg->cfg, key, value);
    return MS_OK;
  });
}

ms_status ms_config_to_json(const ms_config* cfg, ms_text** out) {
  if (cfg == nullptr || out == nullptr) return fail(MS_ERR_ARGUMENT, "ms_config_to_json: null argument");
  return guarded([&] { return emit(out, motionsynth::to_json(cfg->cfg).dump(2)); });
}

ms_status ms_generate(const ms_config* cfg, const char* out_dir, ms_text** summary) {
  if (cfg == nullptr || out_dir == nullptr) return fail(MS_ERR_ARGUMENT, "ms_generate: null argument");
  return guarded([&] {
    const auto s = motionsynth::generate_dataset(cfg->cfg, out_dir);
    nlohmann::ordered_json j;
    j["requested"] = s.requested;
    j["written"] = s.written;
    j["failed"] = s.failed;
    j["paraphrases_accepted"] = s.paraphrases_accepted;
    j["paraphrases_rejected"] = s.paraphrases_rejected;
    j["manifest"] = s.manifest.string();
    return emit(summary, j.dump(2));
  });
}

ms_status ms_verify(const char* manifest, ms_text** report) {
  if (manifest == nullptr) return fail(MS_ERR_ARGUMENT, "ms_verify: null manifest");
  return guarded([&] {
    const auto r = motionsynth::verify_manifest(manifest);
    emit(report, motionsynth::to_json(r).dump(2));
    if (r.ok()) return MS_OK;
    g_last_error = std::to_string(r.failed()) + " records failed verification";
    if (!r.header_problems.empty()) g_last_error += "; header: " + r.header_problems.front();
    return MS_ERR_VERIFY;
  });
}

ms_status ms_stats_manifest(const char* manifest, const char* lexicon, ms_text** report) {
  if (manifest == nullptr || report == nullptr) return fail(MS_ERR_ARGUMENT, "ms_stats_manifest: null argument");
  return guarded([&] {
    std::optional<motionsynth::TagLexicon> holder;
    const auto& lex = lexicon_or_builtin(lexicon, holder);
    return emit(report, motionsynth::stats_for_manifest(manifest, lex).dump(2));
  });
}

ms_status ms_stats_captions(const char* captions, const char* lexicon, ms_text** report) {
  if (captions == nullptr || report == nullptr) return fail(MS_ERR_ARGUMENT, "ms_stats_captions: null argument");
  return guarded([&] {
    std::optional<motionsynth::TagLexicon> holder;
    const auto& lex = lexicon_or_builtin(lexicon, holder);
    return emit(report, motionsynth::stats_for_captions(captions, lex).dump(2));
  });
}

ms_status ms_probe(const ms_config* cfg, const char* manifest, const char* curve_csv, int controls,
                   ms_text** report) {
  if (cfg == nullptr || manifest == nullptr) return fail(MS_ERR_ARGUMENT, "ms_probe: null argument");
  return guarded([&] {
    const auto r = motionsynth::probe_manifest(cfg->cfg, manifest, curve_csv ? curve_csv : "",
                                               controls != 0);
    return emit(report, motionsynth::to_json(r).dump(2));
  });
}

ms_status ms_preview(const char* manifest, const char* video_id, const char* out_png, int columns) {
  if (manifest == nullptr || video_id == nullptr || out_png == nullptr) {
    return fail(MS_ERR_ARGUMENT, "ms_preview: null argument");
  }
  return guarded([&] {
    motionsynth::write_preview(manifest, video_id, out_png, columns);
    return MS_OK;
  });
}

ms_status ms_render_caption(const ms_config* cfg, const char* motion_spec_json, ms_text** caption) {
  if (cfg == nullptr || motion_spec_json == nullptr || caption == nullptr) {
    return fail(MS_ERR_ARGUMENT, "ms_render_caption: null argument");
  }
  return guarded([&] {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(motion_spec_json);
    } catch (const nlohmann::json::exception& e) {
      throw motionsynth::ArgumentError(std::string("motion spec is not JSON: ") + e.what());
    }
    const auto spec = motionsynth::motion_spec_from_json(j);
    const auto track = motionsynth::interpolate(spec, spec.num_frames());
    motionsynth::GenConfig gen = cfg->cfg.gen;
    gen.num_frames = spec.num_frames();
    return emit(caption, motionsynth::assemble_caption(spec, track, gen, cfg->cfg.thresholds).rendered);
  });
}

ms_status ms_render_prompt(const char* object_name, const char* caption, ms_text** prompt) {
  if (object_name == nullptr || caption == nullptr || prompt == nullptr) {
    return fail(MS_ERR_ARGUMENT, "ms_render_prompt: null argument");
  }
  return guarded([&] { return emit(prompt, motionsynth::render_prompt(object_name, caption)); });
}

ms_status ms_sample_motion(const ms_config* cfg, uint64_t index, ms_text** spec) {
  if (cfg == nullptr || spec == nullptr) return fail(MS_ERR_ARGUMENT, "ms_sample_motion: null argument");
  return guarded([&] {
    cfg->cfg.gen.validate();
    const auto sprites = motionsynth::sprites_for(cfg->cfg.pipeline);
    motionsynth::Rng rng = motionsynth::Rng(cfg->cfg.gen.rng_seed).child(index);
    return emit(spec, motionsynth::to_json(motionsynth::sample_motion(cfg->cfg.gen, sprites.infos(), rng)).dump());
  });
}

}  // extern "C"
