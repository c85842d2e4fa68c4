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

/* C interface of the motionsynth shared library.
 *
 * Every fallible call returns an ms_status; on failure ms_last_error() holds
 * a message for the calling thread until its next call. Objects are opaque
 * and owned by the caller once returned: release them with the matching
 * *_destroy function. Text results are UTF-8 JSON unless noted. */
#ifndef MOTIONSYNTH_MOTIONSYNTH_H_
#define MOTIONSYNTH_MOTIONSYNTH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MOTIONSYNTH_BUILDING_LIBRARY)
#define MS_API __attribute__((visibility("default")))
#else
#define MS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_CONFIG = 1,
  MS_ERR_ASSET = 2,
  MS_ERR_PARTIAL = 3,  /* failures above the configured cap */
  MS_ERR_ARGUMENT = 4,
  MS_ERR_IO = 5,
  MS_ERR_GATEWAY = 6,
  MS_ERR_NUMERIC = 7,
  MS_ERR_INTERNAL = 8,
  MS_ERR_VERIFY = 9  /* verification found failing records */
} ms_status;

typedef struct ms_config ms_config;
typedef struct ms_text ms_text;

MS_API const char* ms_version(void);
MS_API const char* ms_status_name(ms_status status);
MS_API const char* ms_last_error(void);

/* Owned string results. */
MS_API const char* ms_text_data(const ms_text* text);
MS_API size_t ms_text_size(const ms_text* text);
MS_API void ms_text_destroy(ms_text* text);

/* Configuration: defaults, then a JSON file, then environment overrides and
 * individual keys such as "generation.num_frames". */
MS_API ms_status ms_config_create(ms_config** out);
MS_API void ms_config_destroy(ms_config* cfg);
MS_API ms_status ms_config_load_file(ms_config* cfg, const char* path);
MS_API ms_status ms_config_apply_env(ms_config* cfg);
MS_API ms_status ms_config_set(ms_config* cfg, const char* key, const char* value);
MS_API ms_status ms_config_to_json(const ms_config* cfg, ms_text** out);

/* Writes <out_dir>/videos/<id>/frame_NNNNN.png, failures.jsonl and
 * manifest.jsonl. `summary` may be NULL. */
MS_API ms_status ms_generate(const ms_config* cfg, const char* out_dir, ms_text** summary);

/* MS_ERR_VERIFY when any record or the header fails; the report is still
 * returned. */
MS_API ms_status ms_verify(const char* manifest, ms_text** report);

/* `lexicon` may be NULL for the built-in part-of-speech lexicon. */
MS_API ms_status ms_stats_manifest(const char* manifest, const char* lexicon, ms_text** report);
MS_API ms_status ms_stats_captions(const char* captions, const char* lexicon, ms_text** report);

/* Trains and evaluates the alignment probe on a manifest. `curve_csv` may be
 * NULL; `controls` non-zero also runs the shuffled-label and video-blind
 * controls. */
MS_API ms_status ms_probe(const ms_config* cfg, const char* manifest, const char* curve_csv,
                          int controls, ms_text** report);

/* Contact-sheet PNG of one record's frames; columns <= 0 picks a square-ish
 * grid. */
MS_API ms_status ms_preview(const char* manifest, const char* video_id, const char* out_png,
                            int columns);

/* Motion spec JSON (as stored in the manifest) to its template caption
 * (plain text). */
MS_API ms_status ms_render_caption(const ms_config* cfg, const char* motion_spec_json,
                                   ms_text** caption);

/* The verb-variation request for one caption (plain text). */
MS_API ms_status ms_render_prompt(const char* object_name, const char* caption, ms_text** prompt);

/* Motion spec of video `index` under cfg, as JSON. */
MS_API ms_status ms_sample_motion(const ms_config* cfg, uint64_t index, ms_text** spec);

#ifdef __cplusplus
}
#endif

#endif /* MOTIONSYNTH_MOTIONSYNTH_H_ */
