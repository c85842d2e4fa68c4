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

/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "motionsynth/motionsynth.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, ms_last_error());                       \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int contains(const ms_text* t, const char* needle) {
  return t != NULL && strstr(ms_text_data(t), needle) != NULL;
}

int main(void) {
  char dir[256];
  snprintf(dir, sizeof dir, "/tmp/motionsynth_capi_%ld", (long)getpid());
  char manifest[320];
  snprintf(manifest, sizeof manifest, "%s/manifest.jsonl", dir);
  char png[320];
  snprintf(png, sizeof png, "%s/preview.png", dir);

  EXPECT(strlen(ms_version()) > 0);
  EXPECT(strcmp(ms_status_name(MS_ERR_VERIFY), ms_status_name(MS_OK)) != 0);

  ms_config* cfg = NULL;
  EXPECT(ms_config_create(&cfg) == MS_OK);
  EXPECT(ms_config_set(cfg, "pipeline.count", "3") == MS_OK);
  EXPECT(ms_config_set(cfg, "pipeline.procedural_sprites", "4") == MS_OK);
  EXPECT(ms_config_set(cfg, "generation.rng_seed", "17") == MS_OK);

  EXPECT(ms_config_set(cfg, "generation.no_such_key", "1") == MS_ERR_CONFIG);
  EXPECT(strlen(ms_last_error()) > 0);
  EXPECT(ms_config_set(cfg, "generation.num_frames", "many") == MS_ERR_CONFIG);
  EXPECT(ms_config_load_file(cfg, "/nonexistent/config.json") != MS_OK);

  ms_text* json = NULL;
  EXPECT(ms_config_to_json(cfg, &json) == MS_OK);
  EXPECT(contains(json, "\"rng_seed\": 17") || contains(json, "\"rng_seed\":17"));
  ms_text_destroy(json);

  ms_text* spec = NULL;
  EXPECT(ms_sample_motion(cfg, 0, &spec) == MS_OK);
  ms_text* caption = NULL;
  if (spec != NULL) {
    EXPECT(ms_render_caption(cfg, ms_text_data(spec), &caption) == MS_OK);
    EXPECT(caption != NULL && strncmp(ms_text_data(caption), "A ", 2) == 0);
    EXPECT(caption != NULL && ms_text_size(caption) == strlen(ms_text_data(caption)));
  }
  ms_text_destroy(spec);
  EXPECT(ms_render_caption(cfg, "{\"object_name\": 3}", &caption) == MS_ERR_ARGUMENT);

  ms_text* prompt = NULL;
  EXPECT(ms_render_prompt("dog", "A big dog in the center moves left", &prompt) == MS_OK);
  EXPECT(contains(prompt, "A big dog in the center moves left"));
  ms_text_destroy(prompt);
  ms_text_destroy(caption);

  ms_text* summary = NULL;
  EXPECT(ms_generate(cfg, dir, &summary) == MS_OK);
  EXPECT(contains(summary, "\"written\""));
  ms_text_destroy(summary);

  ms_text* report = NULL;
  EXPECT(ms_verify(manifest, &report) == MS_OK);
  ms_text_destroy(report);
  report = NULL;
  EXPECT(ms_stats_manifest(manifest, NULL, &report) == MS_OK);
  EXPECT(contains(report, "num_captions"));
  ms_text_destroy(report);
  EXPECT(ms_preview(manifest, "000001", png, 4) == MS_OK);
  EXPECT(access(png, F_OK) == 0);

  report = NULL;
  EXPECT(ms_verify("/nonexistent/manifest.jsonl", &report) == MS_ERR_IO);
  ms_text_destroy(report);
  EXPECT(ms_probe(cfg, manifest, NULL, 0, &report) == MS_ERR_ARGUMENT);

  ms_config_destroy(cfg);
  char cmd[300];
  snprintf(cmd, sizeof cmd, "rm -rf '%s'", dir);
  if (system(cmd) != 0) ++failures;
  if (failures == 0) printf("all C API checks passed\n");
  return failures == 0 ? 0 : 1;
}
