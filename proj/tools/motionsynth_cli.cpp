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

// Command-line front end over the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "motionsynth/motionsynth.h"

namespace {

struct TextDeleter {
  void operator()(ms_text* t) const { ms_text_destroy(t); }
};
using Text = std::unique_ptr<ms_text, TextDeleter>;

struct ConfigDeleter {
  void operator()(ms_config* c) const { ms_config_destroy(c); }
};
using Config = std::unique_ptr<ms_config, ConfigDeleter>;

int exit_code(ms_status s) {
  switch (s) {
    case MS_OK: return 0;
    case MS_ERR_CONFIG:
    case MS_ERR_ARGUMENT: return 1;
    case MS_ERR_ASSET:
    case MS_ERR_IO: return 2;
    case MS_ERR_PARTIAL:
    case MS_ERR_VERIFY: return 3;
    default: return 4;
  }
}

int report_failure(ms_status s) {
  std::fprintf(stderr, "motionsynth: %s: %s\n", ms_status_name(s), ms_last_error());
  return exit_code(s);
}

int write_output(const ms_text* text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::fwrite(ms_text_data(text), 1, ms_text_size(text), stdout);
    std::fputc('\n', stdout);
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(ms_text_data(text), static_cast<std::streamsize>(ms_text_size(text)));
  out << '\n';
  if (!out) {
    std::fprintf(stderr, "motionsynth: cannot write %s\n", path.c_str());
    return 2;
  }
  return 0;
}

// Options shared by the commands that take a configuration.
struct ConfigOptions {
  std::string file;
  bool no_env = false;
  std::vector<std::string> sets;
  // Ordered (key, value) pairs from the generated per-key flags.
  std::vector<std::pair<std::string, std::string*>> keyed;
  std::vector<std::unique_ptr<std::string>> storage;
  std::vector<std::pair<std::string, std::string*>> aliases;
};

void add_config_options(CLI::App* cmd, ConfigOptions& o, const nlohmann::json& defaults,
                        const std::vector<std::string>& sections) {
  cmd->add_option("-c,--config", o.file, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_flag("--no-env", o.no_env, "Ignore MOTIONSYNTH_* environment overrides");
  cmd->add_option("--set", o.sets, "Override a config key: <section>.<key>=<value>");
  for (const std::string& section : sections) {
    for (const auto& [key, value] : defaults.at(section).items()) {
      const std::string name = section + "." + key;
      o.storage.push_back(std::make_unique<std::string>());
      std::string* slot = o.storage.back().get();
      cmd->add_option("--" + name, *slot, "default " + value.dump())->group("Config keys");
      o.keyed.emplace_back(name, slot);
    }
  }
}

void add_alias(CLI::App* cmd, ConfigOptions& o, const std::string& flag, const std::string& key,
               const std::string& help) {
  o.storage.push_back(std::make_unique<std::string>());
  std::string* slot = o.storage.back().get();
  cmd->add_option(flag, *slot, help + " (" + key + ")");
  o.aliases.emplace_back(key, slot);
}

ms_status build_config(const ConfigOptions& o, Config& cfg) {
  ms_config* raw = nullptr;
  ms_status s = ms_config_create(&raw);
  if (s != MS_OK) return s;
  cfg.reset(raw);
  if (!o.file.empty() && (s = ms_config_load_file(raw, o.file.c_str())) != MS_OK) return s;
  if (!o.no_env && (s = ms_config_apply_env(raw)) != MS_OK) return s;
  for (const auto* list : {&o.aliases, &o.keyed}) {
    for (const auto& [key, value] : *list) {
      if (value->empty()) continue;
      if ((s = ms_config_set(raw, key.c_str(), value->c_str())) != MS_OK) return s;
    }
  }
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "motionsynth: --set expects <key>=<value>, got '%s'\n", kv.c_str());
      return MS_ERR_CONFIG;
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if ((s = ms_config_set(raw, key.c_str(), value.c_str())) != MS_OK) return s;
  }
  return MS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  nlohmann::json defaults;
  {
    ms_config* raw = nullptr;
    ms_text* text = nullptr;
    if (ms_config_create(&raw) != MS_OK || ms_config_to_json(raw, &text) != MS_OK) {
      std::fprintf(stderr, "motionsynth: %s\n", ms_last_error());
      return 4;
    }
    defaults = nlohmann::json::parse(ms_text_data(text));
    ms_text_destroy(text);
    ms_config_destroy(raw);
  }

  CLI::App app{"Synthesizes motion-focused video-text pairs."};
  app.set_version_flag("--version", ms_version());
  app.require_subcommand(1);

  ConfigOptions gen_opts;
  std::string gen_out;
  bool gen_paraphrase = false, gen_offline = false, gen_strict = false, gen_print_config = false;
  auto* gen = app.add_subcommand("generate", "Generate frames, captions and a manifest");
  gen->add_option("-o,--out", gen_out, "Output directory")->required();
  add_alias(gen, gen_opts, "-n,--count", "pipeline.count", "Number of videos");
  add_alias(gen, gen_opts, "--seed", "generation.rng_seed", "Run seed");
  add_alias(gen, gen_opts, "-j,--workers", "pipeline.workers", "Worker threads");
  add_alias(gen, gen_opts, "--background", "pipeline.background_mode", "black, static_frame or video");
  add_alias(gen, gen_opts, "--sprites", "pipeline.sprite_dir", "Sprite directory <name>/<id>.png");
  add_alias(gen, gen_opts, "--clips", "pipeline.background_dir", "Background clip directory");
  add_alias(gen, gen_opts, "--frames", "generation.num_frames", "Frames per video");
  add_alias(gen, gen_opts, "--endpoint", "paraphrase.endpoint_url", "Completion endpoint URL");
  gen->add_flag("--paraphrase", gen_paraphrase, "Enable paraphrasing");
  gen->add_flag("--offline", gen_offline, "Paraphrase with the offline rewriter");
  gen->add_flag("--strict", gen_strict, "Drop samples whose paraphrase fails screening");
  gen->add_flag("--print-config", gen_print_config, "Print the effective config and exit");
  add_config_options(gen, gen_opts, defaults, {"generation", "thresholds", "pipeline", "paraphrase"});

  std::string verify_manifest, verify_output;
  auto* verify = app.add_subcommand("verify", "Re-render captions and check frames of a manifest");
  verify->add_option("manifest", verify_manifest, "manifest.jsonl")->required();
  verify->add_option("-o,--output", verify_output, "Report file (default stdout)");

  std::string stats_input, stats_lexicon, stats_output;
  bool stats_captions = false;
  auto* stats = app.add_subcommand("stats", "Part-of-speech profile and noun-set uniqueness");
  stats->add_option("input", stats_input, "Manifest or caption file (one per line)")->required()->check(CLI::ExistingFile);
  stats->add_option("--lexicon", stats_lexicon, "Part-of-speech lexicon file")->check(CLI::ExistingFile);
  stats->add_flag("--captions", stats_captions, "Treat input as plain captions even if it ends in .jsonl");
  stats->add_option("-o,--output", stats_output, "Report file (default stdout)");

  ConfigOptions probe_opts;
  std::string probe_manifest, probe_curve, probe_output;
  bool probe_no_controls = false;
  auto* probe = app.add_subcommand("probe", "Train and evaluate the alignment probe on a manifest");
  probe->add_option("manifest", probe_manifest, "manifest.jsonl")->required();
  probe->add_option("--curve", probe_curve, "Loss-curve CSV output");
  probe->add_option("-o,--output", probe_output, "Metrics report file (default stdout)");
  probe->add_flag("--no-controls", probe_no_controls, "Skip the shuffled-label and video-blind controls");
  add_config_options(probe, probe_opts, defaults, {"probe"});

  std::string preview_manifest, preview_id, preview_out;
  int preview_columns = 0;
  auto* preview = app.add_subcommand("preview", "Contact-sheet PNG of one video");
  preview->add_option("manifest", preview_manifest, "manifest.jsonl")->required();
  preview->add_option("--video-id", preview_id, "Record to render (default: first)");
  preview->add_option("-o,--out", preview_out, "Output PNG")->required();
  preview->add_option("--columns", preview_columns, "Frames per row (default: square-ish)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  ms_status s = MS_OK;
  if (*gen) {
    Config cfg;
    if ((s = build_config(gen_opts, cfg)) != MS_OK) return report_failure(s);
    if (gen_paraphrase && (s = ms_config_set(cfg.get(), "paraphrase.enabled", "true")) != MS_OK) {
      return report_failure(s);
    }
    if (gen_offline && (s = ms_config_set(cfg.get(), "paraphrase.endpoint_url", "")) != MS_OK) {
      return report_failure(s);
    }
    if (gen_strict && (s = ms_config_set(cfg.get(), "paraphrase.screen_mode", "strict")) != MS_OK) {
      return report_failure(s);
    }
    if (gen_print_config) {
      ms_text* text = nullptr;
      if ((s = ms_config_to_json(cfg.get(), &text)) != MS_OK) return report_failure(s);
      Text owned(text);
      return write_output(text, "");
    }
    ms_text* text = nullptr;
    s = ms_generate(cfg.get(), gen_out.c_str(), &text);
    if (s != MS_OK) return report_failure(s);
    Text owned(text);
    return write_output(text, "");
  }
  if (*verify) {
    ms_text* text = nullptr;
    s = ms_verify(verify_manifest.c_str(), &text);
    Text owned(text);
    if (text != nullptr) write_output(text, verify_output);
    return s == MS_OK ? 0 : report_failure(s);
  }
  if (*stats) {
    ms_text* text = nullptr;
    const bool manifest = !stats_captions && stats_input.size() > 6 &&
                          stats_input.compare(stats_input.size() - 6, 6, ".jsonl") == 0;
    const char* lexicon = stats_lexicon.empty() ? nullptr : stats_lexicon.c_str();
    s = manifest ? ms_stats_manifest(stats_input.c_str(), lexicon, &text)
                 : ms_stats_captions(stats_input.c_str(), lexicon, &text);
    if (s != MS_OK) return report_failure(s);
    Text owned(text);
    return write_output(text, stats_output);
  }
  if (*probe) {
    Config cfg;
    if ((s = build_config(probe_opts, cfg)) != MS_OK) return report_failure(s);
    ms_text* text = nullptr;
    s = ms_probe(cfg.get(), probe_manifest.c_str(), probe_curve.empty() ? nullptr : probe_curve.c_str(),
                 probe_no_controls ? 0 : 1, &text);
    if (s != MS_OK) return report_failure(s);
    Text owned(text);
    return write_output(text, probe_output);
  }
  if (*preview) {
    if (preview_id.empty()) {
      std::ifstream in(preview_manifest);
      std::string line;
      std::getline(in, line);  // header
      if (std::getline(in, line)) {
        preview_id = nlohmann::json::parse(line, nullptr, false).value("video_id", "");
      }
      if (preview_id.empty()) {
        std::fprintf(stderr, "motionsynth: %s has no records\n", preview_manifest.c_str());
        return 2;
      }
    }
    s = ms_preview(preview_manifest.c_str(), preview_id.c_str(), preview_out.c_str(), preview_columns);
    return s == MS_OK ? 0 : report_failure(s);
  }
  return 0;
}
