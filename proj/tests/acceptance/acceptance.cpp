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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when
// any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "caption_goldens.hpp"
#include "helpers.hpp"
#include "motionsynth/analytics.hpp"
#include "motionsynth/caption.hpp"
#include "motionsynth/compositor.hpp"
#include "motionsynth/kinematics.hpp"
#include "motionsynth/paraphrase.hpp"
#include "motionsynth/pipeline.hpp"
#include "motionsynth/probe.hpp"
#include "pos_fixture.hpp"

using namespace motionsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::map<std::string, std::string> file_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

// P(X <= k) walked up by the pmf ratio recurrence, independent of the
// library's log-gamma route.
int binomial_quantile_by_recurrence(int n, double p, double q) {
  double pmf = std::pow(1.0 - p, n);
  double cdf = pmf;
  for (int k = 0; k < n; ++k) {
    if (cdf >= q) return k;
    pmf *= (n - k) / (k + 1.0) * p / (1.0 - p);
    cdf += pmf;
  }
  return n;
}

Outcome kinematics() {
  const GenConfig gen;
  const std::vector<SpriteInfo> sprites{{"car", 60, 30}, {"dog", 40, 70}, {"cup", 50, 50}};
  const auto t0 = Clock::now();
  std::size_t violations = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    Rng rng = Rng(2024).child(i);
    violations += check_motion(sample_motion(gen, sprites, rng), gen).size();
  }
  const double t = seconds_since(t0);
  return {violations == 0 && t < 10.0, fmt("10000 specs, %zu violations, %.2f s", violations, t)};
}

Outcome caption_goldens() {
  const auto goldens = testing::load_caption_goldens(MOTIONSYNTH_FIXTURES "/caption_goldens.tsv");
  const GenConfig gen;
  const ThresholdConfig thr;
  int matched = 0;
  std::string first_miss;
  for (const auto& g : goldens) {
    const MotionCaption c = assemble_caption(g.spec, interpolate(g.spec, g.spec.num_frames()), gen, thr);
    if (c.rendered == g.expected) {
      ++matched;
    } else if (first_miss.empty()) {
      first_miss = fmt(" (line %d: \"%s\")", g.line, c.rendered.c_str());
    }
  }
  const bool ok = goldens.size() >= 40 && matched == static_cast<int>(goldens.size());
  return {ok, fmt("%d/%zu exact matches%s", matched, goldens.size(), first_miss.c_str())};
}

Outcome grammar_round_trip() {
  const ThresholdConfig thr;
  const SpriteSet set = procedural_sprites(20, 0);
  int trips = 0, failures = 0, structured = 0, bad_structure = 0;
  for (int k : {2, 3, 4, 5}) {
    GenConfig gen;
    gen.num_keyframes = k;
    for (std::uint64_t i = 0; i < 2500; ++i) {
      Rng rng = Rng(77 + k).child(i);
      const MotionSpec spec = sample_motion(gen, set.infos(), rng);
      const MotionCaption c = assemble_caption(spec, interpolate(spec, gen.num_frames), gen, thr);
      ++trips;
      if (!(parse_caption(c.rendered, k - 1) == c.slots)) ++failures;
      const bool moving = std::any_of(c.slots.segments.begin(), c.slots.segments.end(),
                                      [](const SegmentSlots& s) { return !s.still(); });
      if (k > 2 && moving) {
        ++structured;
        if (count_of(c.rendered, "first") != 1 ||
            count_of(c.rendered, "before it") != static_cast<std::size_t>(k - 2)) {
          ++bad_structure;
        }
      }
    }
  }
  return {failures == 0 && bad_structure == 0,
          fmt("%d round trips (K=2..5), %d mismatches; %d multi-stage captions, %d with wrong "
              "first/before-it counts",
              trips, failures, structured, bad_structure)};
}

Outcome compositing_locality() {
  PipelineConfig cfg;
  cfg.gen.rng_seed = 11;
  const SpriteSet sprites = sprites_for(cfg.pipeline);
  const ClipSource clips = ClipSource::from_settings(cfg.pipeline);
  double total = 0.0;
  int frames = 0, empty = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const SynthesizedPair p = synthesize_pair(cfg, sprites, clips, i);
    for (int f = 0; f < p.frames.size(); ++f) {
      const MaskMoments m = mask_moments(p.frames.frames[static_cast<std::size_t>(f)],
                                         p.background.frames[static_cast<std::size_t>(f)], 0);
      if (m.empty()) {
        ++empty;
        continue;
      }
      const Pose& pose = p.track[static_cast<std::size_t>(f)];
      total += std::hypot(m.cx - pose.x, m.cy - pose.y);
      ++frames;
    }
  }
  const double mean = frames > 0 ? total / frames : INFINITY;
  return {mean <= 1.5 && empty == 0,
          fmt("mean centroid error %.3f px over %d frames of 100 videos, %d empty masks", mean, frames, empty)};
}

Outcome determinism() {
  testing::TempDir tmp("acceptance_det");
  PipelineConfig cfg;
  cfg.gen.rng_seed = 31;
  cfg.pipeline.count = 50;
  cfg.paraphrase.enabled = true;  // no endpoint URL: offline rewriter
  const auto t0 = Clock::now();
  cfg.pipeline.workers = 1;
  generate_dataset(cfg, tmp.path() / "a");
  generate_dataset(cfg, tmp.path() / "b");
  cfg.pipeline.workers = 8;
  generate_dataset(cfg, tmp.path() / "c");
  const auto a = file_tree(tmp.path() / "a");
  const bool same_runs = a == file_tree(tmp.path() / "b");
  const bool same_workers = a == file_tree(tmp.path() / "c");
  return {same_runs && same_workers && a.count("manifest.jsonl") == 1,
          fmt("%zu files; repeat run %s; 1 vs 8 workers %s; %.1f s", a.size(),
              same_runs ? "identical" : "DIFFERS", same_workers ? "identical" : "DIFFERS",
              seconds_since(t0))};
}

Outcome paraphrase_screening() {
  std::ifstream in(MOTIONSYNTH_FIXTURES "/adversarial_paraphrases.tsv");
  const DirectionLexicon& lex = DirectionLexicon::builtin();
  std::string line;
  int rows = 0, false_accepts = 0, identity_rejects = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = testing::split(line, '\t');
    if (cols.size() != 3) return {false, "malformed fixture row: " + line};
    ++rows;
    const int segments = static_cast<int>(std::count(cols[0].begin(), cols[0].end(), ',')) + 1;
    const MotionCaption original{cols[0], parse_caption(cols[0], segments)};
    false_accepts += screen_consistency(original, cols[1], lex).accepted();
    identity_rejects += !screen_consistency(original, cols[0], lex).accepted();
  }
  // Identity paraphrases of generated captions as well.
  GenConfig gen;
  const SpriteSet set = procedural_sprites(20, 0);
  int generated = 0;
  for (int k : {2, 3}) {
    gen.num_keyframes = k;
    Rng rng(500 + k);
    for (int i = 0; i < 500; ++i, ++generated) {
      const MotionSpec spec = sample_motion(gen, set.infos(), rng);
      const MotionCaption c = assemble_caption(spec, interpolate(spec, gen.num_frames), gen, {});
      identity_rejects += !screen_consistency(c, c.rendered, lex).accepted();
    }
  }
  return {rows == 30 && false_accepts == 0 && identity_rejects == 0,
          fmt("%d adversarial rows, %d false accepts; %d identity paraphrases, %d rejected", rows,
              false_accepts, rows + generated, identity_rejects)};
}

Outcome analytics() {
  const std::vector<std::set<std::string>> sets{{"car"}, {"car"}, {"dog"}};
  const double small = set_uniqueness(sets);

  const SpriteSet pool = procedural_sprites(20, 0);
  GenConfig gen;
  Rng rng(99);
  std::vector<std::string> captions;
  for (int i = 0; i < 1000; ++i) {
    const MotionSpec spec = sample_motion(gen, pool.infos(), rng);
    captions.push_back(assemble_caption(spec, interpolate(spec, gen.num_frames), gen, {}).rendered);
  }
  const double generated = noun_uniqueness(captions, TagLexicon::builtin());

  constexpr std::array<PosTag, 5> kContent = {PosTag::kNoun, PosTag::kAdjective, PosTag::kVerb,
                                              PosTag::kAdverb, PosTag::kAdposition};
  const auto rows = testing::load_pos_fixture(MOTIONSYNTH_FIXTURES "/pos_webvid20.tsv");
  int matched = 0;
  for (const auto& r : rows) {
    const std::vector<std::string> one{r.caption};
    const PosProfile p = pos_profile(one, TagLexicon::builtin());
    bool all = true;
    for (std::size_t i = 0; i < 5; ++i) all = all && p[kContent[i]] == r.counts[i];
    matched += all;
  }
  const bool ok = small == 1.0 / 3.0 && generated < 0.05 && rows.size() == 20 && matched == 20;
  return {ok, fmt("{car},{car},{dog} -> %.17g; 1000 captions / 20 objects -> %.4f; POS fixture %d/%zu rows",
                  small, generated, matched, rows.size())};
}

Outcome alignment_probe() {
  const auto t0 = Clock::now();
  PipelineConfig cfg;
  cfg.gen.rng_seed = 1;
  const std::vector<ProbeExample> all = synthesize_probe_examples(cfg, 0, 700);
  const std::vector<ProbeExample> train(all.begin(), all.begin() + 500);
  const std::vector<ProbeExample> held(all.begin() + 500, all.end());
  std::vector<std::string> objects;
  for (const auto& e : all) objects.push_back(e.slots.object);
  const Vocabulary vocab(objects);

  // (a) gradients on a fresh model and one batch.
  ProbeHyperparams hp = cfg.probe;
  ProbeHyperparams fresh = hp;
  fresh.epochs = 0;
  const TrainedProbe untrained = train_probe(train, vocab, fresh);
  const PreparedSplit split = prepare_split(untrained.model, train, vocab);
  Rng rng(123);
  std::vector<int> members(16);
  std::iota(members.begin(), members.end(), 0);
  const BatchPlan plan = plan_batch(members, split.data.captions, hp.mask_fraction, rng);
  const GradientCheck grad = gradient_check(untrained.model, split.data, plan, 60, rng);

  // (b) retrieval and the shuffled-label control, seed 1.
  hp.seed = 1;
  const ProbeReport report = run_probe(train, held, hp, true);
  const double chance = report.heldout.chance_r1;
  const int n = report.shuffled.queries;
  const int lo = binomial_quantile_by_recurrence(n, report.shuffled.chance_r1, 0.025);
  const int hi = binomial_quantile_by_recurrence(n, report.shuffled.chance_r1, 0.975);
  const bool shuffled_ok = report.shuffled.hits_r1 >= lo && report.shuffled.hits_r1 <= hi;

  // (c) direction words, video-conditioned vs blind, five seeds.
  std::vector<std::pair<double, double>> dir{{report.direction_accuracy_video, report.direction_accuracy_blind}};
  for (std::uint64_t seed = 2; seed <= 5; ++seed) {
    ProbeHyperparams h = cfg.probe;
    h.seed = seed;
    const TrainedProbe main = train_probe(train, vocab, h);
    h.video_blind = true;
    const TrainedProbe blind = train_probe(train, vocab, h);
    dir.emplace_back(direction_accuracy(main.model, prepare_split(main.model, held, vocab)),
                     direction_accuracy(blind.model, prepare_split(blind.model, held, vocab)));
  }
  int wins = 0;
  std::string dir_text;
  for (const auto& [v, b] : dir) {
    wins += v > b;
    dir_text += fmt(" %.3f>%.3f", v, b);
  }
  const double t = seconds_since(t0);
  const bool ok = grad.max() < 1e-4 && report.heldout.r1 >= 5.0 * chance && shuffled_ok && wins == 5 &&
                  t < 300.0;
  return {ok, fmt("grad err %.2e/%.2e/%.2e; R@1 %.3f vs chance %.4f (%.1fx); shuffled %d hits in [%d, %d]; "
                  "direction video>blind %d/5:%s; %.0f s",
                  grad.contrast, grad.match, grad.mlm, report.heldout.r1, chance, report.heldout.r1 / chance,
                  report.shuffled.hits_r1, lo, hi, wins, dir_text.c_str(), t)};
}

Outcome background_modes() {
  testing::TempDir tmp("acceptance_bg");
  std::string detail;
  bool ok = true;
  for (BackgroundMode mode : {BackgroundMode::kBlack, BackgroundMode::kStaticFrame, BackgroundMode::kVideo}) {
    PipelineConfig cfg;
    cfg.pipeline.count = 6;
    cfg.pipeline.background = mode;
    const std::string name(to_string(mode));
    const fs::path out = tmp.path() / name;
    const GenerateSummary s = generate_dataset(cfg, out);
    const Manifest m = read_manifest(out / "manifest.jsonl");
    std::size_t faithful = 0;
    for (const auto& r : m.records) {
      const bool clip_ok = mode == BackgroundMode::kBlack ? r.at("background_clip").is_null()
                                                          : r.at("background_clip").is_string();
      faithful += r.at("background_mode") == name && clip_ok;
    }
    const bool mode_ok = s.written == 6 && m.records.size() == 6 && faithful == 6 &&
                         m.header.at("background_mode") == name;
    ok = ok && mode_ok;
    detail += fmt("%s%s %zu/%zu recorded", detail.empty() ? "" : "; ", name.c_str(), faithful, m.records.size());
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"kinematics-invariants", kinematics},
      {"caption-goldens", caption_goldens},
      {"grammar-round-trip", grammar_round_trip},
      {"compositing-locality", compositing_locality},
      {"determinism", determinism},
      {"paraphrase-screening", paraphrase_screening},
      {"analytics", analytics},
      {"alignment-probe", alignment_probe},
      {"background-modes", background_modes},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
