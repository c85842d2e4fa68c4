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

#include <cmath>
#include <set>

#include "doctest.h"

#include "helpers.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/pipeline.hpp"
#include "motionsynth/probe.hpp"

using namespace motionsynth;
using Eigen::MatrixXd;

namespace {

PipelineConfig probe_config() {
  PipelineConfig cfg;
  cfg.gen.rng_seed = 3;
  cfg.pipeline.procedural_sprites = 8;
  return cfg;
}

// Generated once; every case below reads from the same pool.
const std::vector<ProbeExample>& pool() {
  static const std::vector<ProbeExample> examples = synthesize_probe_examples(probe_config(), 0, 220);
  return examples;
}

std::vector<ProbeExample> slice(std::size_t begin, std::size_t end) {
  return {pool().begin() + static_cast<std::ptrdiff_t>(begin),
          pool().begin() + static_cast<std::ptrdiff_t>(end)};
}

Vocabulary vocab_of(const std::vector<ProbeExample>& examples) {
  std::vector<std::string> objects;
  for (const auto& e : examples) objects.push_back(e.slots.object);
  return Vocabulary(objects);
}

FrameSeq black(int n, int w, int h) { return make_background(BackgroundMode::kBlack, nullptr, n, w, h); }

PoseTrack still_track(int n, double x, double y) { return PoseTrack(static_cast<std::size_t>(n), Pose{x, y, 0.0}); }

MatrixXd random_unit_rows(int rows, int cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    m.row(i).normalize();
  }
  return m;
}

}  // namespace

TEST_CASE("opaque sprite mask centroid tracks the placement center") {
  const auto sprite = testing::solid_sprite("box", 20, 20, 200, 50, 50);
  const FrameSeq bg = black(3, 96, 96);
  PoseTrack track{{30.0, 40.0, 0.0}, {36.5, 44.0, 0.0}, {50.25, 61.0, 0.0}};
  const FrameSeq frames = composite(bg, sprite, 20, 20, track);
  for (int i = 0; i < 3; ++i) {
    const MaskMoments m = mask_moments(frames.frames[static_cast<std::size_t>(i)], bg.frames[0], 30);
    CHECK(std::hypot(m.cx - track[static_cast<std::size_t>(i)].x, m.cy - track[static_cast<std::size_t>(i)].y) <= 1.5);
  }
  const VideoFeature f = extract_video_feature(frames, bg);
  CHECK_FALSE(f.degenerate);
  CHECK(f.values.size() == 3 * kFeaturesPerFrame);
  CHECK(f.values(kFeaturesPerFrame + 2) * 96 == doctest::Approx(6.5).epsilon(0.05));
}

TEST_CASE("motionless sprite gives zero displacement features") {
  const auto sprite = testing::solid_sprite("box", 16, 24, 10, 220, 10);
  const FrameSeq bg = black(4, 64, 64);
  const VideoFeature f = extract_video_feature(composite(bg, sprite, 24, 16, still_track(4, 31.0, 33.0)), bg);
  for (int i = 0; i < 4; ++i) {
    CHECK(f.values(i * kFeaturesPerFrame + 2) == 0.0);
    CHECK(f.values(i * kFeaturesPerFrame + 3) == 0.0);
    CHECK(f.values(i * kFeaturesPerFrame + 4) > 0.0);
  }
  // Taller than wide: principal axis vertical, cos 2phi = -1.
  CHECK(f.values(5) == doctest::Approx(-1.0));
}

TEST_CASE("transparent sprite is a degenerate video") {
  const auto sprite = testing::solid_sprite("ghost", 16, 16, 255, 255, 255, 0);
  const FrameSeq bg = black(3, 64, 64);
  const VideoFeature f = extract_video_feature(composite(bg, sprite, 16, 16, still_track(3, 32, 32)), bg);
  CHECK(f.degenerate);
  CHECK(f.values.isZero());
  CHECK_THROWS_AS(mask_moments(bg.frames[0], RgbImage(10, 10), 30), ArgumentError);
}

TEST_CASE("vocabulary covers the grammar and objects") {
  const Vocabulary v({"zebra", "car", "car"});
  CHECK(v.id("[PAD]") == Vocabulary::kPad);
  CHECK(v.id("[MASK]") == Vocabulary::kMask);
  CHECK(v.id("left") != Vocabulary::kUnknown);
  CHECK(v.id("upwards") != Vocabulary::kUnknown);
  CHECK(v.id("a lot") != Vocabulary::kUnknown);
  CHECK(v.id("zebra") != Vocabulary::kUnknown);
  CHECK(v.id("giraffe") == Vocabulary::kUnknown);
  CHECK(v.token(v.id("car")) == "car");
  // Position words "left" and "right" double as directions.
  CHECK(v.size() == 16 + 2 + 9 + 2 + 2 + 2 + 2 + 2);
  for (int i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
}

TEST_CASE("encode keeps clause ids and drops commas") {
  const std::string text = "A big car in the top-left first moves left, before it stays still";
  const CaptionSlots slots = parse_caption(text, 2);
  const EncodedCaption enc = encode_caption(slots, Vocabulary({"car"}));
  CHECK(enc.ids.size() == enc.clause.size());
  CHECK(enc.ids.size() == enc.kinds.size());
  for (SlotKind k : enc.kinds) CHECK(k != SlotKind::kComma);
  CHECK(enc.clause.front() == 0);
  CHECK(enc.clause.back() == 2);
  CHECK(std::count(enc.ids.begin(), enc.ids.end(), Vocabulary::kUnknown) == 0);
  CHECK_FALSE(maskable(SlotKind::kArticle));
  CHECK_FALSE(maskable(SlotKind::kThe));
  CHECK(maskable(SlotKind::kDirection));
  CHECK(maskable(SlotKind::kObject));
}

TEST_CASE("batch plans mask a quarter of maskable tokens, never articles") {
  const auto ex = slice(0, 10);
  const Vocabulary v = vocab_of(ex);
  std::vector<EncodedCaption> caps;
  for (const auto& e : ex) caps.push_back(encode_caption(e.slots, v));
  Rng rng(5);
  const BatchPlan plan = plan_batch({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, caps, 0.25, rng);
  CHECK(plan.negative_shift >= 1);
  CHECK(plan.negative_shift <= 9);
  for (std::size_t m = 0; m < 10; ++m) {
    int maskable_count = 0;
    for (SlotKind k : caps[m].kinds) maskable_count += maskable(k);
    CHECK(plan.masked[m].size() == static_cast<std::size_t>(std::max(1L, std::lround(0.25 * maskable_count))));
    for (int p : plan.masked[m]) CHECK(maskable(caps[m].kinds[static_cast<std::size_t>(p)]));
  }
}

TEST_CASE("contrastive loss at aligned orthogonal embeddings meets the closed form") {
  for (const auto& [b, tau] : std::vector<std::pair<int, double>>{{8, 0.5}, {4, 0.1}, {16, 1.0}}) {
    const MatrixXd e = MatrixXd::Identity(b, 20).eval();
    CHECK(contrastive_loss(e, e, tau) ==
          doctest::Approx(std::log(1.0 + (b - 1) * std::exp(-1.0 / tau))).epsilon(1e-9));
  }
}

TEST_CASE("a large temperature shrinks contrastive gradients") {
  Rng rng(11);
  const MatrixXd t = random_unit_rows(16, 8, rng);
  const MatrixXd v = random_unit_rows(16, 8, rng);
  MatrixXd gt_small, gv_small, gt_large, gv_large;
  contrastive_loss(t, v, 0.07, &gt_small, &gv_small);
  contrastive_loss(t, v, 1.0, &gt_large, &gv_large);
  CHECK(gt_large.norm() < gt_small.norm());
  CHECK(gv_large.norm() < gv_small.norm());
}

TEST_CASE("analytic gradients agree with central differences") {
  const auto ex = slice(0, 12);
  const Vocabulary v = vocab_of(ex);
  ProbeHyperparams hp;
  hp.epochs = 0;
  hp.seed = 2;
  const TrainedProbe probe = train_probe(ex, v, hp);
  const PreparedSplit split = prepare_split(probe.model, ex, v);
  Rng rng(9);
  const BatchPlan plan = plan_batch({0, 1, 2, 3, 4, 5, 6, 7}, split.data.captions, hp.mask_fraction, rng);

  const GradientCheck good = gradient_check(probe.model, split.data, plan, 40, rng);
  CHECK(good.contrast < 1e-4);
  CHECK(good.match < 1e-4);
  CHECK(good.mlm < 1e-4);

  const GradientCheck broken = gradient_check(probe.model, split.data, plan, 40, rng, true);
  CHECK(broken.max() > 0.99);
}

TEST_CASE("compare_gradients flags a wrong derivative") {
  auto f = [](const Eigen::VectorXd& p) { return p(0) * p(0) + 3.0 * p(1); };
  Eigen::VectorXd at(2);
  at << 1.5, -2.0;
  Eigen::VectorXd right(2), wrong(2);
  right << 3.0, 3.0;
  wrong << 3.0, 2.0;
  CHECK(compare_gradients(f, at, right, {0, 1}) < 1e-8);
  CHECK(compare_gradients(f, at, wrong, {0, 1}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("identity scores retrieve perfectly") {
  std::vector<std::string> caps;
  for (int i = 0; i < 50; ++i) caps.push_back("c" + std::to_string(i));
  const RetrievalMetrics m = evaluate_retrieval(MatrixXd::Identity(50, 50), correct_sets(caps));
  CHECK(m.r1 == 1.0);
  CHECK(m.r10 == 1.0);
  CHECK(m.chance_r1 == doctest::Approx(0.02));
}

TEST_CASE("random scores sit at chance") {
  // 2000 queries over 100 candidates; the 99.9% binomial intervals
  // (scipy.stats.binom.ppf) are [7, 36] hits at p = 0.01 and [69, 133] at 0.05.
  Rng rng(21);
  MatrixXd scores(2000, 100);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.uniform01();
  std::vector<std::vector<int>> correct;
  for (int q = 0; q < 2000; ++q) correct.push_back({q % 100});
  const RetrievalMetrics m = evaluate_retrieval(scores, correct);
  CHECK(m.chance_r1 == doctest::Approx(0.01));
  CHECK(m.hits_r1 >= 7);
  CHECK(m.hits_r1 <= 36);
  CHECK(m.r5 * 2000 >= 69);
  CHECK(m.r5 * 2000 <= 133);
}

TEST_CASE("duplicate captions accept any matching video") {
  const std::vector<std::string> caps{"x", "y", "x"};
  const auto sets = correct_sets(caps);
  CHECK(sets[0] == std::vector<int>{0, 2});
  CHECK(sets[1] == std::vector<int>{1});
  MatrixXd scores(3, 3);
  scores << 0.1, 0.2, 0.9,  // query 0 prefers video 2, same caption
      0.5, 0.4, 0.3,        // query 1 prefers the wrong video
      0.0, 0.0, 0.0;        // all tied
  const RetrievalMetrics m = evaluate_retrieval(scores, sets);
  CHECK(m.hits_r1 == 1);
  // Ties go against the query: two correct videos tie with one wrong one.
  CHECK(m.r5 == 1.0);
  MatrixXd flat = MatrixXd::Zero(1, 4);
  CHECK(evaluate_retrieval(flat, {{2}}).hits_r1 == 0);
  CHECK_THROWS_AS(evaluate_retrieval(flat, {{}}), ArgumentError);
  CHECK_THROWS_AS(evaluate_retrieval(flat, {{0}, {1}}), ArgumentError);
}

TEST_CASE("binomial quantile matches reference values") {
  // Reference: scipy.stats.binom.ppf(q, n, p).
  CHECK(binomial_quantile(200, 0.005, 0.975) == 3);
  CHECK(binomial_quantile(200, 0.01, 0.975) == 5);
  CHECK(binomial_quantile(100, 0.01, 0.975) == 3);
  CHECK(binomial_quantile(1000, 0.05, 0.975) == 64);
  CHECK(binomial_quantile(50, 0.5, 0.5) == 25);
  CHECK(binomial_quantile(10, 0.3, 0.025) == 0);
  CHECK(binomial_quantile(500, 0.002, 0.975) == 3);
  CHECK(binomial_quantile(7, 0.0, 0.975) == 0);
  CHECK(binomial_quantile(7, 1.0, 0.5) == 7);
  CHECK_THROWS_AS(binomial_quantile(5, 1.5, 0.5), ArgumentError);
}

TEST_CASE("untrained probe retrieves at chance") {
  const auto train = slice(0, 100);
  const auto held = slice(100, 220);
  ProbeHyperparams hp;
  hp.epochs = 0;
  const ProbeReport r = run_probe(train, held, hp, false);
  CHECK(r.untrained.queries == 120);
  CHECK(r.untrained.hits_r1 <= binomial_quantile(120, r.untrained.chance_r1, 0.999));
  CHECK(r.curve.empty());
}

TEST_CASE("training lowers the loss within a 5% band of the running minimum") {
  const auto train = slice(0, 150);
  ProbeHyperparams hp;
  hp.epochs = 30;
  hp.seed = 4;
  const TrainedProbe probe = train_probe(train, vocab_of(train), hp);
  REQUIRE(probe.curve.size() == 30);
  double best = probe.curve.front().loss.total;
  for (const EpochLoss& e : probe.curve) {
    CHECK(e.loss.contrast >= 0.0);
    CHECK(e.loss.match >= 0.0);
    CHECK(e.loss.mlm >= 0.0);
    CHECK(e.loss.total <= best * 1.05);
    best = std::min(best, e.loss.total);
  }
  CHECK(probe.curve.back().loss.total < probe.curve.front().loss.total);
}

TEST_CASE("training is deterministic for a seed") {
  const auto train = slice(0, 40);
  ProbeHyperparams hp;
  hp.epochs = 3;
  hp.seed = 8;
  const TrainedProbe a = train_probe(train, vocab_of(train), hp);
  const TrainedProbe b = train_probe(train, vocab_of(train), hp);
  CHECK(a.model.params == b.model.params);
  hp.seed = 9;
  CHECK(train_probe(train, vocab_of(train), hp).model.params != a.model.params);
}

TEST_CASE("probe input errors") {
  const auto train = slice(0, 1);
  CHECK_THROWS_AS(train_probe(train, vocab_of(train), ProbeHyperparams{}), ArgumentError);
  ProbeHyperparams hp;
  hp.learning_rate = 0.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  CHECK_THROWS_AS(run_probe(slice(0, 20), slice(20, 25), ProbeHyperparams{}), ArgumentError);
}

TEST_CASE("hyperparameters round-trip through JSON") {
  ProbeHyperparams hp;
  hp.epochs = 7;
  hp.learning_rate = 0.125;
  hp.video_blind = true;
  const ProbeHyperparams back = probe_hyperparams_from_json(to_json(hp));
  CHECK(back.epochs == 7);
  CHECK(back.learning_rate == 0.125);
  CHECK(back.video_blind);
  CHECK(to_json(back) == to_json(hp));
}
