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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "motionsynth/caption.hpp"
#include "motionsynth/compositor.hpp"
#include "motionsynth/rng.hpp"

namespace motionsynth {

// Per-frame layout of the hand-crafted video feature.
//   0 cx / W, 1 cy / H       centroid of the changed-pixel mask
//   2 dx / W, 3 dy / H       centroid displacement from the previous frame
//   4 area / (W * H)         mask area
//   5 cos 2phi, 6 sin 2phi   principal axis of the mask's second moments
inline constexpr int kFeaturesPerFrame = 7;

struct MaskMoments {
  double area = 0.0;  // pixels
  double cx = 0.0;
  double cy = 0.0;
  double mu20 = 0.0;  // central second moments, normalized by area
  double mu02 = 0.0;
  double mu11 = 0.0;

  bool empty() const { return area == 0.0; }
};

// Moments of the pixels whose summed absolute RGB difference from the
// background exceeds `threshold`. Throws ArgumentError on size mismatch.
MaskMoments mask_moments(const RgbImage& frame, const RgbImage& background,
                         int threshold);

struct VideoFeature {
  Eigen::VectorXd values;  // kFeaturesPerFrame * N
  bool degenerate = false;  // no frame had a changed pixel
};

VideoFeature extract_video_feature(const FrameSeq& frames, const FrameSeq& background,
                                   int threshold = 30);

// Closed caption vocabulary: four specials, then the grammar words, then the
// object names.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kMask = 1;
  static constexpr int kUnknown = 2;
  static constexpr int kBegin = 3;

  explicit Vocabulary(const std::vector<std::string>& object_names);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

// Caption as token ids. Clause 0 is the appearance phrase, clause s + 1 the
// stage s. Commas are dropped.
struct EncodedCaption {
  std::vector<int> ids;
  std::vector<int> clause;
  std::vector<SlotKind> kinds;
};

EncodedCaption encode_caption(const CaptionSlots& slots, const Vocabulary& vocab);

// Articles are never masked.
bool maskable(SlotKind kind);

struct ProbeExample {
  VideoFeature video;
  CaptionSlots slots;
  std::string caption;
};

struct ProbeHyperparams {
  int video_hidden = 64;
  int text_hidden = 64;
  int embed_dim = 32;
  int token_dim = 24;
  int match_hidden = 32;
  int mlm_hidden = 64;
  int epochs = 100;
  int batch_size = 50;
  double learning_rate = 0.5;
  double clip_norm = 5.0;
  double tau_init = 0.07;
  double tau_min = 0.01;
  double tau_max = 1.0;
  double weight_contrast = 1.0;
  double weight_match = 1.0;
  double weight_mlm = 1.0;
  double mask_fraction = 0.25;
  int mask_threshold = 30;
  std::uint64_t seed = 0;
  // Manifest-level split used by the probe command.
  int train_count = 500;
  int heldout_count = 200;
  // Controls.
  bool shuffle_labels = false;  // pair captions with the wrong videos
  bool video_blind = false;     // masked-token head never sees the video

  void validate() const;
};

nlohmann::ordered_json to_json(const ProbeHyperparams& hp);
ProbeHyperparams probe_hyperparams_from_json(const nlohmann::ordered_json& j,
                                             ProbeHyperparams defaults = {});

// All parameters live in one flat vector; blocks are views into it.
class ProbeModel {
 public:
  ProbeModel() = default;
  ProbeModel(const ProbeHyperparams& hp, int feature_dim, int vocab_size,
             int num_clauses, Rng& rng);

  struct Block {
    std::string name;
    int offset = 0;
    int rows = 0;
    int cols = 0;
  };

  Eigen::VectorXd params;
  std::vector<Block> blocks;
  // Feature standardization taken from the training split.
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;

  int feature_dim = 0;
  int vocab_size = 0;
  int num_clauses = 0;
  ProbeHyperparams hp;

  const Block& block(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& flat, const std::string& name) const;
  Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& flat,
                                         const std::string& name) const;
  double tau() const;
  int text_dim() const { return num_clauses * hp.token_dim; }
};

// Which losses to evaluate and the random choices that make them
// reproducible: negative pairing shift and masked positions per caption.
struct BatchPlan {
  std::vector<int> members;  // indices into the example list
  int negative_shift = 1;
  std::vector<std::vector<int>> masked;  // positions per member
};

BatchPlan plan_batch(const std::vector<int>& members,
                     const std::vector<EncodedCaption>& captions,
                     double mask_fraction, Rng& rng);

struct LossTerms {
  double contrast = 0.0;
  double match = 0.0;
  double mlm = 0.0;
  double total = 0.0;
};

struct ProbeBatchData {
  std::vector<Eigen::VectorXd> features;  // standardized
  std::vector<EncodedCaption> captions;
};

// Weighted sum of the three objectives; fills `grad` (same layout as
// model.params) when non-null.
LossTerms probe_loss(const ProbeModel& model, const Eigen::VectorXd& params,
                     const ProbeBatchData& data, const BatchPlan& plan,
                     Eigen::VectorXd* grad);

// Symmetric InfoNCE over rows of text and video embeddings with logits
// z_t . z_v / tau. Gradients are optional.
double contrastive_loss(const Eigen::MatrixXd& text, const Eigen::MatrixXd& video,
                        double tau, Eigen::MatrixXd* grad_text = nullptr,
                        Eigen::MatrixXd* grad_video = nullptr,
                        double* grad_tau = nullptr);

// Relative error |a - n| / max(|a|, |n|, floor) between analytic gradient and
// central differences with `step`, on the given coordinates; returns the max.
double compare_gradients(const std::function<double(const Eigen::VectorXd&)>& loss,
                         const Eigen::VectorXd& point, const Eigen::VectorXd& analytic,
                         const std::vector<int>& coords, double step = 1e-4,
                         double floor = 1e-6);

struct GradientCheck {
  double contrast = 0.0;
  double match = 0.0;
  double mlm = 0.0;

  double max() const { return std::max({contrast, match, mlm}); }
};

// Checks each objective separately on `num_coords` random coordinates.
// `sabotage` zeroes the analytic gradient, which must be detected.
GradientCheck gradient_check(const ProbeModel& model, const ProbeBatchData& data,
                             const BatchPlan& plan, int num_coords, Rng& rng,
                             bool sabotage = false);

struct Embeddings {
  Eigen::MatrixXd video;  // one unit row per example
  Eigen::MatrixXd text;
};

struct PreparedSplit {
  ProbeBatchData data;
  std::vector<std::string> captions;
  std::size_t degenerate = 0;
};

PreparedSplit prepare_split(const ProbeModel& model, const std::vector<ProbeExample>& examples,
                            const Vocabulary& vocab);

Embeddings embed(const ProbeModel& model, const ProbeBatchData& data);

struct RetrievalMetrics {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double average = 0.0;
  double chance_r1 = 0.0;  // expected R@1 of random scores
  int hits_r1 = 0;
  int queries = 0;
};

// Ranks candidates per query row of `scores` (higher is better). A query
// counts as a hit at K when any correct candidate ranks within K; ties are
// resolved against the correct candidates.
RetrievalMetrics evaluate_retrieval(const Eigen::MatrixXd& scores,
                                    const std::vector<std::vector<int>>& correct);

// Correct video set per caption: every video whose caption is identical.
std::vector<std::vector<int>> correct_sets(const std::vector<std::string>& captions);

// Text-to-video retrieval by cosine similarity.
RetrievalMetrics text_to_video(const ProbeModel& model, const PreparedSplit& split);

// Accuracy of the masked-token head on direction words, masking one at a time.
double direction_accuracy(const ProbeModel& model, const PreparedSplit& split);

struct EpochLoss {
  int epoch = 0;
  LossTerms loss;  // mean over the epoch's batches
};

struct TrainedProbe {
  Vocabulary vocab;
  ProbeModel model;
  std::vector<EpochLoss> curve;
  std::vector<std::string> warnings;
};

// Throws ArgumentError with fewer than two examples and NumericError when a
// loss turns non-finite.
TrainedProbe train_probe(const std::vector<ProbeExample>& train, const Vocabulary& vocab,
                         const ProbeHyperparams& hp);

// Smallest k with P(X <= k) >= q for X ~ Binomial(n, p).
int binomial_quantile(int n, double p, double q);

struct ProbeReport {
  RetrievalMetrics heldout;
  RetrievalMetrics untrained;
  RetrievalMetrics shuffled;
  int chance_upper_hits = 0;  // 97.5% binomial quantile of R@1 hits at chance
  double direction_accuracy_video = 0.0;
  double direction_accuracy_blind = 0.0;
  std::vector<EpochLoss> curve;
  std::vector<std::string> warnings;
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
  std::size_t degenerate = 0;
};

// Trains the probe and, when `controls` is set, the shuffled-label and
// video-blind controls as well.
ProbeReport run_probe(const std::vector<ProbeExample>& train,
                      const std::vector<ProbeExample>& heldout,
                      const ProbeHyperparams& hp, bool controls = true);

nlohmann::ordered_json to_json(const RetrievalMetrics& m);
nlohmann::ordered_json to_json(const ProbeReport& report);
std::string loss_curve_csv(const std::vector<EpochLoss>& curve);

}  // namespace motionsynth
