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

#include "motionsynth/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "motionsynth/errors.hpp"

namespace motionsynth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename T>
void read_optional(const nlohmann::ordered_json& j, const char* key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("probe.") + key + " has the wrong type");
  }
}

VectorXd tanh_of(const VectorXd& v) { return v.array().tanh().matrix(); }

// Log-sum-exp of a vector.
double lse(const VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

VectorXd softmax(const VectorXd& v) {
  VectorXd e = (v.array() - v.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Backpropagates dz through z = u / |u|.
VectorXd normalize_backward(const VectorXd& z, double norm, const VectorXd& dz) {
  return (dz - z * z.dot(dz)) / norm;
}

struct VideoCache {
  VectorXd h;
  VectorXd z;
  double norm = 1.0;
};

struct TextCache {
  std::vector<int> ids;       // possibly masked
  std::vector<VectorXd> act;  // a_j
  std::vector<int> clause_count;
  VectorXd pooled;
  VectorXd g;
  VectorXd z;
  double norm = 1.0;
};

class Forward {
 public:
  Forward(const ProbeModel& m, const VectorXd& p) : m_(m), p_(p) {}

  VideoCache video(const VectorXd& x) const {
    const auto V1 = m_.view(p_, "video.w1");
    const auto v1 = m_.view(p_, "video.b1");
    const auto V2 = m_.view(p_, "video.w2");
    const auto v2 = m_.view(p_, "video.b2");
    VideoCache c;
    c.h = tanh_of(V1 * x + v1.col(0));
    const VectorXd u = V2 * c.h + v2.col(0);
    c.norm = std::max(u.norm(), 1e-12);
    c.z = u / c.norm;
    return c;
  }

  // Pooled clause activations of a token sequence.
  void pool(const EncodedCaption& cap, const std::vector<int>& ids, TextCache& c) const {
    const auto E = m_.view(p_, "text.embed");
    const auto F = m_.view(p_, "text.prev");
    const int dt = m_.hp.token_dim;
    c.ids = ids;
    c.act.assign(ids.size(), VectorXd());
    c.clause_count.assign(static_cast<std::size_t>(m_.num_clauses), 0);
    c.pooled = VectorXd::Zero(m_.text_dim());
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const int prev = j == 0 ? Vocabulary::kBegin : ids[j - 1];
      c.act[j] = tanh_of(E.col(ids[j]) + F.col(prev));
      const int cl = cap.clause[j];
      if (cl >= m_.num_clauses) continue;
      c.pooled.segment(cl * dt, dt) += c.act[j];
      ++c.clause_count[static_cast<std::size_t>(cl)];
    }
    for (int cl = 0; cl < m_.num_clauses; ++cl) {
      if (c.clause_count[static_cast<std::size_t>(cl)] > 0) {
        c.pooled.segment(cl * dt, dt) /= c.clause_count[static_cast<std::size_t>(cl)];
      }
    }
  }

  TextCache text(const EncodedCaption& cap) const {
    TextCache c;
    pool(cap, cap.ids, c);
    const auto T1 = m_.view(p_, "text.w1");
    const auto t1 = m_.view(p_, "text.b1");
    const auto T2 = m_.view(p_, "text.w2");
    const auto t2 = m_.view(p_, "text.b2");
    c.g = tanh_of(T1 * c.pooled + t1.col(0));
    const VectorXd w = T2 * c.g + t2.col(0);
    c.norm = std::max(w.norm(), 1e-12);
    c.z = w / c.norm;
    return c;
  }

  VectorXd mlm_input(const VectorXd& zv, const EncodedCaption& cap, const TextCache& masked,
                     int position) const {
    const auto F = m_.view(p_, "text.prev");
    const int d = m_.hp.embed_dim;
    const int dt = m_.hp.token_dim;
    VectorXd x = VectorXd::Zero(d + m_.text_dim() + dt + m_.num_clauses);
    if (!m_.hp.video_blind) x.head(d) = zv;
    x.segment(d, m_.text_dim()) = masked.pooled;
    const int prev = position == 0 ? Vocabulary::kBegin : masked.ids[position - 1];
    x.segment(d + m_.text_dim(), dt) = F.col(prev);
    const int cl = std::min(cap.clause[position], m_.num_clauses - 1);
    x(d + m_.text_dim() + dt + cl) = 1.0;
    return x;
  }

  // Returns (hidden, logits).
  std::pair<VectorXd, VectorXd> mlm_head(const VectorXd& x) const {
    const auto R = m_.view(p_, "mlm.w1");
    const auto r = m_.view(p_, "mlm.b1");
    const auto O = m_.view(p_, "mlm.w2");
    const auto o = m_.view(p_, "mlm.b2");
    VectorXd hidden = tanh_of(R * x + r.col(0));
    VectorXd logits = O * hidden + o.col(0);
    return {std::move(hidden), std::move(logits)};
  }

 private:
  const ProbeModel& m_;
  const VectorXd& p_;
};

class Backward {
 public:
  Backward(const ProbeModel& m, const VectorXd& p, VectorXd& g) : m_(m), p_(p), g_(g) {}

  void video(const VectorXd& x, const VideoCache& c, const VectorXd& dz) {
    const auto V2 = m_.view(p_, "video.w2");
    const VectorXd du = normalize_backward(c.z, c.norm, dz);
    m_.view(g_, "video.w2") += du * c.h.transpose();
    m_.view(g_, "video.b2").col(0) += du;
    const VectorXd dpre = ((V2.transpose() * du).array() * (1.0 - c.h.array().square())).matrix();
    m_.view(g_, "video.w1") += dpre * x.transpose();
    m_.view(g_, "video.b1").col(0) += dpre;
  }

  void pooled(const EncodedCaption& cap, const TextCache& c, const VectorXd& dpooled) {
    auto dE = m_.view(g_, "text.embed");
    auto dF = m_.view(g_, "text.prev");
    const int dt = m_.hp.token_dim;
    for (std::size_t j = 0; j < c.ids.size(); ++j) {
      const int cl = cap.clause[j];
      if (cl >= m_.num_clauses) continue;
      const VectorXd da = dpooled.segment(cl * dt, dt) / c.clause_count[static_cast<std::size_t>(cl)];
      const VectorXd dpre = (da.array() * (1.0 - c.act[j].array().square())).matrix();
      const int prev = j == 0 ? Vocabulary::kBegin : c.ids[j - 1];
      dE.col(c.ids[j]) += dpre;
      dF.col(prev) += dpre;
    }
  }

  void text(const EncodedCaption& cap, const TextCache& c, const VectorXd& dz) {
    const auto T1 = m_.view(p_, "text.w1");
    const auto T2 = m_.view(p_, "text.w2");
    const VectorXd dw = normalize_backward(c.z, c.norm, dz);
    m_.view(g_, "text.w2") += dw * c.g.transpose();
    m_.view(g_, "text.b2").col(0) += dw;
    const VectorXd dpre = ((T2.transpose() * dw).array() * (1.0 - c.g.array().square())).matrix();
    m_.view(g_, "text.w1") += dpre * c.pooled.transpose();
    m_.view(g_, "text.b1").col(0) += dpre;
    pooled(cap, c, T1.transpose() * dpre);
  }

  // Gradient of the MLM input x, routed to its sources.
  void mlm_input(const EncodedCaption& cap, const TextCache& masked, int position,
                 const VectorXd& dx, VectorXd& dzv) {
    const int d = m_.hp.embed_dim;
    const int dt = m_.hp.token_dim;
    if (!m_.hp.video_blind) dzv += dx.head(d);
    pooled(cap, masked, dx.segment(d, m_.text_dim()));
    const int prev = position == 0 ? Vocabulary::kBegin : masked.ids[position - 1];
    m_.view(g_, "text.prev").col(prev) += dx.segment(d + m_.text_dim(), dt);
  }

 private:
  const ProbeModel& m_;
  const VectorXd& p_;
  VectorXd& g_;
};

std::vector<int> masked_ids(const EncodedCaption& cap, const std::vector<int>& positions) {
  std::vector<int> ids = cap.ids;
  for (int p : positions) ids[static_cast<std::size_t>(p)] = Vocabulary::kMask;
  return ids;
}

}  // namespace

MaskMoments mask_moments(const RgbImage& frame, const RgbImage& background, int threshold) {
  if (frame.width != background.width || frame.height != background.height) {
    throw ArgumentError("mask_moments: frame and background sizes differ");
  }
  MaskMoments m;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const std::uint8_t* a = frame.at(x, y);
      const std::uint8_t* b = background.at(x, y);
      const int diff = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
      if (diff <= threshold) continue;
      const double px = x + 0.5;
      const double py = y + 0.5;
      m.area += 1.0;
      sx += px;
      sy += py;
      sxx += px * px;
      syy += py * py;
      sxy += px * py;
    }
  }
  if (m.empty()) return m;
  m.cx = sx / m.area;
  m.cy = sy / m.area;
  m.mu20 = sxx / m.area - m.cx * m.cx;
  m.mu02 = syy / m.area - m.cy * m.cy;
  m.mu11 = sxy / m.area - m.cx * m.cy;
  return m;
}

VideoFeature extract_video_feature(const FrameSeq& frames, const FrameSeq& background,
                                   int threshold) {
  if (frames.size() != background.size()) {
    throw ArgumentError("extract_video_feature: frame counts differ");
  }
  const int n = frames.size();
  VideoFeature f;
  f.values = VectorXd::Zero(static_cast<Eigen::Index>(n) * kFeaturesPerFrame);
  f.degenerate = true;
  const double w = frames.width();
  const double h = frames.height();
  std::vector<MaskMoments> moments;
  for (int i = 0; i < n; ++i) {
    moments.push_back(mask_moments(frames.frames[i], background.frames[i], threshold));
    if (!moments.back().empty()) f.degenerate = false;
  }
  if (f.degenerate) return f;
  for (int i = 0; i < n; ++i) {
    const MaskMoments& m = moments[static_cast<std::size_t>(i)];
    if (m.empty()) continue;
    auto out = f.values.segment(static_cast<Eigen::Index>(i) * kFeaturesPerFrame, kFeaturesPerFrame);
    out(0) = m.cx / w;
    out(1) = m.cy / h;
    if (i > 0 && !moments[static_cast<std::size_t>(i - 1)].empty()) {
      out(2) = (m.cx - moments[static_cast<std::size_t>(i - 1)].cx) / w;
      out(3) = (m.cy - moments[static_cast<std::size_t>(i - 1)].cy) / h;
    }
    out(4) = m.area / (w * h);
    const double c2 = m.mu20 - m.mu02;
    const double s2 = 2.0 * m.mu11;
    const double r = std::hypot(c2, s2);
    if (r > 1e-12) {
      out(5) = c2 / r;
      out(6) = s2 / r;
    }
  }
  return f;
}

Vocabulary::Vocabulary(const std::vector<std::string>& object_names) {
  tokens_ = {"[PAD]", "[MASK]", "[UNK]", "[BOS]", "A", "the", "in", "first", "before",
             "it", "moves", "diagonally", "while", "rotating", "stays", "still"};
  for (auto w : {SizeWord::kBig, SizeWord::kSmall}) tokens_.emplace_back(to_string(w));
  for (int p = 0; p < 9; ++p) tokens_.emplace_back(to_string(static_cast<Position>(p)));
  for (auto w : {Speed::kQuickly, Speed::kSlowly}) tokens_.emplace_back(to_string(w));
  for (auto w : {Direction::kUpwards, Direction::kRight, Direction::kDownwards, Direction::kLeft}) {
    tokens_.emplace_back(to_string(w));
  }
  for (auto w : {Distance::kALot, Distance::kALittle}) tokens_.emplace_back(to_string(w));
  for (auto w : {RotAmount::kSlightly, RotAmount::kSignificantly}) tokens_.emplace_back(to_string(w));
  std::set<std::string> objects(object_names.begin(), object_names.end());
  for (const std::string& o : objects) tokens_.push_back(o);
  // Position and direction share "left" and "right"; keep one id each.
  std::vector<std::string> unique;
  for (std::string& t : tokens_) {
    if (ids_.emplace(t, static_cast<int>(unique.size())).second) unique.push_back(std::move(t));
  }
  tokens_ = std::move(unique);
}

int Vocabulary::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnknown : it->second;
}

EncodedCaption encode_caption(const CaptionSlots& slots, const Vocabulary& vocab) {
  EncodedCaption out;
  for (const TaggedToken& t : render_tokens(slots)) {
    if (t.kind == SlotKind::kComma) continue;
    out.ids.push_back(vocab.id(t.text));
    out.clause.push_back(t.segment + 1);
    out.kinds.push_back(t.kind);
  }
  return out;
}

bool maskable(SlotKind kind) {
  return kind != SlotKind::kArticle && kind != SlotKind::kThe && kind != SlotKind::kComma;
}

void ProbeHyperparams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("probe: ") + what);
  };
  require(video_hidden > 0 && text_hidden > 0 && embed_dim > 0 && token_dim > 0 &&
              match_hidden > 0 && mlm_hidden > 0,
          "layer sizes must be positive");
  require(epochs >= 0, "epochs must be non-negative");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate > 0, "learning_rate must be positive");
  require(clip_norm > 0, "clip_norm must be positive");
  require(tau_min > 0 && tau_min <= tau_init && tau_init <= tau_max, "need 0 < tau_min <= tau_init <= tau_max");
  require(weight_contrast >= 0 && weight_match >= 0 && weight_mlm >= 0, "loss weights must be non-negative");
  require(mask_fraction > 0 && mask_fraction <= 1, "mask_fraction must be in (0, 1]");
  require(mask_threshold >= 0, "mask_threshold must be non-negative");
  require(train_count >= 2 && heldout_count >= 10, "need train_count >= 2 and heldout_count >= 10");
}

nlohmann::ordered_json to_json(const ProbeHyperparams& hp) {
  nlohmann::ordered_json j;
  j["video_hidden"] = hp.video_hidden;
  j["text_hidden"] = hp.text_hidden;
  j["embed_dim"] = hp.embed_dim;
  j["token_dim"] = hp.token_dim;
  j["match_hidden"] = hp.match_hidden;
  j["mlm_hidden"] = hp.mlm_hidden;
  j["epochs"] = hp.epochs;
  j["batch_size"] = hp.batch_size;
  j["learning_rate"] = hp.learning_rate;
  j["clip_norm"] = hp.clip_norm;
  j["tau_init"] = hp.tau_init;
  j["tau_min"] = hp.tau_min;
  j["tau_max"] = hp.tau_max;
  j["weight_contrast"] = hp.weight_contrast;
  j["weight_match"] = hp.weight_match;
  j["weight_mlm"] = hp.weight_mlm;
  j["mask_fraction"] = hp.mask_fraction;
  j["mask_threshold"] = hp.mask_threshold;
  j["seed"] = hp.seed;
  j["train_count"] = hp.train_count;
  j["heldout_count"] = hp.heldout_count;
  j["shuffle_labels"] = hp.shuffle_labels;
  j["video_blind"] = hp.video_blind;
  return j;
}

ProbeHyperparams probe_hyperparams_from_json(const nlohmann::ordered_json& j,
                                             ProbeHyperparams hp) {
  if (!j.is_object()) throw ConfigError("probe config must be an object");
  read_optional(j, "video_hidden", hp.video_hidden);
  read_optional(j, "text_hidden", hp.text_hidden);
  read_optional(j, "embed_dim", hp.embed_dim);
  read_optional(j, "token_dim", hp.token_dim);
  read_optional(j, "match_hidden", hp.match_hidden);
  read_optional(j, "mlm_hidden", hp.mlm_hidden);
  read_optional(j, "epochs", hp.epochs);
  read_optional(j, "batch_size", hp.batch_size);
  read_optional(j, "learning_rate", hp.learning_rate);
  read_optional(j, "clip_norm", hp.clip_norm);
  read_optional(j, "tau_init", hp.tau_init);
  read_optional(j, "tau_min", hp.tau_min);
  read_optional(j, "tau_max", hp.tau_max);
  read_optional(j, "weight_contrast", hp.weight_contrast);
  read_optional(j, "weight_match", hp.weight_match);
  read_optional(j, "weight_mlm", hp.weight_mlm);
  read_optional(j, "mask_fraction", hp.mask_fraction);
  read_optional(j, "mask_threshold", hp.mask_threshold);
  read_optional(j, "seed", hp.seed);
  read_optional(j, "train_count", hp.train_count);
  read_optional(j, "heldout_count", hp.heldout_count);
  read_optional(j, "shuffle_labels", hp.shuffle_labels);
  read_optional(j, "video_blind", hp.video_blind);
  return hp;
}

ProbeModel::ProbeModel(const ProbeHyperparams& h, int feat_dim, int vocab, int clauses, Rng& rng)
    : feature_dim(feat_dim), vocab_size(vocab), num_clauses(clauses), hp(h) {
  const int d = hp.embed_dim;
  const int dt = hp.token_dim;
  const int mlm_in = d + clauses * dt + dt + clauses;
  int offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    blocks.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  add("video.w1", hp.video_hidden, feat_dim);
  add("video.b1", hp.video_hidden, 1);
  add("video.w2", d, hp.video_hidden);
  add("video.b2", d, 1);
  add("text.embed", dt, vocab);
  add("text.prev", dt, vocab);
  add("text.w1", hp.text_hidden, clauses * dt);
  add("text.b1", hp.text_hidden, 1);
  add("text.w2", d, hp.text_hidden);
  add("text.b2", d, 1);
  add("match.w1", hp.match_hidden, 3 * d);
  add("match.b1", hp.match_hidden, 1);
  add("match.w2", 1, hp.match_hidden);
  add("match.b2", 1, 1);
  add("mlm.w1", hp.mlm_hidden, mlm_in);
  add("mlm.b1", hp.mlm_hidden, 1);
  add("mlm.w2", vocab, hp.mlm_hidden);
  add("mlm.b2", vocab, 1);
  add("tau", 1, 1);
  params = VectorXd::Zero(offset);
  for (const Block& b : blocks) {
    if (b.cols == 1 && b.name != "tau") continue;  // biases start at zero
    double scale = std::sqrt(6.0 / (b.rows + b.cols));
    if (b.name == "text.embed" || b.name == "text.prev") scale = 0.5;
    for (int k = 0; k < b.rows * b.cols; ++k) params(b.offset + k) = rng.uniform(-scale, scale);
  }
  params(block("tau").offset) = hp.tau_init;
  feature_mean = VectorXd::Zero(feat_dim);
  feature_scale = VectorXd::Ones(feat_dim);
}

const ProbeModel::Block& ProbeModel::block(const std::string& name) const {
  for (const Block& b : blocks) {
    if (b.name == name) return b;
  }
  throw ArgumentError("unknown parameter block " + name);
}

Eigen::Map<MatrixXd> ProbeModel::view(VectorXd& flat, const std::string& name) const {
  const Block& b = block(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const MatrixXd> ProbeModel::view(const VectorXd& flat, const std::string& name) const {
  const Block& b = block(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

double ProbeModel::tau() const {
  return std::clamp(params(block("tau").offset), hp.tau_min, hp.tau_max);
}

BatchPlan plan_batch(const std::vector<int>& members, const std::vector<EncodedCaption>& captions,
                     double mask_fraction, Rng& rng) {
  BatchPlan plan;
  plan.members = members;
  const auto b = static_cast<std::uint64_t>(members.size());
  plan.negative_shift = b > 1 ? static_cast<int>(1 + rng.below(b - 1)) : 0;
  for (int m : members) {
    const EncodedCaption& cap = captions[static_cast<std::size_t>(m)];
    std::vector<int> candidates;
    for (std::size_t j = 0; j < cap.kinds.size(); ++j) {
      if (maskable(cap.kinds[j])) candidates.push_back(static_cast<int>(j));
    }
    std::vector<int> chosen;
    if (!candidates.empty()) {
      const auto count = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(mask_fraction * static_cast<double>(candidates.size()))),
          1, candidates.size());
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pick = k + rng.below(candidates.size() - k);
        std::swap(candidates[k], candidates[pick]);
        chosen.push_back(candidates[k]);
      }
      std::sort(chosen.begin(), chosen.end());
    }
    plan.masked.push_back(std::move(chosen));
  }
  return plan;
}

double contrastive_loss(const MatrixXd& text, const MatrixXd& video, double tau,
                        MatrixXd* grad_text, MatrixXd* grad_video, double* grad_tau) {
  const Eigen::Index b = text.rows();
  const MatrixXd s = text * video.transpose() / tau;
  double loss = 0.0;
  MatrixXd ds = MatrixXd::Zero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const VectorXd row = s.row(i).transpose();
    loss += lse(row) - s(i, i);
    ds.row(i) += softmax(row).transpose();
    ds(i, i) -= 1.0;
    const VectorXd col = s.col(i);
    loss += lse(col) - s(i, i);
    ds.col(i) += softmax(col);
    ds(i, i) -= 1.0;
  }
  const double scale = 0.5 / static_cast<double>(b);
  ds *= scale;
  if (grad_text) *grad_text = ds * video / tau;
  if (grad_video) *grad_video = ds.transpose() * text / tau;
  if (grad_tau) *grad_tau = -(ds.array() * s.array()).sum() / tau;
  return loss * scale;
}

LossTerms probe_loss(const ProbeModel& model, const VectorXd& params, const ProbeBatchData& data,
                     const BatchPlan& plan, VectorXd* grad) {
  const ProbeHyperparams& hp = model.hp;
  const int d = hp.embed_dim;
  const auto b = static_cast<Eigen::Index>(plan.members.size());
  Forward fwd(model, params);
  VectorXd local_grad;
  if (grad != nullptr) {
    grad->setZero(params.size());
  }

  std::vector<VideoCache> vc;
  std::vector<TextCache> tc;
  MatrixXd zv(b, d);
  MatrixXd zt(b, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto m = static_cast<std::size_t>(plan.members[static_cast<std::size_t>(i)]);
    vc.push_back(fwd.video(data.features[m]));
    tc.push_back(fwd.text(data.captions[m]));
    zv.row(i) = vc.back().z.transpose();
    zt.row(i) = tc.back().z.transpose();
  }
  MatrixXd dzv = MatrixXd::Zero(b, d);
  MatrixXd dzt = MatrixXd::Zero(b, d);
  LossTerms out;

  // (i) contrast
  const double tau = std::clamp(params(model.block("tau").offset), hp.tau_min, hp.tau_max);
  double dtau = 0.0;
  if (b > 1 && hp.weight_contrast > 0) {
    MatrixXd gt, gv;
    out.contrast = contrastive_loss(zt, zv, tau, &gt, &gv, &dtau);
    dzt += hp.weight_contrast * gt;
    dzv += hp.weight_contrast * gv;
    dtau *= hp.weight_contrast;
  }

  // (ii) matching: positives (i, i) and negatives (i, i + shift).
  if (hp.weight_match > 0) {
    const auto A = model.view(params, "match.w1");
    const auto a = model.view(params, "match.b1");
    const auto q = model.view(params, "match.w2");
    const double q0 = model.view(params, "match.b2")(0, 0);
    const bool negatives = b > 1 && plan.negative_shift > 0;
    const double pairs = static_cast<double>(negatives ? 2 * b : b);
    for (Eigen::Index i = 0; i < b; ++i) {
      for (int neg = 0; neg < (negatives ? 2 : 1); ++neg) {
        const Eigen::Index k = neg ? (i + plan.negative_shift) % b : i;
        const double y = neg ? 0.0 : 1.0;
        VectorXd in(3 * d);
        in << zv.row(i).transpose(), zt.row(k).transpose(),
            (zv.row(i).array() * zt.row(k).array()).matrix().transpose();
        const VectorXd h = tanh_of(A * in + a.col(0));
        const double s = (q * h)(0) + q0;
        out.match += (softplus(s) - y * s) / pairs;
        if (grad == nullptr) continue;
        const double ds = hp.weight_match * (sigmoid(s) - y) / pairs;
        model.view(*grad, "match.w2") += ds * h.transpose();
        model.view(*grad, "match.b2")(0, 0) += ds;
        const VectorXd dpre = ((q.transpose() * ds).array() * (1.0 - h.array().square())).matrix();
        model.view(*grad, "match.w1") += dpre * in.transpose();
        model.view(*grad, "match.b1").col(0) += dpre;
        const VectorXd din = A.transpose() * dpre;
        dzv.row(i) += (din.head(d) + (din.tail(d).array() * zt.row(k).transpose().array()).matrix())
                          .transpose();
        dzt.row(k) += (din.segment(d, d) +
                       (din.tail(d).array() * zv.row(i).transpose().array()).matrix())
                          .transpose();
      }
    }
  }

  // (iii) masked tokens, conditioned on the video embedding.
  if (hp.weight_mlm > 0) {
    std::size_t total = 0;
    for (const auto& m : plan.masked) total += m.size();
    Backward bwd(model, params, grad != nullptr ? *grad : local_grad);
    for (Eigen::Index i = 0; i < b && total > 0; ++i) {
      const auto m = static_cast<std::size_t>(plan.members[static_cast<std::size_t>(i)]);
      const EncodedCaption& cap = data.captions[m];
      const auto& positions = plan.masked[static_cast<std::size_t>(i)];
      if (positions.empty()) continue;
      TextCache masked;
      fwd.pool(cap, masked_ids(cap, positions), masked);
      VectorXd dzv_i = VectorXd::Zero(d);
      for (int p : positions) {
        const VectorXd x = fwd.mlm_input(vc[static_cast<std::size_t>(i)].z, cap, masked, p);
        const auto [hidden, logits] = fwd.mlm_head(x);
        const int target = cap.ids[static_cast<std::size_t>(p)];
        out.mlm += (lse(logits) - logits(target)) / static_cast<double>(total);
        if (grad == nullptr) continue;
        VectorXd dlogits = softmax(logits);
        dlogits(target) -= 1.0;
        dlogits *= hp.weight_mlm / static_cast<double>(total);
        model.view(*grad, "mlm.w2") += dlogits * hidden.transpose();
        model.view(*grad, "mlm.b2").col(0) += dlogits;
        const auto O = model.view(params, "mlm.w2");
        const auto R = model.view(params, "mlm.w1");
        const VectorXd dpre =
            ((O.transpose() * dlogits).array() * (1.0 - hidden.array().square())).matrix();
        model.view(*grad, "mlm.w1") += dpre * x.transpose();
        model.view(*grad, "mlm.b1").col(0) += dpre;
        bwd.mlm_input(cap, masked, p, R.transpose() * dpre, dzv_i);
      }
      dzv.row(i) += dzv_i.transpose();
    }
  }

  out.total = hp.weight_contrast * out.contrast + hp.weight_match * out.match +
              hp.weight_mlm * out.mlm;
  if (grad == nullptr) return out;

  Backward bwd(model, params, *grad);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto m = static_cast<std::size_t>(plan.members[static_cast<std::size_t>(i)]);
    bwd.video(data.features[m], vc[static_cast<std::size_t>(i)], dzv.row(i).transpose());
    bwd.text(data.captions[m], tc[static_cast<std::size_t>(i)], dzt.row(i).transpose());
  }
  const double raw_tau = params(model.block("tau").offset);
  if (raw_tau > hp.tau_min && raw_tau < hp.tau_max) (*grad)(model.block("tau").offset) += dtau;
  return out;
}

double compare_gradients(const std::function<double(const VectorXd&)>& loss,
                         const VectorXd& point, const VectorXd& analytic,
                         const std::vector<int>& coords, double step, double floor) {
  double worst = 0.0;
  VectorXd probe = point;
  for (int c : coords) {
    const double keep = probe(c);
    probe(c) = keep + step;
    const double up = loss(probe);
    probe(c) = keep - step;
    const double down = loss(probe);
    probe(c) = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic(c);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

GradientCheck gradient_check(const ProbeModel& model, const ProbeBatchData& data,
                             const BatchPlan& plan, int num_coords, Rng& rng, bool sabotage) {
  GradientCheck out;
  auto run = [&](double wc, double wm, double wl) {
    ProbeModel single = model;
    single.hp.weight_contrast = wc;
    single.hp.weight_match = wm;
    single.hp.weight_mlm = wl;
    VectorXd grad;
    probe_loss(single, single.params, data, plan, &grad);
    if (sabotage) grad.setZero();
    // Only coordinates the objective actually touches are informative.
    std::vector<int> live;
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      if (grad(k) != 0.0 || sabotage) live.push_back(static_cast<int>(k));
    }
    std::vector<int> coords;
    for (int k = 0; k < num_coords && !live.empty(); ++k) {
      coords.push_back(live[static_cast<std::size_t>(rng.below(live.size()))]);
    }
    auto loss = [&](const VectorXd& p) { return probe_loss(single, p, data, plan, nullptr).total; };
    return compare_gradients(loss, single.params, grad, coords);
  };
  out.contrast = run(1, 0, 0);
  out.match = run(0, 1, 0);
  out.mlm = run(0, 0, 1);
  return out;
}

PreparedSplit prepare_split(const ProbeModel& model, const std::vector<ProbeExample>& examples,
                            const Vocabulary& vocab) {
  PreparedSplit split;
  for (const ProbeExample& e : examples) {
    if (e.video.values.size() != model.feature_dim) {
      throw ArgumentError("probe: video feature length differs from the model's");
    }
    split.data.features.push_back(
        ((e.video.values - model.feature_mean).array() * model.feature_scale.array()).matrix());
    split.data.captions.push_back(encode_caption(e.slots, vocab));
    split.captions.push_back(e.caption);
    if (e.video.degenerate) ++split.degenerate;
  }
  return split;
}

Embeddings embed(const ProbeModel& model, const ProbeBatchData& data) {
  Forward fwd(model, model.params);
  const auto n = static_cast<Eigen::Index>(data.features.size());
  Embeddings e;
  e.video.resize(n, model.hp.embed_dim);
  e.text.resize(n, model.hp.embed_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    e.video.row(i) = fwd.video(data.features[static_cast<std::size_t>(i)]).z.transpose();
    e.text.row(i) = fwd.text(data.captions[static_cast<std::size_t>(i)]).z.transpose();
  }
  return e;
}

RetrievalMetrics evaluate_retrieval(const MatrixXd& scores,
                                    const std::vector<std::vector<int>>& correct) {
  const Eigen::Index n = scores.cols();
  if (scores.rows() == 0 || static_cast<std::size_t>(scores.rows()) != correct.size()) {
    throw ArgumentError("evaluate_retrieval: one correct set per query required");
  }
  RetrievalMetrics m;
  m.queries = static_cast<int>(scores.rows());
  int h5 = 0, h10 = 0;
  double chance = 0.0;
  for (Eigen::Index q = 0; q < scores.rows(); ++q) {
    const auto& good = correct[static_cast<std::size_t>(q)];
    if (good.empty()) throw ArgumentError("evaluate_retrieval: empty correct set");
    std::vector<bool> is_good(static_cast<std::size_t>(n), false);
    double best = -std::numeric_limits<double>::infinity();
    for (int g : good) {
      is_good[static_cast<std::size_t>(g)] = true;
      best = std::max(best, scores(q, g));
    }
    int rank = 1;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!is_good[static_cast<std::size_t>(c)] && scores(q, c) >= best) ++rank;
    }
    m.hits_r1 += rank <= 1;
    h5 += rank <= 5;
    h10 += rank <= 10;
    chance += static_cast<double>(good.size()) / static_cast<double>(n);
  }
  const double queries = m.queries;
  m.r1 = m.hits_r1 / queries;
  m.r5 = h5 / queries;
  m.r10 = h10 / queries;
  m.average = (m.r1 + m.r5 + m.r10) / 3.0;
  m.chance_r1 = chance / queries;
  return m;
}

std::vector<std::vector<int>> correct_sets(const std::vector<std::string>& captions) {
  std::map<std::string, std::vector<int>> by_text;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    by_text[captions[i]].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> out;
  for (const std::string& c : captions) out.push_back(by_text[c]);
  return out;
}

RetrievalMetrics text_to_video(const ProbeModel& model, const PreparedSplit& split) {
  const Embeddings e = embed(model, split.data);
  return evaluate_retrieval(e.text * e.video.transpose(), correct_sets(split.captions));
}

double direction_accuracy(const ProbeModel& model, const PreparedSplit& split) {
  Forward fwd(model, model.params);
  int total = 0, right = 0;
  for (std::size_t i = 0; i < split.data.captions.size(); ++i) {
    const EncodedCaption& cap = split.data.captions[i];
    const VideoCache vc = fwd.video(split.data.features[i]);
    for (std::size_t j = 0; j < cap.kinds.size(); ++j) {
      if (cap.kinds[j] != SlotKind::kDirection) continue;
      TextCache masked;
      fwd.pool(cap, masked_ids(cap, {static_cast<int>(j)}), masked);
      const auto [hidden, logits] = fwd.mlm_head(fwd.mlm_input(vc.z, cap, masked, static_cast<int>(j)));
      Eigen::Index best = 0;
      logits.maxCoeff(&best);
      right += best == cap.ids[j];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(right) / total;
}

TrainedProbe train_probe(const std::vector<ProbeExample>& train, const Vocabulary& vocab,
                         const ProbeHyperparams& hp) {
  if (train.size() < 2) throw ArgumentError("probe needs at least two training pairs");
  const auto dim = static_cast<int>(train.front().video.values.size());
  int clauses = 1;
  for (const ProbeExample& e : train) {
    clauses = std::max(clauses, static_cast<int>(e.slots.segments.size()) + 1);
  }
  Rng rng(hp.seed);
  TrainedProbe out{vocab, ProbeModel(hp, dim, vocab.size(), clauses, rng), {}, {}};
  ProbeModel& model = out.model;

  VectorXd mean = VectorXd::Zero(dim);
  for (const ProbeExample& e : train) mean += e.video.values;
  mean /= static_cast<double>(train.size());
  VectorXd var = VectorXd::Zero(dim);
  for (const ProbeExample& e : train) var += (e.video.values - mean).array().square().matrix();
  var /= static_cast<double>(train.size());
  model.feature_mean = mean;
  model.feature_scale = var.unaryExpr([](double v) { return v > 1e-16 ? 1.0 / std::sqrt(v) : 1.0; });

  std::vector<ProbeExample> pairs = train;
  if (hp.shuffle_labels) {
    std::vector<std::size_t> perm(pairs.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = perm.size() - 1; k > 0; --k) {
      std::swap(perm[k], perm[static_cast<std::size_t>(rng.below(k + 1))]);
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      pairs[k].slots = train[perm[k]].slots;
      pairs[k].caption = train[perm[k]].caption;
    }
  }
  const PreparedSplit split = prepare_split(model, pairs, vocab);

  const int batch = std::min<int>(hp.batch_size, static_cast<int>(pairs.size()));
  if (batch == 1) out.warnings.push_back("batch size 1: contrast objective skipped");
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  const int tau_at = model.block("tau").offset;
  VectorXd grad;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t k = order.size() - 1; k > 0; --k) {
      std::swap(order[k], order[static_cast<std::size_t>(rng.below(k + 1))]);
    }
    LossTerms sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
      if (stop - start < 2 && batch > 1) continue;  // a lone leftover pair has no negatives
      const std::vector<int> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      const BatchPlan plan = plan_batch(members, split.data.captions, hp.mask_fraction, rng);
      const LossTerms loss = probe_loss(model, model.params, split.data, plan, &grad);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "probe loss became non-finite at epoch " << epoch << " (contrast " << loss.contrast
            << ", match " << loss.match << ", mlm " << loss.mlm << ", tau " << model.tau() << ")";
        throw NumericError(msg.str());
      }
      const double norm = grad.norm();
      if (norm > hp.clip_norm) grad *= hp.clip_norm / norm;
      model.params -= hp.learning_rate * grad;
      model.params(tau_at) = std::clamp(model.params(tau_at), hp.tau_min, hp.tau_max);
      sum.contrast += loss.contrast;
      sum.match += loss.match;
      sum.mlm += loss.mlm;
      sum.total += loss.total;
      ++batches;
    }
    if (batches > 0) {
      sum.contrast /= batches;
      sum.match /= batches;
      sum.mlm /= batches;
      sum.total /= batches;
    }
    out.curve.push_back({epoch, sum});
  }
  if (!model.params.allFinite()) throw NumericError("probe parameters became non-finite");
  return out;
}

int binomial_quantile(int n, double p, double q) {
  if (n < 0 || p < 0 || p > 1) throw ArgumentError("binomial_quantile: bad parameters");
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  double cdf = 0.0;
  for (int k = 0; k <= n; ++k) {
    cdf += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                    k * std::log(p) + (n - k) * std::log1p(-p));
    if (cdf >= q) return k;
  }
  return n;
}

ProbeReport run_probe(const std::vector<ProbeExample>& train,
                      const std::vector<ProbeExample>& heldout, const ProbeHyperparams& hp,
                      bool controls) {
  hp.validate();
  if (heldout.size() < 10) throw ArgumentError("probe needs at least 10 held-out pairs");
  std::vector<std::string> objects;
  for (const auto* set : {&train, &heldout}) {
    for (const ProbeExample& e : *set) objects.push_back(e.slots.object);
  }
  const Vocabulary vocab(objects);
  ProbeReport report;
  report.train_size = train.size();
  report.heldout_size = heldout.size();

  ProbeHyperparams untrained_hp = hp;
  untrained_hp.epochs = 0;
  const TrainedProbe untrained = train_probe(train, vocab, untrained_hp);
  report.untrained = text_to_video(untrained.model, prepare_split(untrained.model, heldout, vocab));

  const TrainedProbe main = train_probe(train, vocab, hp);
  const PreparedSplit held = prepare_split(main.model, heldout, vocab);
  report.heldout = text_to_video(main.model, held);
  report.degenerate = held.degenerate;
  report.direction_accuracy_video = direction_accuracy(main.model, held);
  report.curve = main.curve;
  report.warnings = main.warnings;
  report.chance_upper_hits =
      binomial_quantile(report.heldout.queries, report.heldout.chance_r1, 0.975);

  if (controls) {
    ProbeHyperparams shuffled_hp = hp;
    shuffled_hp.shuffle_labels = true;
    const TrainedProbe shuffled = train_probe(train, vocab, shuffled_hp);
    report.shuffled = text_to_video(shuffled.model, prepare_split(shuffled.model, heldout, vocab));

    ProbeHyperparams blind_hp = hp;
    blind_hp.video_blind = true;
    const TrainedProbe blind = train_probe(train, vocab, blind_hp);
    report.direction_accuracy_blind =
        direction_accuracy(blind.model, prepare_split(blind.model, heldout, vocab));
  }
  return report;
}

nlohmann::ordered_json to_json(const RetrievalMetrics& m) {
  nlohmann::ordered_json j;
  j["r1"] = m.r1;
  j["r5"] = m.r5;
  j["r10"] = m.r10;
  j["average"] = m.average;
  j["chance_r1"] = m.chance_r1;
  j["hits_r1"] = m.hits_r1;
  j["queries"] = m.queries;
  return j;
}

nlohmann::ordered_json to_json(const ProbeReport& r) {
  nlohmann::ordered_json j;
  j["train_size"] = r.train_size;
  j["heldout_size"] = r.heldout_size;
  j["degenerate_heldout_videos"] = r.degenerate;
  j["text_to_video"] = to_json(r.heldout);
  j["untrained"] = to_json(r.untrained);
  j["shuffled_labels"] = to_json(r.shuffled);
  j["chance_upper_hits_r1"] = r.chance_upper_hits;
  j["direction_accuracy_video"] = r.direction_accuracy_video;
  j["direction_accuracy_blind"] = r.direction_accuracy_blind;
  if (!r.curve.empty()) j["final_loss"] = r.curve.back().loss.total;
  j["warnings"] = r.warnings;
  return j;
}

std::string loss_curve_csv(const std::vector<EpochLoss>& curve) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,contrast,match,mlm,total\n";
  for (const EpochLoss& e : curve) {
    out << e.epoch << ',' << e.loss.contrast << ',' << e.loss.match << ',' << e.loss.mlm << ','
        << e.loss.total << '\n';
  }
  return out.str();
}

}  // namespace motionsynth
