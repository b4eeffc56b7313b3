#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "socialfabric/dataset.hpp"
#include "socialfabric/errors.hpp"
#include "socialfabric/model.hpp"
#include "socialfabric/stage1.hpp"

namespace socialfabric {

struct Stage2Config {
  int n = 25;
  int epochs = 10;
  double lr = 0.01;
  int batch = 128;
  int top_p = 3;
  bool freeze_trunk = false;

  void validate() const {
    require(n >= 1, "stage 2: sample count must be positive");
    require(epochs >= 1 && batch >= 1 && lr > 0.0, "stage 2: bad training config");
    require(top_p >= 1, "stage 2: top_p must be at least 1");
  }
};

// index_i = T1 + floor(i * (T2-T1) / n); repeats when the span is short.
inline std::vector<int> sample_frames(Span span, int n) {
  require(span.length() >= 1, "sample_frames: empty span");
  require(n >= 1, "sample_frames: n must be positive");
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n));
  const long long len = span.length();
  for (int i = 0; i < n; ++i)
    idx.push_back(span.t1 + static_cast<int>(static_cast<long long>(i) * len / n));
  return idx;
}

inline Matrix span_features(const TubeletPair& pair, Span span, int n, const FeatureConfig& cfg,
                            const Matrix* class_embed, const ExternalSet* externals = nullptr) {
  require(span.t1 >= pair.overlap.t1 && span.t2 <= pair.overlap.t2,
          "span_features: span outside the pair overlap");
  const std::vector<int> idx = sample_frames(span, n);
  Matrix S(n, cfg.total_dim());
  for (int r = 0; r < n; ++r)
    feature_row(pair, idx[static_cast<std::size_t>(r)], cfg, class_embed, externals, S.row(r));
  return S;
}

// Softmax over predicate logits on the n-frame encoding; the full ranked
// distribution, ties broken by lower predicate index.
inline std::vector<std::pair<int, double>> predict_predicates(const TubeletPair& pair, Span span,
                                                              const Model& model,
                                                              const Stage2Config& cfg,
                                                              const ExternalSet* externals = nullptr) {
  Matrix S = span_features(pair, span, cfg.n, model.fcfg, &model.class_embed.value, externals);
  SfeCache cache;
  const std::vector<double> probs = softmax(sfe_forward(S, model.params, cache));
  std::vector<std::pair<int, double>> ranked;
  ranked.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) ranked.emplace_back(static_cast<int>(i), probs[i]);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

struct ScoredTriplet {
  RelationInstance instance;  // instance.score mirrors final_score
  double predicate_prob = 0.0;
  double subject_score = 0.0;
  double object_score = 0.0;
  double final_score = 0.0;
};

// Top top_p predicates per proposal, each as one triplet with
// final = predicate_prob * subject_score * object_score; sorted by final
// score, ties by (subject id, object id, predicate id).
inline std::vector<ScoredTriplet> assemble_triplets(const std::vector<InteractionProposal>& proposals,
                                                    const Model& model, const Stage2Config& cfg,
                                                    const ExternalSet* externals = nullptr) {
  cfg.validate();
  std::vector<ScoredTriplet> out;
  out.reserve(proposals.size() * static_cast<std::size_t>(cfg.top_p));
  for (const InteractionProposal& prop : proposals) {
    const auto ranked = predict_predicates(prop.pair, prop.span, model, cfg, externals);
    const int take = std::min<int>(cfg.top_p, static_cast<int>(ranked.size()));
    for (int i = 0; i < take; ++i) {
      ScoredTriplet t;
      t.instance.subject_cat = prop.pair.subject.category;
      t.instance.object_cat = prop.pair.object.category;
      t.instance.predicate = ranked[static_cast<std::size_t>(i)].first;
      t.instance.subject_track = prop.pair.subject;
      t.instance.object_track = prop.pair.object;
      t.instance.subject_id = prop.pair.subject_id;
      t.instance.object_id = prop.pair.object_id;
      t.instance.span = prop.span;
      t.predicate_prob = ranked[static_cast<std::size_t>(i)].second;
      t.subject_score = prop.subject_score;
      t.object_score = prop.object_score;
      t.final_score = t.predicate_prob * t.subject_score * t.object_score;
      t.instance.score = t.final_score;
      out.push_back(std::move(t));
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredTriplet& a, const ScoredTriplet& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.instance.subject_id != b.instance.subject_id)
      return a.instance.subject_id < b.instance.subject_id;
    if (a.instance.object_id != b.instance.object_id)
      return a.instance.object_id < b.instance.object_id;
    return a.instance.predicate < b.instance.predicate;
  });
  return out;
}

namespace detail {

// Highest-vIoU tubelet for a GT track, or -1 when none clears the threshold.
inline int match_track(const std::vector<Tubelet>& tubelets, const Tubelet& gt_track,
                       double thresh = 0.5) {
  int best = -1;
  double best_v = 0.0;
  for (std::size_t i = 0; i < tubelets.size(); ++i) {
    const double v = viou(tubelets[i], gt_track);
    if (v >= thresh && v > best_v) {
      best = static_cast<int>(i);
      best_v = v;
    }
  }
  return best;
}

}  // namespace detail

struct SpanSample {
  int video = 0;
  TubeletPair pair;
  Span span;
  int label = 0;
};

// Training pool: every GT instance (tracks matched to detected tubelets at
// vIoU >= 0.5) plus every proposal whose viou_pair with some GT clears 0.5,
// labeled by the max-vIoU GT.
inline std::vector<SpanSample> stage2_samples(
    const Dataset& ds, const std::vector<std::vector<InteractionProposal>>& proposals) {
  require(proposals.empty() || proposals.size() == ds.videos.size(),
          "stage2_samples: proposals list does not line up with videos");
  std::vector<SpanSample> samples;
  for (std::size_t v = 0; v < ds.videos.size(); ++v) {
    const Video& video = ds.videos[v];
    for (const RelationInstance& gt : video.gt) {
      const int si = detail::match_track(video.tubelets, gt.subject_track);
      const int oi = detail::match_track(video.tubelets, gt.object_track);
      if (si < 0 || oi < 0 || si == oi) continue;
      TubeletPair pair = make_pair(video.tubelets[static_cast<std::size_t>(si)],
                                   video.tubelets[static_cast<std::size_t>(oi)], si, oi);
      const Span span{std::max(gt.span.t1, pair.overlap.t1), std::min(gt.span.t2, pair.overlap.t2)};
      if (span.length() < 1) continue;
      samples.push_back({static_cast<int>(v), std::move(pair), span, gt.predicate});
    }
    if (proposals.empty()) continue;
    for (const InteractionProposal& prop : proposals[v]) {
      RelationInstance as_instance;
      as_instance.subject_track = prop.pair.subject;
      as_instance.object_track = prop.pair.object;
      as_instance.span = prop.span;
      int label = -1;
      double best_v = 0.0;
      for (const RelationInstance& gt : video.gt) {
        const double v2 = viou_pair(as_instance, gt);
        if (v2 >= 0.5 && v2 > best_v) {
          best_v = v2;
          label = gt.predicate;
        }
      }
      if (label >= 0) samples.push_back({static_cast<int>(v), prop.pair, prop.span, label});
    }
  }
  return samples;
}

// Minibatch SGD on cross-entropy over the GT-plus-matched-proposal pool.
inline std::vector<double> train_stage2(const Dataset& ds,
                                        const std::vector<std::vector<InteractionProposal>>& proposals,
                                        Model& model, const Stage2Config& cfg, RngState& rng) {
  cfg.validate();
  model.validate();
  require(model.params.H == static_cast<int>(ds.predicate_names.size()),
          "train_stage2: head width must match the predicate count");

  std::vector<SpanSample> samples = stage2_samples(ds, proposals);
  if (samples.empty()) throw DataError("stage 2: no labeled training samples");

  std::vector<ParamTensor*> trainable;
  if (cfg.freeze_trunk) {
    trainable = {&model.params.head_W, &model.params.head_b};
  } else {
    trainable = model.trainable();
  }

  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.epochs));
  Matrix dS;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(samples);
    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < samples.size()) {
      const std::size_t bn = std::min<std::size_t>(cfg.batch, samples.size() - done);
      for (std::size_t i = 0; i < bn; ++i) {
        const SpanSample& s = samples[done + i];
        Matrix S = span_features(s.pair, s.span, cfg.n, model.fcfg, &model.class_embed.value);
        SfeCache cache;
        const std::vector<double> logits = sfe_forward(S, model.params, cache);
        CeResult ce = ce_loss(logits, s.label);
        if (!std::isfinite(ce.loss))
          throw NumericError("stage 2: non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", sample " + std::to_string(done + i));
        epoch_loss += ce.loss;
        for (double& g : ce.dlogits) g /= static_cast<double>(bn);
        sfe_backward(ce.dlogits, cache, model.params, &dS);
        accumulate_language_grad(s.pair.subject.category, s.pair.object.category, model.fcfg, dS,
                                 model.class_embed.grad);
      }
      sgd_step(trainable, cfg.lr);
      model.zero_grads();  // frozen tensors keep accumulating otherwise
      done += bn;
    }
    curve.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  model.trained_epochs += cfg.epochs;
  return curve;
}

}  // namespace socialfabric
