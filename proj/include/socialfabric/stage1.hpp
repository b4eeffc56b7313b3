#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "socialfabric/dataset.hpp"
#include "socialfabric/encoding.hpp"
#include "socialfabric/errors.hpp"
#include "socialfabric/features.hpp"
#include "socialfabric/geometry.hpp"
#include "socialfabric/model.hpp"
#include "socialfabric/parallel.hpp"

namespace socialfabric {

struct Stage1Config {
  int m = 30;
  int epochs = 20;
  double lr = 0.01;
  int batch = 128;
  std::vector<double> thresholds = {0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
  int min_len = 5;
  double dedup_tiou = 0.8;
  double neg_ratio = 3.0;

  void validate() const {
    require(m >= 2, "stage 1: window must have at least 2 frames");
    require(epochs >= 1 && batch >= 1 && lr > 0.0, "stage 1: bad training config");
    require(!thresholds.empty(), "stage 1: thresholds empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      require(thresholds[i] > 0.0 && thresholds[i] < 1.0, "stage 1: thresholds must lie in (0,1)");
      require(i == 0 || thresholds[i] < thresholds[i - 1], "stage 1: thresholds must descend");
    }
    require(min_len >= 1, "stage 1: min_len must be positive");
    require(dedup_tiou > 0.0 && dedup_tiou <= 1.0, "stage 1: dedup_tiou out of range");
    require(neg_ratio >= 0.0, "stage 1: neg_ratio must be nonnegative");
  }
};

struct ScoreTrack {
  TubeletPair pair;
  std::vector<double> scores;  // one per overlap frame, each in [0,1]
};

struct InteractionProposal {
  TubeletPair pair;
  Span span;
  double mean_score = 0.0;
  double subject_score = 0.0;
  double object_score = 0.0;
};

// m frame indices centered on f (m/2 per side), clipped to the overlap and
// edge-replicated so the window always has exactly m entries.
inline std::vector<int> window_indices(Span overlap, int f, int m) {
  require(overlap.contains(f), "window_indices: frame outside overlap");
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(m));
  for (int j = f - m / 2; j < f - m / 2 + m; ++j)
    idx.push_back(std::clamp(j, overlap.t1, overlap.t2 - 1));
  return idx;
}

inline Matrix window_features(const TubeletPair& pair, int f, int m, const FeatureConfig& cfg,
                              const Matrix* class_embed, const ExternalSet* externals = nullptr) {
  const std::vector<int> idx = window_indices(pair.overlap, f, m);
  Matrix S(m, cfg.total_dim());
  for (int r = 0; r < m; ++r)
    feature_row(pair, idx[static_cast<std::size_t>(r)], cfg, class_embed, externals, S.row(r));
  return S;
}

inline double score_frame(const TubeletPair& pair, int f, const Model& model,
                          const Stage1Config& cfg, const ExternalSet* externals = nullptr) {
  require(model.params.H == 1, "score_frame: stage-1 head must be single-logit");
  Matrix S = window_features(pair, f, cfg.m, model.fcfg, &model.class_embed.value, externals);
  SfeCache cache;
  const std::vector<double> logits = sfe_forward(S, model.params, cache);
  return sigmoid(logits[0]);
}

// Scores every overlap frame. Per-frame embeddings and assignments are
// computed once and reused across windows; the combination step runs the
// same encode/head code on copies of the cached rows, so each frame's score
// is bit-identical to score_frame's.
inline ScoreTrack score_pair(const TubeletPair& pair, const Model& model, const Stage1Config& cfg,
                             const ExternalSet* externals = nullptr) {
  require(model.params.H == 1, "score_pair: stage-1 head must be single-logit");
  const int n = pair.overlap.length();
  const int F = model.fcfg.total_dim();
  Matrix S(n, F);
  for (int t = pair.overlap.t1; t < pair.overlap.t2; ++t)
    feature_row(pair, t, model.fcfg, &model.class_embed.value, externals,
                S.row(t - pair.overlap.t1));
  const Matrix R = embed(S, model.params);
  const Assignment assign = soft_assign(R, model.params.C.value, model.params.beta);

  ScoreTrack track;
  track.pair = pair;
  track.scores.reserve(static_cast<std::size_t>(n));
  const int m = cfg.m;
  Matrix wz(m, model.params.K), wr(m, model.params.D);
  for (int f = pair.overlap.t1; f < pair.overlap.t2; ++f) {
    const std::vector<int> idx = window_indices(pair.overlap, f, m);
    for (int r = 0; r < m; ++r) {
      const int src = idx[static_cast<std::size_t>(r)] - pair.overlap.t1;
      for (int k = 0; k < model.params.K; ++k) wz(r, k) = assign.z(src, k);
      for (int d = 0; d < model.params.D; ++d) wr(r, d) = R(src, d);
    }
    Assignment wa;
    wa.z = wz;
    const FabricEncoding enc = encode_from_assignment(wr, wa, model.params);
    track.scores.push_back(sigmoid(head_forward(enc, model.params)[0]));
  }
  return track;
}

// A frame is positive for a pair iff some GT instance spans it and the GT
// subject/object tracks match the pair's tubelets there (frame IoU >= 0.5
// for both roles).
inline bool frame_is_positive(const Video& video, const TubeletPair& pair, int f) {
  for (const RelationInstance& gt : video.gt) {
    if (!gt.span.contains(f)) continue;
    if (!gt.subject_track.has_frame(f) || !gt.object_track.has_frame(f)) continue;
    if (frame_iou(pair.subject.box_at(f), gt.subject_track.box_at(f)) < 0.5) continue;
    if (frame_iou(pair.object.box_at(f), gt.object_track.box_at(f)) < 0.5) continue;
    return true;
  }
  return false;
}

namespace detail {

struct FrameSample {
  int video = 0;
  int pair = 0;
  int frame = 0;
  int label = 0;
};

}  // namespace detail

// Minibatch SGD on per-frame BCE. Negatives are resampled every epoch to at
// most neg_ratio times the positive count. Returns the per-epoch mean loss.
inline std::vector<double> train_stage1(const Dataset& ds, Model& model, const Stage1Config& cfg,
                                        RngState& rng) {
  cfg.validate();
  model.validate();
  require(model.params.H == 1, "train_stage1: head must be single-logit");

  std::vector<std::vector<TubeletPair>> pairs(ds.videos.size());
  std::vector<detail::FrameSample> positives, negatives;
  for (std::size_t v = 0; v < ds.videos.size(); ++v) {
    pairs[v] = make_pairs(ds.videos[v].tubelets);
    for (std::size_t p = 0; p < pairs[v].size(); ++p) {
      const TubeletPair& pr = pairs[v][p];
      for (int f = pr.overlap.t1; f < pr.overlap.t2; ++f) {
        detail::FrameSample s{static_cast<int>(v), static_cast<int>(p), f, 0};
        if (frame_is_positive(ds.videos[v], pr, f)) {
          s.label = 1;
          positives.push_back(s);
        } else {
          negatives.push_back(s);
        }
      }
    }
  }
  if (positives.empty())
    throw DataError("stage 1: no positive frames in the dataset (degenerate task)");

  const std::vector<ParamTensor*> trainable = model.trainable();
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.epochs));
  Matrix dS;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(negatives);
    const std::size_t take = std::min(
        negatives.size(), static_cast<std::size_t>(cfg.neg_ratio * positives.size()));
    std::vector<detail::FrameSample> batch_pool = positives;
    batch_pool.insert(batch_pool.end(), negatives.begin(),
                      negatives.begin() + static_cast<std::ptrdiff_t>(take));
    rng.shuffle(batch_pool);

    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < batch_pool.size()) {
      const std::size_t bn = std::min<std::size_t>(cfg.batch, batch_pool.size() - done);
      for (std::size_t i = 0; i < bn; ++i) {
        const detail::FrameSample& s = batch_pool[done + i];
        const TubeletPair& pr =
            pairs[static_cast<std::size_t>(s.video)][static_cast<std::size_t>(s.pair)];
        Matrix S = window_features(pr, s.frame, cfg.m, model.fcfg, &model.class_embed.value);
        SfeCache cache;
        const std::vector<double> logits = sfe_forward(S, model.params, cache);
        const double prob = sigmoid(logits[0]);
        const BceResult bce = bce_loss(prob, s.label);
        if (!std::isfinite(bce.loss))
          throw NumericError("stage 1: non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", sample " + std::to_string(done + i));
        epoch_loss += bce.loss;
        const double dlogit = (prob - s.label) / static_cast<double>(bn);
        sfe_backward({dlogit}, cache, model.params, &dS);
        accumulate_language_grad(pr.subject.category, pr.object.category, model.fcfg, dS,
                                 model.class_embed.grad);
      }
      sgd_step(trainable, cfg.lr);
      done += bn;
    }
    curve.push_back(epoch_loss / static_cast<double>(batch_pool.size()));
  }
  model.trained_epochs += cfg.epochs;
  return curve;
}

// Multi-threshold run extraction plus greedy temporal NMS over the
// candidates, highest mean score first.
inline std::vector<InteractionProposal> watershed_1d(const ScoreTrack& track,
                                                     const std::vector<double>& thresholds,
                                                     int min_len, double dedup_tiou) {
  struct Candidate {
    Span span;
    double mean = 0.0;
  };
  std::vector<Candidate> candidates;
  const int t0 = track.pair.overlap.t1;
  const int n = static_cast<int>(track.scores.size());
  for (double tau : thresholds) {
    int run_start = -1;
    for (int i = 0; i <= n; ++i) {
      const bool in_run = i < n && track.scores[static_cast<std::size_t>(i)] >= tau;
      if (in_run && run_start < 0) run_start = i;
      if (!in_run && run_start >= 0) {
        if (i - run_start >= min_len) {
          double total = 0.0;
          for (int j = run_start; j < i; ++j) total += track.scores[static_cast<std::size_t>(j)];
          candidates.push_back({Span{t0 + run_start, t0 + i}, total / (i - run_start)});
        }
        run_start = -1;
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    if (a.span.t1 != b.span.t1) return a.span.t1 < b.span.t1;
    return a.span.t2 < b.span.t2;
  });
  std::vector<Candidate> kept;
  for (const Candidate& c : candidates) {
    bool suppressed = false;
    for (const Candidate& k : kept)
      if (temporal_iou(c.span, k.span) > dedup_tiou) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    if (a.span.t1 != b.span.t1) return a.span.t1 < b.span.t1;
    return a.span.t2 < b.span.t2;
  });

  std::vector<InteractionProposal> out;
  out.reserve(kept.size());
  for (const Candidate& c : kept) {
    InteractionProposal p;
    p.pair = track.pair;
    p.span = c.span;
    p.mean_score = c.mean;
    p.subject_score = track.pair.subject.score;
    p.object_score = track.pair.object.score;
    out.push_back(std::move(p));
  }
  return out;
}

// make_pairs -> score -> watershed, merged in pair order. Scoring is
// parallel over pairs; the merge order is fixed.
inline std::vector<InteractionProposal> generate_proposals(const Video& video, const Model& model,
                                                           const Stage1Config& cfg,
                                                           const ExternalSet* externals = nullptr) {
  const std::vector<TubeletPair> pairs = make_pairs(video.tubelets);
  std::vector<ScoreTrack> tracks(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    tracks[static_cast<std::size_t>(i)] =
        score_pair(pairs[static_cast<std::size_t>(i)], model, cfg, externals);
  });
  std::vector<InteractionProposal> out;
  for (const ScoreTrack& track : tracks) {
    std::vector<InteractionProposal> part =
        watershed_1d(track, cfg.thresholds, cfg.min_len, cfg.dedup_tiou);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace socialfabric
