#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "socialfabric/errors.hpp"
#include "socialfabric/geometry.hpp"
#include "socialfabric/stage2.hpp"

namespace socialfabric {

struct VideoResult {
  std::string video_id;
  std::vector<ScoredTriplet> predictions;  // ranked by final_score descending
  std::vector<RelationInstance> gt;
};

struct EvalConfig {
  double viou_thresh = 0.5;
  int short_max = 30;   // short: len < short_max
  int medium_max = 120;  // medium: short_max <= len < medium_max; long otherwise
};

struct MetricReport {
  std::map<int, double> p_at;               // K -> precision, K in {1,5,10}
  double map = 0.0;
  std::map<int, double> recall_at;          // N -> recall, N in {50,100}
  std::map<std::string, double> per_duration;  // short / medium / long -> mAP
  bool gt_empty_warning = false;
};

using TripletLabel = std::tuple<int, int, int>;  // subject_cat, predicate, object_cat

inline TripletLabel label_of(const RelationInstance& r) {
  return {r.subject_cat, r.predicate, r.object_cat};
}

namespace detail {

// Deterministic rank order: score descending, then (pair id, predicate id).
inline std::vector<const ScoredTriplet*> ranked_view(const std::vector<ScoredTriplet>& preds) {
  std::vector<const ScoredTriplet*> view;
  view.reserve(preds.size());
  for (const auto& p : preds) view.push_back(&p);
  std::stable_sort(view.begin(), view.end(), [](const ScoredTriplet* a, const ScoredTriplet* b) {
    if (a->final_score != b->final_score) return a->final_score > b->final_score;
    if (a->instance.subject_id != b->instance.subject_id)
      return a->instance.subject_id < b->instance.subject_id;
    if (a->instance.object_id != b->instance.object_id)
      return a->instance.object_id < b->instance.object_id;
    return a->instance.predicate < b->instance.predicate;
  });
  return view;
}

// Greedy rank-order matching; returns per-rank TP flags.
inline std::vector<bool> greedy_matches(const std::vector<const ScoredTriplet*>& ranked,
                                        const std::vector<RelationInstance>& gt,
                                        double viou_thresh) {
  std::vector<bool> tp(ranked.size(), false);
  std::vector<bool> used(gt.size(), false);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    int best = -1;
    double best_v = 0.0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || label_of(ranked[r]->instance) != label_of(gt[g])) continue;
      const double v = viou_pair(ranked[r]->instance, gt[g]);
      if (v >= viou_thresh && v > best_v) {
        best = static_cast<int>(g);
        best_v = v;
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      tp[r] = true;
    }
  }
  return tp;
}

}  // namespace detail

// Per video: deduplicate predictions to distinct labels keeping the max
// score, take the top K labels, count hits against the GT label set, divide
// by K (missing slots are misses). Averaged over videos.
inline double tagging_precision(const std::vector<VideoResult>& results, int K) {
  require(K >= 1, "tagging_precision: K must be positive");
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const VideoResult& video : results) {
    std::map<TripletLabel, double> best;
    for (const ScoredTriplet& p : video.predictions) {
      auto [it, inserted] = best.emplace(label_of(p.instance), p.final_score);
      if (!inserted && p.final_score > it->second) it->second = p.final_score;
    }
    std::vector<std::pair<TripletLabel, double>> labels(best.begin(), best.end());
    std::sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::set<TripletLabel> gt_labels;
    for (const RelationInstance& g : video.gt) gt_labels.insert(label_of(g));
    int hits = 0;
    for (std::size_t i = 0; i < labels.size() && i < static_cast<std::size_t>(K); ++i)
      if (gt_labels.count(labels[i].first)) ++hits;
    total += static_cast<double>(hits) / K;
  }
  return total / static_cast<double>(results.size());
}

// Greedy matching in rank order; a prediction is a TP iff its labels equal
// some unmatched GT's and viou_pair clears the threshold (max-vIoU choice).
// AP = sum over TP ranks of precision-at-rank / |GT|.
inline double detection_ap(const std::vector<ScoredTriplet>& predictions,
                           const std::vector<RelationInstance>& gt, double viou_thresh = 0.5,
                           bool* gt_empty = nullptr) {
  if (gt.empty()) {
    if (gt_empty) *gt_empty = true;
    return 0.0;
  }
  const auto ranked = detail::ranked_view(predictions);
  const auto tp = detail::greedy_matches(ranked, gt, viou_thresh);
  double ap = 0.0;
  int tp_count = 0;
  for (std::size_t r = 0; r < tp.size(); ++r) {
    if (!tp[r]) continue;
    ++tp_count;
    ap += static_cast<double>(tp_count) / static_cast<double>(r + 1);
  }
  return ap / static_cast<double>(gt.size());
}

// TP count within the top N ranked predictions.
inline int top_n_true_positives(const std::vector<ScoredTriplet>& predictions,
                                const std::vector<RelationInstance>& gt, double viou_thresh,
                                int N) {
  auto ranked = detail::ranked_view(predictions);
  if (static_cast<int>(ranked.size()) > N) ranked.resize(static_cast<std::size_t>(N));
  const auto tp = detail::greedy_matches(ranked, gt, viou_thresh);
  int count = 0;
  for (bool b : tp) count += b ? 1 : 0;
  return count;
}

// mAP is averaged per video; R@N pools TP and GT counts globally; duration
// buckets restrict the GT side only, and a video with no GT in a bucket is
// skipped for that bucket's mean.
inline MetricReport evaluate(const std::vector<VideoResult>& results, const EvalConfig& cfg = {}) {
  require(cfg.short_max >= 1 && cfg.medium_max > cfg.short_max, "evaluate: bad duration cuts");
  MetricReport rep;
  for (int K : {1, 5, 10}) rep.p_at[K] = tagging_precision(results, K);

  double ap_sum = 0.0;
  long long tp50 = 0, tp100 = 0, gt_total = 0;
  const std::array<const char*, 3> bucket_names = {"short", "medium", "long"};
  std::array<double, 3> bucket_ap_sum = {0.0, 0.0, 0.0};
  std::array<int, 3> bucket_videos = {0, 0, 0};
  auto bucket_of = [&](const RelationInstance& g) {
    const int len = g.span.length();
    if (len < cfg.short_max) return 0;
    if (len < cfg.medium_max) return 1;
    return 2;
  };

  for (const VideoResult& video : results) {
    bool empty_flag = false;
    ap_sum += detection_ap(video.predictions, video.gt, cfg.viou_thresh, &empty_flag);
    rep.gt_empty_warning = rep.gt_empty_warning || empty_flag;
    tp50 += top_n_true_positives(video.predictions, video.gt, cfg.viou_thresh, 50);
    tp100 += top_n_true_positives(video.predictions, video.gt, cfg.viou_thresh, 100);
    gt_total += static_cast<long long>(video.gt.size());

    for (int b = 0; b < 3; ++b) {
      std::vector<RelationInstance> subset;
      for (const RelationInstance& g : video.gt)
        if (bucket_of(g) == b) subset.push_back(g);
      if (subset.empty()) continue;
      bucket_ap_sum[static_cast<std::size_t>(b)] +=
          detection_ap(video.predictions, subset, cfg.viou_thresh);
      ++bucket_videos[static_cast<std::size_t>(b)];
    }
  }
  rep.map = results.empty() ? 0.0 : ap_sum / static_cast<double>(results.size());
  rep.recall_at[50] = gt_total > 0 ? static_cast<double>(tp50) / static_cast<double>(gt_total) : 0.0;
  rep.recall_at[100] =
      gt_total > 0 ? static_cast<double>(tp100) / static_cast<double>(gt_total) : 0.0;
  for (int b = 0; b < 3; ++b)
    rep.per_duration[bucket_names[static_cast<std::size_t>(b)]] =
        bucket_videos[static_cast<std::size_t>(b)] > 0
            ? bucket_ap_sum[static_cast<std::size_t>(b)] / bucket_videos[static_cast<std::size_t>(b)]
            : 0.0;
  return rep;
}

}  // namespace socialfabric
