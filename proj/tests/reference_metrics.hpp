#pragma once

// Naive reference implementations of the evaluation protocol, written
// independently of eval.hpp so the two can be cross-checked. Everything here
// is deliberately brute force: full rescans instead of incremental state.

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "socialfabric/eval.hpp"

namespace reference {

using socialfabric::RelationInstance;
using socialfabric::ScoredTriplet;
using socialfabric::VideoResult;

using Label = std::tuple<int, int, int>;

inline Label label3(const RelationInstance& r) {
  return Label{r.subject_cat, r.predicate, r.object_cat};
}

inline std::vector<ScoredTriplet> rank(std::vector<ScoredTriplet> preds) {
  std::stable_sort(preds.begin(), preds.end(), [](const ScoredTriplet& a, const ScoredTriplet& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.instance.subject_id != b.instance.subject_id)
      return a.instance.subject_id < b.instance.subject_id;
    if (a.instance.object_id != b.instance.object_id)
      return a.instance.object_id < b.instance.object_id;
    return a.instance.predicate < b.instance.predicate;
  });
  return preds;
}

// Walk the ranked list; at each rank rescan every GT for the best admissible
// match among those not claimed by an earlier rank.
inline std::vector<int> match_ranks(const std::vector<ScoredTriplet>& ranked,
                                    const std::vector<RelationInstance>& gt, double thresh) {
  std::vector<int> claimed_by(gt.size(), -1);
  std::vector<int> match_of(ranked.size(), -1);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    int pick = -1;
    double pick_v = -1.0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (claimed_by[g] >= 0) continue;
      if (label3(ranked[r].instance) != label3(gt[g])) continue;
      const double v = socialfabric::viou_pair(ranked[r].instance, gt[g]);
      if (v < thresh) continue;
      if (v > pick_v) {
        pick_v = v;
        pick = static_cast<int>(g);
      }
    }
    if (pick >= 0) {
      claimed_by[static_cast<std::size_t>(pick)] = static_cast<int>(r);
      match_of[r] = pick;
    }
  }
  return match_of;
}

inline double ap(const std::vector<ScoredTriplet>& preds, const std::vector<RelationInstance>& gt,
                 double thresh) {
  if (gt.empty()) return 0.0;
  const auto ranked = rank(preds);
  const auto match_of = match_ranks(ranked, gt, thresh);
  double total = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (match_of[r] < 0) continue;
    int tp_so_far = 0;
    for (std::size_t q = 0; q <= r; ++q)
      if (match_of[q] >= 0) ++tp_so_far;
    total += static_cast<double>(tp_so_far) / static_cast<double>(r + 1);
  }
  return total / static_cast<double>(gt.size());
}

inline double p_at_k(const std::vector<VideoResult>& results, int K) {
  if (results.empty()) return 0.0;
  double acc = 0.0;
  for (const VideoResult& video : results) {
    std::map<Label, double> dedup;
    for (const ScoredTriplet& p : video.predictions) {
      auto it = dedup.find(label3(p.instance));
      if (it == dedup.end())
        dedup[label3(p.instance)] = p.final_score;
      else
        it->second = std::max(it->second, p.final_score);
    }
    std::vector<std::pair<double, Label>> order;
    for (const auto& [lab, score] : dedup) order.push_back({score, lab});
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::set<Label> gt_set;
    for (const RelationInstance& g : video.gt) gt_set.insert(label3(g));
    int hit = 0;
    for (int i = 0; i < K && i < static_cast<int>(order.size()); ++i)
      if (gt_set.count(order[static_cast<std::size_t>(i)].second)) ++hit;
    acc += static_cast<double>(hit) / static_cast<double>(K);
  }
  return acc / static_cast<double>(results.size());
}

inline double recall_at_n(const std::vector<VideoResult>& results, int N, double thresh) {
  long long tp = 0, total_gt = 0;
  for (const VideoResult& video : results) {
    auto ranked = rank(video.predictions);
    if (static_cast<int>(ranked.size()) > N) ranked.resize(static_cast<std::size_t>(N));
    const auto match_of = match_ranks(ranked, video.gt, thresh);
    for (int m : match_of)
      if (m >= 0) ++tp;
    total_gt += static_cast<long long>(video.gt.size());
  }
  return total_gt > 0 ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0;
}

inline double mean_ap(const std::vector<VideoResult>& results, double thresh) {
  if (results.empty()) return 0.0;
  double acc = 0.0;
  for (const VideoResult& video : results) acc += ap(video.predictions, video.gt, thresh);
  return acc / static_cast<double>(results.size());
}

}  // namespace reference
