#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "socialfabric/errors.hpp"

namespace socialfabric {

/// Axis-aligned box in normalized image coordinates, [0,1] on both axes,
/// with positive extent (x1 < x2, y1 < y2).
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0 && x1 < x2 && y1 < y2;
  }
};

/// Half-open frame span [t1, t2).
struct Span {
  int t1 = 0, t2 = 0;

  int length() const { return t2 - t1; }
  bool contains(int t) const { return t >= t1 && t < t2; }
  bool operator==(const Span&) const = default;
};

inline double temporal_iou(const Span& a, const Span& b) {
  const int inter = std::max(0, std::min(a.t2, b.t2) - std::max(a.t1, b.t1));
  const int uni = a.length() + b.length() - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

/// One tracked object: a category, a detection confidence, and one box per
/// frame over the contiguous span [t_begin, t_begin + boxes.size()).
struct Tubelet {
  int category = 0;
  double score = 1.0;
  int t_begin = 0;
  std::vector<Box> boxes;

  int t_end() const { return t_begin + static_cast<int>(boxes.size()); }
  Span span() const { return {t_begin, t_end()}; }
  bool has_frame(int t) const { return t >= t_begin && t < t_end(); }
  const Box& box_at(int t) const { return boxes[static_cast<std::size_t>(t - t_begin)]; }
};

/// Sub-track covering span ∩ tubelet.span(). May come back empty when they
/// are disjoint; callers treat an empty track as zero-volume.
inline Tubelet restrict_track(const Tubelet& track, const Span& span) {
  Tubelet out;
  out.category = track.category;
  out.score = track.score;
  const int lo = std::max(track.t_begin, span.t1);
  const int hi = std::min(track.t_end(), span.t2);
  out.t_begin = lo;
  for (int t = lo; t < hi; ++t) out.boxes.push_back(track.box_at(t));
  return out;
}

/// Ordered subject/object tubelets with their temporal overlap. The ids index
/// into the owning video's tubelet list.
struct TubeletPair {
  Tubelet subject;
  Tubelet object;
  int subject_id = -1;
  int object_id = -1;
  Span overlap;
};

inline TubeletPair make_pair(const Tubelet& subject, const Tubelet& object,
                             int subject_id = -1, int object_id = -1) {
  TubeletPair p;
  p.subject = subject;
  p.object = object;
  p.subject_id = subject_id;
  p.object_id = object_id;
  p.overlap = {std::max(subject.t_begin, object.t_begin),
               std::min(subject.t_end(), object.t_end())};
  return p;
}

/// All ordered pairs (i, j), i != j, with nonzero temporal overlap. Subject
/// and object roles are distinct, so both (i, j) and (j, i) are emitted.
inline std::vector<TubeletPair> make_pairs(const std::vector<Tubelet>& tubelets) {
  std::vector<TubeletPair> pairs;
  const int m = static_cast<int>(tubelets.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      TubeletPair p = make_pair(tubelets[static_cast<std::size_t>(i)],
                                tubelets[static_cast<std::size_t>(j)], i, j);
      if (p.overlap.t2 > p.overlap.t1) pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

inline double frame_iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Volume IoU over the union of both temporal spans: summed per-frame
/// intersection area over summed per-frame union area. A frame covered by
/// only one tubelet adds that box's area to the denominator.
inline double viou(const Tubelet& a, const Tubelet& b) {
  if (a.boxes.empty() && b.boxes.empty()) return 0.0;
  const int lo = std::min(a.boxes.empty() ? b.t_begin : a.t_begin,
                          b.boxes.empty() ? a.t_begin : b.t_begin);
  const int hi = std::max(a.boxes.empty() ? b.t_end() : a.t_end(),
                          b.boxes.empty() ? a.t_end() : b.t_end());
  double inter = 0.0, uni = 0.0;
  for (int t = lo; t < hi; ++t) {
    const bool in_a = a.has_frame(t), in_b = b.has_frame(t);
    if (in_a && in_b) {
      const double i = intersection_area(a.box_at(t), b.box_at(t));
      inter += i;
      uni += a.box_at(t).area() + b.box_at(t).area() - i;
    } else if (in_a) {
      uni += a.box_at(t).area();
    } else if (in_b) {
      uni += b.box_at(t).area();
    }
  }
  return uni > 0.0 ? inter / uni : 0.0;
}

/// A ⟨subject-predicate-object⟩ triplet with localized tracks, a temporal
/// span and a confidence. Used for both ground truth (score 1) and
/// predictions. Track ids are -1 when the instance is not tied to a video's
/// tubelet list.
struct RelationInstance {
  int subject_cat = 0;
  int predicate = 0;
  int object_cat = 0;
  Tubelet subject_track;
  Tubelet object_track;
  int subject_id = -1;
  int object_id = -1;
  Span span;
  double score = 1.0;
};

/// Matching score between two relation instances: the minimum of subject and
/// object vIoU, each computed on the tracks restricted to the instances' own
/// spans. Both roles must clear a threshold for the pair to count as matched.
inline double viou_pair(const RelationInstance& pred, const RelationInstance& gt) {
  const double s = viou(restrict_track(pred.subject_track, pred.span),
                        restrict_track(gt.subject_track, gt.span));
  const double o = viou(restrict_track(pred.object_track, pred.span),
                        restrict_track(gt.object_track, gt.span));
  return std::min(s, o);
}

inline bool same_labels(const RelationInstance& a, const RelationInstance& b) {
  return a.subject_cat == b.subject_cat && a.predicate == b.predicate &&
         a.object_cat == b.object_cat;
}

}  // namespace socialfabric
