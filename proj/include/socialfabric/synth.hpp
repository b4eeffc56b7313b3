#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "socialfabric/dataset.hpp"
#include "socialfabric/errors.hpp"
#include "socialfabric/geometry.hpp"
#include "socialfabric/rng.hpp"

namespace socialfabric {

enum class SuiteKind { separable, compositional, duration };

inline const char* suite_name(SuiteKind k) {
  switch (k) {
    case SuiteKind::separable: return "separable";
    case SuiteKind::compositional: return "compositional";
    case SuiteKind::duration: return "duration";
  }
  return "?";
}

inline SuiteKind parse_suite(const std::string& s) {
  if (s == "separable") return SuiteKind::separable;
  if (s == "compositional") return SuiteKind::compositional;
  if (s == "duration") return SuiteKind::duration;
  throw std::invalid_argument("unknown suite '" + s + "'");
}

struct ScenarioSpec {
  SuiteKind suite = SuiteKind::separable;
  std::string split = "train";
  int num_videos = 0;
  int frames_per_video = 0;
  int num_entities = 2;
  std::vector<std::string> predicate_set;
  double noise = 0.004;  // box-jitter std
  uint64_t seed = 0;
};

// One scripted segment of a relation: the edge gap between the actor boxes
// interpolates linearly over the segment, while the pair drifts along +x.
struct Phase {
  std::string kind;
  Span span;
  double gap_start = 0.0;
  double gap_end = 0.0;
  double speed = 0.0;

  double gap_at(int t) const {
    if (span.length() <= 1) return gap_start;
    const double a = static_cast<double>(t - span.t1) / (span.length() - 1);
    return gap_start + a * (gap_end - gap_start);
  }
};

inline const std::vector<std::string>& supported_predicates() {
  static const std::vector<std::string> names = {
      "chase", "flee", "approach", "move_away", "next_to", "behind", "touch", "throw_like"};
  return names;
}

inline const std::vector<std::string>& synth_categories() {
  static const std::vector<std::string> names = {"person", "dog", "cat", "car", "ball"};
  return names;
}

// The relation span is carved into scripted phases. Composites (throw_like)
// get several; everything else is a single sustained configuration. Gaps are
// edge-to-edge distances; negative means overlap.
inline std::vector<Phase> plan_phases(SuiteKind suite, const std::string& predicate, Span span,
                                      RngState& rng) {
  require(span.length() >= 4, "relation span too short to script");
  std::vector<Phase> phases;
  auto single = [&](const char* kind, double g0, double g1, double speed) {
    phases.push_back(Phase{kind, span, g0, g1, speed});
  };
  const double len = span.length();

  if (suite == SuiteKind::compositional) {
    // Shared phase vocabulary: near (0.005), mid, far. The mid plateau is
    // drawn per video from [0.17, 0.23] for next_to AND as throw_like's
    // time-averaged target, so the span-mean gap carries no class signal;
    // only the per-frame histogram (bimodal vs unimodal) separates the two.
    if (predicate == "touch") {
      single("near", 0.005, 0.005, 0.0);
    } else if (predicate == "next_to") {
      const double m = 0.17 + 0.06 * rng.uniform();
      single("mid", m, m, 0.0);
    } else if (predicate == "behind") {
      single("far", 0.40, 0.40, 0.0);
    } else if (predicate == "throw_like") {
      // The far plateau solves exactly for the drawn target mean, whatever
      // the rounded near-phase length.
      require(span.length() >= 8, "throw_like span too short to script");
      const double m = 0.17 + 0.06 * rng.uniform();
      const int open_len = 3;
      const int n1 = std::clamp(
          static_cast<int>(std::lround(((0.40 - m) * len - 0.5925) / 0.395)), 2,
          span.length() - open_len - 2);
      // sum of gaps = 0.005*n1 + (0.0075 + 1.5*gf) + gf*(len - n1 - 3)
      const double gf = (m * len - 0.005 * n1 - 0.0075) / (len - n1 - 1.5);
      const int tm = span.t1 + n1;
      phases.push_back(Phase{"near", Span{span.t1, tm}, 0.005, 0.005, 0.0});
      phases.push_back(Phase{"open", Span{tm, tm + open_len}, 0.005, gf, 0.0});
      phases.push_back(Phase{"far", Span{tm + open_len, span.t2}, gf, gf, 0.0});
    } else {
      throw DataError("predicate '" + predicate + "' is not scripted for the compositional suite");
    }
    return phases;
  }

  // separable / duration vocabulary, mildly varied per video
  if (predicate == "touch") {
    const double g = -0.02 - 0.01 * rng.uniform();
    single("contact", g, g, 0.0);
  } else if (predicate == "next_to") {
    const double g = 0.06 + 0.04 * rng.uniform();
    single("adjacent", g, g, 0.02 / len);
  } else if (predicate == "behind") {
    const double g = 0.28 + 0.04 * rng.uniform();
    single("trail", g, g, 0.12 / len);
  } else if (predicate == "chase") {
    const double g0 = 0.32 + 0.06 * rng.uniform();
    const double g1 = 0.08 + 0.04 * rng.uniform();
    single("pursuit", g0, g1, 0.25 / len);
  } else if (predicate == "approach") {
    single("closing", 0.40, 0.06, 0.0);
  } else if (predicate == "move_away") {
    single("opening", 0.06, 0.40, 0.0);
  } else if (predicate == "flee") {
    single("flight", 0.10 + 0.04 * rng.uniform(), 0.34, 0.25 / len);
  } else if (predicate == "throw_like") {
    const int tm = span.t1 + span.length() / 2;
    phases.push_back(Phase{"contact", Span{span.t1, tm}, -0.02, -0.02, 0.0});
    phases.push_back(Phase{"opening", Span{tm, span.t2}, -0.02, 0.38, 0.0});
  } else {
    throw DataError("unsupported predicate '" + predicate + "'");
  }
  return phases;
}

namespace detail {

struct EntityState {
  double cx = 0.0, cy = 0.0;
  double home_x = 0.0, home_y = 0.0;
  double size = 0.12;
  double jitter_sq = 0.0;
};

inline Box clamped_box(double cx, double cy, double size) {
  const double h = size / 2.0;
  cx = std::clamp(cx, h, 1.0 - h);
  cy = std::clamp(cy, h, 1.0 - h);
  return Box{cx - h, cy - h, cx + h, cy + h};
}

inline void wander_step(EntityState& e, RngState& rng) {
  const double nx = std::clamp(e.cx + 0.006 * rng.normal() - 0.02 * (e.cx - e.home_x), e.home_x - 0.04,
                               e.home_x + 0.04);
  const double ny = std::clamp(e.cy + 0.006 * rng.normal() - 0.02 * (e.cy - e.home_y), e.home_y - 0.04,
                               e.home_y + 0.04);
  e.cx = nx;
  e.cy = ny;
}

}  // namespace detail

// Deterministic per spec.seed and video index. One scripted relation per
// video between entities 0 (subject) and 1 (object); remaining entities are
// distractors that never leave their home zones.
inline Video generate_video(const ScenarioSpec& spec, int index) {
  RngState base(spec.seed);
  RngState rng = base.fork(static_cast<uint64_t>(index) +
                           (spec.split == "test" ? 0x7e57u << 16 : 0u));
  const int T = spec.frames_per_video;
  const int P = static_cast<int>(spec.predicate_set.size());
  const std::string predicate = spec.predicate_set[static_cast<std::size_t>(index % P)];

  // Span length: separable/compositional draw one band; duration cycles the
  // short/medium/long buckets (cuts at 30 and 120 frames).
  int span_len = 0;
  if (spec.suite == SuiteKind::duration) {
    const int bucket = (index / P) % 3;
    if (bucket == 0) span_len = 12 + static_cast<int>(rng.uniform_int(13));        // 12..24
    else if (bucket == 1) span_len = 48 + static_cast<int>(rng.uniform_int(49));   // 48..96
    else span_len = 128 + static_cast<int>(rng.uniform_int(65));                   // 128..192
  } else {
    span_len = 20 + static_cast<int>(rng.uniform_int(17));  // 20..36
  }
  const int glide = 6;
  const int margin = glide + 4;
  require(T >= span_len + 2 * margin, "frames_per_video too small for the relation span");
  const int t1 = margin + static_cast<int>(rng.uniform_int(
                              static_cast<uint64_t>(T - span_len - 2 * margin + 1)));
  const Span span{t1, t1 + span_len};
  std::vector<Phase> phases = plan_phases(spec.suite, predicate, span, rng);

  const int C = static_cast<int>(synth_categories().size());
  const int subject_cat = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(C)));
  const int object_cat =
      (subject_cat + 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(C - 1)))) % C;

  static const double kHomes[6][2] = {{0.15, 0.22}, {0.85, 0.78}, {0.50, 0.10},
                                      {0.10, 0.90}, {0.90, 0.12}, {0.50, 0.92}};
  require(spec.num_entities >= 2 && spec.num_entities <= 6,
          "entity count must be between 2 and 6");

  std::vector<detail::EntityState> ents(static_cast<std::size_t>(spec.num_entities));
  const bool fixed_size = spec.suite == SuiteKind::compositional;
  for (int e = 0; e < spec.num_entities; ++e) {
    auto& ent = ents[static_cast<std::size_t>(e)];
    ent.home_x = kHomes[e][0];
    ent.home_y = kHomes[e][1];
    ent.cx = ent.home_x;
    ent.cy = ent.home_y;
    ent.size = fixed_size ? 0.12 : 0.10 + 0.04 * rng.uniform();
  }
  if (fixed_size) ents[1].size = ents[0].size;

  // Scripted actor-pair placement over the relation span. The compositional
  // suite widens placement and adds a per-video vertical offset: class
  // evidence must live in the gap alone, not in absolute position.
  const bool comp = spec.suite == SuiteKind::compositional;
  const double pair_cy = comp ? 0.30 + 0.40 * rng.uniform() : 0.38 + 0.24 * rng.uniform();
  const double pair_cx0 = comp ? 0.34 + 0.10 * rng.uniform() : 0.34 + 0.06 * rng.uniform();
  const double pair_dy = comp ? (2.0 * rng.uniform() - 1.0) * 0.05 : 0.0;
  auto scripted_centers = [&](int t, double& sx, double& ox) {
    const Phase* ph = &phases.back();
    for (const Phase& cand : phases)
      if (cand.span.contains(t)) { ph = &cand; break; }
    double drift = 0.0;
    for (const Phase& cand : phases) {
      if (cand.span.t2 <= t) drift += cand.speed * cand.span.length();
      else if (cand.span.contains(t)) drift += cand.speed * (t - cand.span.t1);
    }
    const double gap = ph->gap_at(t);
    const double half = (ents[0].size + ents[1].size) / 2.0 + gap;
    const double cx = pair_cx0 + drift;
    sx = cx - half / 2.0;
    ox = cx + half / 2.0;
  };

  Video video;
  video.num_frames = T;
  video.tubelets.resize(static_cast<std::size_t>(spec.num_entities));
  for (int e = 0; e < spec.num_entities; ++e) {
    auto& tub = video.tubelets[static_cast<std::size_t>(e)];
    tub.t_begin = 0;
    tub.boxes.reserve(static_cast<std::size_t>(T));
  }
  video.tubelets[0].category = subject_cat;
  video.tubelets[1].category = object_cat;
  for (int e = 2; e < spec.num_entities; ++e)
    video.tubelets[static_cast<std::size_t>(e)].category =
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(C)));

  double glide_in_sx = 0.0, glide_in_sy = 0.0, glide_in_ox = 0.0, glide_in_oy = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < spec.num_entities; ++e) {
      auto& ent = ents[static_cast<std::size_t>(e)];
      if (e >= 2) {
        detail::wander_step(ent, rng);
      } else if (t < span.t1 - glide || t >= span.t2 + glide) {
        detail::wander_step(ent, rng);
      } else if (t < span.t1) {
        if (t == span.t1 - glide) {
          glide_in_sx = ents[0].cx;
          glide_in_sy = ents[0].cy;
          glide_in_ox = ents[1].cx;
          glide_in_oy = ents[1].cy;
        }
        double sx, ox;
        scripted_centers(span.t1, sx, ox);
        const double a = static_cast<double>(t - (span.t1 - glide) + 1) / glide;
        const double cy_target = e == 0 ? pair_cy : pair_cy + pair_dy;
        if (e == 0) {
          ent.cx = glide_in_sx + a * (sx - glide_in_sx);
          ent.cy = glide_in_sy + a * (cy_target - glide_in_sy);
        } else {
          ent.cx = glide_in_ox + a * (ox - glide_in_ox);
          ent.cy = glide_in_oy + a * (cy_target - glide_in_oy);
        }
      } else if (t < span.t2) {
        double sx, ox;
        scripted_centers(t, sx, ox);
        ent.cx = e == 0 ? sx : ox;
        ent.cy = e == 0 ? pair_cy : pair_cy + pair_dy;
      } else {
        // glide back toward home, then the wander branch takes over
        const double a = static_cast<double>(t - span.t2 + 1) / glide;
        double sx, ox;
        scripted_centers(span.t2 - 1, sx, ox);
        const double from_x = e == 0 ? sx : ox;
        const double from_y = e == 0 ? pair_cy : pair_cy + pair_dy;
        ent.cx = from_x + a * (ent.home_x - from_x);
        ent.cy = from_y + a * (ent.home_y - from_y);
      }
      double jx = 0.0, jy = 0.0;
      if (spec.noise > 0.0) {
        jx = rng.normal(0.0, spec.noise);
        jy = rng.normal(0.0, spec.noise);
        ent.jitter_sq += jx * jx + jy * jy;
      }
      video.tubelets[static_cast<std::size_t>(e)].boxes.push_back(
          detail::clamped_box(ent.cx + jx, ent.cy + jy, ent.size));
    }
  }

  for (int e = 0; e < spec.num_entities; ++e) {
    auto& ent = ents[static_cast<std::size_t>(e)];
    const double rms = std::sqrt(ent.jitter_sq / (2.0 * T));
    video.tubelets[static_cast<std::size_t>(e)].score = 1.0 - std::min(0.3, 25.0 * rms);
  }

  RelationInstance gt;
  gt.subject_cat = subject_cat;
  gt.object_cat = object_cat;
  gt.predicate = index % P;  // index into spec.predicate_set
  gt.subject_id = 0;
  gt.object_id = 1;
  gt.subject_track = video.tubelets[0];
  gt.object_track = video.tubelets[1];
  gt.span = span;
  gt.score = 1.0;
  video.gt.push_back(std::move(gt));
  return video;
}

inline std::vector<Video> generate(const ScenarioSpec& spec) {
  require(spec.num_videos >= 1, "num_videos must be positive");
  require(spec.num_entities >= 2, "need at least two entities");
  require(spec.noise >= 0.0, "noise must be nonnegative");
  require(!spec.predicate_set.empty(), "predicate set is empty");
  const auto& supported = supported_predicates();
  for (const auto& p : spec.predicate_set)
    require(std::find(supported.begin(), supported.end(), p) != supported.end(),
            "unsupported predicate '" + p + "'");

  std::vector<Video> videos;
  videos.reserve(static_cast<std::size_t>(spec.num_videos));
  char buf[64];
  for (int i = 0; i < spec.num_videos; ++i) {
    Video v = generate_video(spec, i);
    std::snprintf(buf, sizeof buf, "%.3s_%s_%03d", suite_name(spec.suite), spec.split.c_str(), i);
    v.video_id = buf;
    videos.push_back(std::move(v));
  }
  return videos;
}

inline ScenarioSpec suite_spec(SuiteKind kind, const std::string& split, uint64_t seed) {
  ScenarioSpec spec;
  spec.suite = kind;
  spec.split = split;
  spec.seed = seed;
  const bool train = split == "train";
  switch (kind) {
    case SuiteKind::separable:
      spec.num_videos = train ? 60 : 20;
      spec.frames_per_video = 64;
      spec.num_entities = 3;
      spec.predicate_set = {"touch", "next_to", "behind", "chase"};
      break;
    case SuiteKind::compositional:
      spec.num_videos = train ? 100 : 30;
      spec.frames_per_video = 64;
      spec.num_entities = 2;
      spec.predicate_set = {"touch", "next_to", "behind", "throw_like"};
      break;
    case SuiteKind::duration:
      spec.num_videos = train ? 60 : 30;
      spec.frames_per_video = 224;
      spec.num_entities = 3;
      spec.predicate_set = {"touch", "next_to", "behind", "chase"};
      break;
  }
  return spec;
}

inline Dataset make_suite(SuiteKind kind, const std::string& split, uint64_t seed) {
  require(split == "train" || split == "test", "split must be train or test");
  const ScenarioSpec spec = suite_spec(kind, split, seed);
  Dataset ds;
  ds.suite = suite_name(kind);
  ds.split = split;
  ds.predicate_names = spec.predicate_set;
  ds.category_names = synth_categories();
  ds.videos = generate(spec);
  return ds;
}

inline std::vector<Dataset> make_suites(uint64_t seed) {
  std::vector<Dataset> out;
  for (SuiteKind kind : {SuiteKind::separable, SuiteKind::compositional, SuiteKind::duration})
    for (const char* split : {"train", "test"}) out.push_back(make_suite(kind, split, seed));
  return out;
}

}  // namespace socialfabric
