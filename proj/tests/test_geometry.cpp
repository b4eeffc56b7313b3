#include "doctest.h"

#include <cmath>

#include "socialfabric/geometry.hpp"
#include "socialfabric/rng.hpp"

using namespace socialfabric;

namespace {

Tubelet constant_tubelet(const Box& box, int t_begin, int len, int category = 0) {
  Tubelet t;
  t.category = category;
  t.t_begin = t_begin;
  t.boxes.assign(static_cast<std::size_t>(len), box);
  return t;
}

Tubelet random_tubelet(RngState& rng, int max_start = 20, int max_len = 15) {
  Tubelet t;
  t.t_begin = rng.uniform_int(max_start);
  const int len = 1 + rng.uniform_int(max_len);
  for (int i = 0; i < len; ++i) {
    Box b;
    b.x1 = rng.uniform(0.0, 0.8);
    b.y1 = rng.uniform(0.0, 0.8);
    b.x2 = b.x1 + rng.uniform(0.05, 1.0 - b.x1 - 0.01);
    b.y2 = b.y1 + rng.uniform(0.05, 1.0 - b.y1 - 0.01);
    t.boxes.push_back(b);
  }
  return t;
}

// Independent oracle: per-frame areas gathered into flat lists first, summed
// afterwards. Slower and structured differently from viou() on purpose.
double viou_oracle(const Tubelet& a, const Tubelet& b) {
  std::vector<double> inters, unis;
  for (int t = -1000; t < 1000; ++t) {
    double inter = 0.0, uni = 0.0;
    if (a.has_frame(t) && b.has_frame(t)) {
      const Box& ba = a.box_at(t);
      const Box& bb = b.box_at(t);
      const double w = std::max(0.0, std::min(ba.x2, bb.x2) - std::max(ba.x1, bb.x1));
      const double h = std::max(0.0, std::min(ba.y2, bb.y2) - std::max(ba.y1, bb.y1));
      inter = w * h;
      uni = ba.area() + bb.area() - inter;
    } else if (a.has_frame(t)) {
      uni = a.box_at(t).area();
    } else if (b.has_frame(t)) {
      uni = b.box_at(t).area();
    }
    inters.push_back(inter);
    unis.push_back(uni);
  }
  double total_inter = 0.0, total_uni = 0.0;
  for (double v : inters) total_inter += v;
  for (double v : unis) total_uni += v;
  return total_uni > 0.0 ? total_inter / total_uni : 0.0;
}

}  // namespace

TEST_SUITE("frame_iou") {
  TEST_CASE("identical, disjoint, half overlap") {
    Box unit{0, 0, 1, 1};
    Box left{0, 0, 0.5, 1};
    Box far{0.8, 0.8, 0.9, 0.9};
    CHECK(frame_iou(unit, unit) == doctest::Approx(1.0));
    CHECK(frame_iou(left, far) == doctest::Approx(0.0));
    CHECK(frame_iou(unit, left) == doctest::Approx(0.5));
  }
}

TEST_SUITE("make_pairs") {
  TEST_CASE("co-temporal tubelets give M(M-1) ordered pairs") {
    Box b{0.1, 0.1, 0.3, 0.3};
    std::vector<Tubelet> ts(4, constant_tubelet(b, 0, 10));
    auto pairs = make_pairs(ts);
    CHECK(pairs.size() == 12);
    int forward = 0, backward = 0;
    for (const auto& p : pairs) {
      CHECK(p.subject_id != p.object_id);
      CHECK(p.overlap.length() == 10);
      if (p.subject_id == 0 && p.object_id == 1) ++forward;
      if (p.subject_id == 1 && p.object_id == 0) ++backward;
    }
    CHECK(forward == 1);
    CHECK(backward == 1);
  }

  TEST_CASE("disjoint spans give no pairs") {
    Box b{0.1, 0.1, 0.3, 0.3};
    std::vector<Tubelet> ts{constant_tubelet(b, 0, 5), constant_tubelet(b, 10, 5)};
    CHECK(make_pairs(ts).empty());
    CHECK(make_pairs({}).empty());
  }

  TEST_CASE("three tubelets with spans [0,10) [5,15) [20,30)") {
    Box b{0.1, 0.1, 0.3, 0.3};
    std::vector<Tubelet> ts{constant_tubelet(b, 0, 10), constant_tubelet(b, 5, 10),
                            constant_tubelet(b, 20, 10)};
    auto pairs = make_pairs(ts);
    CHECK(pairs.size() == 2);
    for (const auto& p : pairs) {
      CHECK(p.overlap.t1 == 5);
      CHECK(p.overlap.t2 == 10);
      CHECK(p.subject_id != 2);
      CHECK(p.object_id != 2);
    }
  }

  TEST_CASE("no emitted pair has empty overlap (random sweep)") {
    RngState rng(71);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Tubelet> ts;
      const int m = 2 + rng.uniform_int(5);
      for (int i = 0; i < m; ++i) ts.push_back(random_tubelet(rng));
      for (const auto& p : make_pairs(ts)) {
        CHECK(p.overlap.length() > 0);
        CHECK(p.overlap.t1 == std::max(p.subject.t_begin, p.object.t_begin));
        CHECK(p.overlap.t2 == std::min(p.subject.t_end(), p.object.t_end()));
      }
    }
  }
}

TEST_SUITE("viou") {
  TEST_CASE("identical tubelet gives 1") {
    RngState rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      Tubelet t = random_tubelet(rng);
      CHECK(viou(t, t) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("temporally disjoint gives 0") {
    Box b{0.2, 0.2, 0.6, 0.6};
    CHECK(viou(constant_tubelet(b, 0, 5), constant_tubelet(b, 8, 5)) == doctest::Approx(0.0));
  }

  TEST_CASE("identical boxes, spans [0,10) and [5,15) give 1/3") {
    Box b{0.2, 0.2, 0.6, 0.6};
    const double v = viou(constant_tubelet(b, 0, 10), constant_tubelet(b, 5, 10));
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("symmetry and oracle agreement on 100 random pairs") {
    RngState rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      Tubelet a = random_tubelet(rng);
      Tubelet b = random_tubelet(rng);
      const double ab = viou(a, b);
      CHECK(ab == viou(b, a));
      CHECK(ab == doctest::Approx(viou_oracle(a, b)).epsilon(1e-9));
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
    }
  }
}

TEST_SUITE("viou_pair") {
  TEST_CASE("identical instances give 1, disjoint object gives 0, min composes") {
    Box b{0.2, 0.2, 0.6, 0.6};
    Box far{0.7, 0.7, 0.9, 0.9};

    RelationInstance gt;
    gt.subject_track = constant_tubelet(b, 0, 10);
    gt.object_track = constant_tubelet(b, 0, 10, 1);
    gt.span = {0, 10};

    CHECK(viou_pair(gt, gt) == doctest::Approx(1.0));

    RelationInstance pred = gt;
    pred.object_track = constant_tubelet(far, 0, 10, 1);
    CHECK(viou_pair(pred, gt) == doctest::Approx(0.0));

    // subject identical, object spans offset by half: min(1, 1/3) = 1/3
    RelationInstance shifted = gt;
    shifted.object_track = constant_tubelet(b, 5, 10, 1);
    shifted.span = {0, 15};
    gt.span = {0, 15};
    CHECK(viou_pair(shifted, gt) == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("restriction to the instance span drives the match") {
    Box b{0.2, 0.2, 0.6, 0.6};
    RelationInstance gt;
    gt.subject_track = constant_tubelet(b, 0, 20);
    gt.object_track = constant_tubelet(b, 0, 20, 1);
    gt.span = {0, 10};
    RelationInstance pred = gt;
    pred.span = {5, 15};  // same tracks, half-overlapping span
    CHECK(viou_pair(pred, gt) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_SUITE("temporal_iou") {
  TEST_CASE("hand cases") {
    CHECK(temporal_iou({0, 10}, {0, 10}) == doctest::Approx(1.0));
    CHECK(temporal_iou({0, 10}, {10, 20}) == doctest::Approx(0.0));
    CHECK(temporal_iou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0));
  }
}
