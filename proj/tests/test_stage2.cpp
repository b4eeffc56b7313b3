#include "doctest.h"

#include <cmath>

#include "socialfabric/stage1.hpp"
#include "socialfabric/stage2.hpp"
#include "socialfabric/synth.hpp"

using namespace socialfabric;

namespace {

FeatureConfig motion_only() {
  FeatureConfig cfg;
  cfg.use_mask = false;
  cfg.use_language = false;
  return cfg;
}

Model tiny_model(Variant variant, int D, int K, int H, uint64_t seed,
                 const FeatureConfig& fcfg, std::vector<std::string> preds) {
  RngState rng(seed);
  return init_model(fcfg, D, K, H, variant, synth_categories(), std::move(preds), rng);
}

Dataset small_suite(SuiteKind kind, int num_videos, std::vector<std::string> preds,
                    uint64_t seed, int entities = 2) {
  ScenarioSpec spec;
  spec.suite = kind;
  spec.num_videos = num_videos;
  spec.frames_per_video = 64;
  spec.num_entities = entities;
  spec.predicate_set = preds;
  spec.seed = seed;
  Dataset ds;
  ds.suite = suite_name(kind);
  ds.split = "train";
  ds.predicate_names = std::move(preds);
  ds.category_names = synth_categories();
  ds.videos = generate(spec);
  return ds;
}

InteractionProposal proposal_for(const Video& v, int si, int oi, Span span, double ss = 0.9,
                                 double os = 0.8) {
  InteractionProposal p;
  p.pair = make_pair(v.tubelets[static_cast<std::size_t>(si)],
                     v.tubelets[static_cast<std::size_t>(oi)], si, oi);
  p.span = span;
  p.mean_score = 0.7;
  p.subject_score = ss;
  p.object_score = os;
  return p;
}

}  // namespace

TEST_CASE("sample_frames covers the documented cases") {
  auto idx = sample_frames(Span{0, 25}, 25);
  REQUIRE(idx.size() == 25);
  for (int i = 0; i < 25; ++i) CHECK(idx[static_cast<std::size_t>(i)] == i);

  idx = sample_frames(Span{0, 5}, 25);
  for (int i = 0; i < 25; ++i) CHECK(idx[static_cast<std::size_t>(i)] == i / 5);

  idx = sample_frames(Span{0, 50}, 25);
  for (int i = 0; i < 25; ++i) CHECK(idx[static_cast<std::size_t>(i)] == 2 * i);

  idx = sample_frames(Span{7, 10}, 6);
  for (int i : idx) {
    CHECK(i >= 7);
    CHECK(i < 10);
  }
  CHECK(idx.front() == 7);

  CHECK_THROWS_AS(sample_frames(Span{3, 3}, 4), std::invalid_argument);
}

TEST_CASE("span features sample within the overlap only") {
  const Dataset ds = small_suite(SuiteKind::separable, 1, {"behind"}, 91);
  const Video& v = ds.videos[0];
  const TubeletPair pair = make_pairs(v.tubelets)[0];
  const FeatureConfig fcfg = motion_only();

  const Matrix S = span_features(pair, v.gt[0].span, 25, fcfg, nullptr);
  CHECK(S.rows() == 25);
  CHECK(S.cols() == fcfg.total_dim());

  CHECK_THROWS_AS(span_features(pair, Span{-3, 10}, 25, fcfg, nullptr), std::invalid_argument);
}

TEST_CASE("predicted distributions are proper and ranked") {
  const Dataset ds = small_suite(SuiteKind::separable, 1, {"touch", "next_to", "behind"}, 14);
  const Video& v = ds.videos[0];
  const TubeletPair pair = make_pairs(v.tubelets)[0];
  Stage2Config cfg;

  Model model = tiny_model(Variant::literal, 8, 4, 3, 5, motion_only(),
                           {"touch", "next_to", "behind"});
  auto ranked = predict_predicates(pair, v.gt[0].span, model, cfg);
  REQUIRE(ranked.size() == 3);
  double total = 0.0;
  for (auto& [k, p] : ranked) total += p;
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK(ranked[0].second >= ranked[1].second);
  CHECK(ranked[1].second >= ranked[2].second);

  model.params.head_W.value.fill(0.0);
  model.params.head_b.value.fill(0.0);
  ranked = predict_predicates(pair, v.gt[0].span, model, cfg);
  for (auto& [k, p] : ranked) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(ranked[0].first == 0);  // equal probabilities fall back to index order
  CHECK(ranked[1].first == 1);
  CHECK(ranked[2].first == 2);
}

TEST_CASE("triplet assembly multiplies the three factors") {
  const Dataset ds = small_suite(SuiteKind::separable, 1, {"touch", "behind"}, 33, 3);
  const Video& v = ds.videos[0];
  Stage2Config cfg;
  cfg.top_p = 1;

  Model model = tiny_model(Variant::aggregate, 8, 4, 2, 6, motion_only(), {"touch", "behind"});
  model.params.head_W.value.fill(0.0);
  model.params.head_b.value.fill(0.0);  // both predicates at prob 0.5

  std::vector<InteractionProposal> props = {
      proposal_for(v, 0, 1, v.gt[0].span, 0.9, 0.8),
      proposal_for(v, 0, 2, v.gt[0].span, 0.9, 0.5),
  };
  auto triplets = assemble_triplets(props, model, cfg);
  REQUIRE(triplets.size() == 2);  // top_p=1: one per proposal
  CHECK(triplets[0].final_score == doctest::Approx(0.5 * 0.9 * 0.8).epsilon(1e-12));
  CHECK(triplets[1].final_score == doctest::Approx(0.5 * 0.9 * 0.5).epsilon(1e-12));
  CHECK(triplets[0].final_score >= triplets[1].final_score);
  for (const auto& t : triplets) {
    CHECK(t.instance.score == t.final_score);
    CHECK(t.final_score >= 0.0);
    CHECK(t.final_score <= 1.0);
    CHECK(t.instance.span.t1 == v.gt[0].span.t1);
  }

  cfg.top_p = 2;
  triplets = assemble_triplets(props, model, cfg);
  CHECK(triplets.size() == 4);

  // equal scores: ordering falls back to (subject id, object id, predicate)
  std::vector<InteractionProposal> same = {
      proposal_for(v, 0, 1, v.gt[0].span, 0.9, 0.8),
      proposal_for(v, 0, 2, v.gt[0].span, 0.9, 0.8),
  };
  triplets = assemble_triplets(same, model, cfg);
  REQUIRE(triplets.size() == 4);
  CHECK(triplets[0].instance.object_id == 1);
  CHECK(triplets[0].instance.predicate == 0);
  CHECK(triplets[1].instance.object_id == 1);
  CHECK(triplets[1].instance.predicate == 1);
  CHECK(triplets[2].instance.object_id == 2);
}

TEST_CASE("stage-2 sample pool unions GT with matched proposals") {
  Dataset ds = small_suite(SuiteKind::separable, 1, {"touch", "behind"}, 71);
  Video& v = ds.videos[0];
  const Span gt_span = v.gt[0].span;

  // a proposal matching GT (same pair, same span), one temporally disjoint,
  // and one with the roles reversed (spatial vIoU ~ 0)
  std::vector<std::vector<InteractionProposal>> props(1);
  props[0].push_back(proposal_for(v, 0, 1, gt_span));
  const Span far_span{0, 8};
  props[0].push_back(proposal_for(v, 0, 1, far_span));
  props[0].push_back(proposal_for(v, 1, 0, gt_span));

  auto samples = stage2_samples(ds, props);
  REQUIRE(samples.size() == 2);  // GT itself + the matching proposal
  CHECK(samples[0].label == v.gt[0].predicate);
  CHECK(samples[1].label == v.gt[0].predicate);
  CHECK(samples[1].span.t1 == gt_span.t1);

  // max-vIoU tie break: two GT instances on the same pair, proposal overlaps
  // the later one more
  RelationInstance second = v.gt[0];
  const int t1 = gt_span.t1;
  v.gt[0].span = Span{t1, t1 + 10};
  v.gt[0].predicate = 0;
  second.span = Span{t1 + 10, t1 + 20};
  second.predicate = 1;
  v.gt.push_back(second);

  std::vector<std::vector<InteractionProposal>> probe(1);
  probe[0].push_back(proposal_for(v, 0, 1, Span{t1 + 7, t1 + 20}));  // 3 vs 10 overlap frames
  samples = stage2_samples(ds, probe);
  REQUIRE(samples.size() == 3);  // two GT + one matched proposal
  CHECK(samples[2].label == 1);

  // no GT, no proposals: training refuses
  for (Video& video : ds.videos) video.gt.clear();
  Model model = tiny_model(Variant::literal, 8, 4, 2, 3, motion_only(), {"touch", "behind"});
  RngState rng(4);
  CHECK_THROWS_AS(train_stage2(ds, {}, model, Stage2Config{}, rng), DataError);
}

TEST_CASE("stage-2 training reaches high accuracy and is deterministic") {
  const Dataset ds = small_suite(SuiteKind::separable, 12, {"touch", "behind"}, 55);
  Stage2Config cfg;
  cfg.n = 12;
  cfg.epochs = 10;
  cfg.lr = 0.05;

  auto run = [&]() {
    Model model = tiny_model(Variant::aggregate, 8, 4, 2, 21, motion_only(), {"touch", "behind"});
    RngState rng(9);
    const auto curve = train_stage2(ds, {}, model, cfg, rng);
    return std::make_pair(model, curve);
  };
  auto [model, curve] = run();
  REQUIRE(curve.size() == 10);
  CHECK(curve.back() < curve.front());

  const auto samples = stage2_samples(ds, {});
  REQUIRE(!samples.empty());
  int correct = 0;
  for (const auto& s : samples) {
    const auto ranked = predict_predicates(s.pair, s.span, model, cfg);
    if (ranked[0].first == s.label) ++correct;
  }
  CHECK(static_cast<double>(correct) / samples.size() >= 0.95);

  auto [model2, curve2] = run();
  for (std::size_t i = 0; i < curve.size(); ++i) CHECK(curve[i] == curve2[i]);
  for (std::size_t i = 0; i < model.params.head_W.value.size(); ++i)
    CHECK(model.params.head_W.value.data()[i] == model2.params.head_W.value.data()[i]);
}

TEST_CASE("fine-tuning the trunk beats freezing it") {
  const Dataset ds = small_suite(SuiteKind::compositional, 16,
                                 {"touch", "next_to", "behind", "throw_like"}, 87);

  // stage-1 trunk: binary interaction head, briefly trained
  Model stage1 = tiny_model(Variant::aggregate, 8, 4, 1, 41, motion_only(),
                            {"touch", "next_to", "behind", "throw_like"});
  Stage1Config s1cfg;
  s1cfg.m = 10;
  s1cfg.epochs = 2;
  s1cfg.batch = 64;
  RngState rng1(2);
  train_stage1(ds, stage1, s1cfg, rng1);

  Stage2Config cfg;
  cfg.n = 12;
  cfg.epochs = 8;
  cfg.lr = 0.05;

  auto run = [&](bool freeze) {
    RngState head_rng(77);
    Model model = make_stage2_model(stage1, 4, ds.predicate_names, head_rng);
    Stage2Config c = cfg;
    c.freeze_trunk = freeze;
    RngState rng(6);
    return train_stage2(ds, {}, model, c, rng).back();
  };
  const double frozen = run(true);
  const double tuned = run(false);
  CHECK(std::isfinite(frozen));
  CHECK(std::isfinite(tuned));
  CHECK(tuned < frozen);
}
