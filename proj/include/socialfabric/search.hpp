#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "socialfabric/dataset.hpp"
#include "socialfabric/errors.hpp"
#include "socialfabric/model.hpp"
#include "socialfabric/parallel.hpp"
#include "socialfabric/stage1.hpp"
#include "socialfabric/stage2.hpp"

namespace socialfabric {

// One hand-specified frame: a subject/object box pair, optionally tagged with
// categories. Categories below 0 mean "unspecified".
struct QueryExample {
  Box subject;
  Box object;
  int subject_cat = -1;
  int object_cat = -1;
};

struct PrimitiveQuery {
  std::vector<QueryExample> examples;
  std::vector<int> resolved;  // deduplicated, first-occurrence order
};

// Feature row for a lone example frame. A single frame has no external
// channel data, so that block stays zero; the language block is filled only
// when both categories are given.
inline void example_row(const QueryExample& ex, const FeatureConfig& cfg,
                        const Matrix* class_embed, std::span<double> out) {
  require(out.size() == static_cast<std::size_t>(cfg.total_dim()),
          "example_row output size mismatch");
  require(ex.subject.valid() && ex.object.valid(), "query example boxes must be valid");
  std::fill(out.begin(), out.end(), 0.0);
  std::size_t off = 0;
  if (cfg.use_motion) {
    motion_feature(ex.subject, ex.object, out.subspan(off, 10));
    off += 10;
  }
  if (cfg.use_mask) {
    const std::size_t md = static_cast<std::size_t>(cfg.mask_dim());
    mask_feature(ex.subject, ex.object, cfg.mask_grid, out.subspan(off, md));
    off += md;
  }
  if (cfg.use_language && ex.subject_cat >= 0 && ex.object_cat >= 0) {
    require(class_embed != nullptr, "language channel enabled but no embedding table given");
    language_feature(ex.subject_cat, ex.object_cat, *class_embed,
                     out.subspan(off, 2 * static_cast<std::size_t>(cfg.embed_dim)));
  }
}

// Nearest primitive per example under ||R - C_k||^2; ties keep the lowest
// index, duplicates collapse to the first occurrence.
inline std::vector<int> resolve_query(const std::vector<QueryExample>& examples,
                                      const Model& model) {
  model.validate();
  require(!examples.empty(), "resolve_query: need at least one example");
  if (model.trained_epochs == 0)
    throw DataError("resolve_query: model has not been trained");

  const int ne = static_cast<int>(examples.size());
  Matrix S(ne, model.fcfg.total_dim());
  for (int i = 0; i < ne; ++i)
    example_row(examples[static_cast<std::size_t>(i)], model.fcfg, &model.class_embed.value,
                S.row(i));
  const Matrix R = embed(S, model.params);
  const Matrix& C = model.params.C.value;

  std::vector<int> resolved;
  for (int i = 0; i < ne; ++i) {
    const auto ri = R.row(i);
    int best = 0;
    double best_d = -1.0;
    for (int k = 0; k < C.rows(); ++k) {
      double d = 0.0;
      for (int c = 0; c < C.cols(); ++c) {
        const double diff = ri[static_cast<std::size_t>(c)] - C(k, c);
        d += diff * diff;
      }
      if (best_d < 0.0 || d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (std::find(resolved.begin(), resolved.end(), best) == resolved.end())
      resolved.push_back(best);
  }
  return resolved;
}

inline PrimitiveQuery make_query(std::vector<QueryExample> examples, const Model& model) {
  PrimitiveQuery q;
  q.resolved = resolve_query(examples, model);
  q.examples = std::move(examples);
  return q;
}

// r_k = sum over the span's n sampled frames of z_jk, for every k at once.
// Uses the stage-2 frame sampling so scores are comparable across spans.
inline std::vector<double> relevance_profile(const TubeletPair& pair, Span span,
                                             const Model& model, int n,
                                             const ExternalSet* externals = nullptr) {
  const Matrix S = span_features(pair, span, n, model.fcfg, &model.class_embed.value, externals);
  const Matrix R = embed(S, model.params);
  const Assignment a = soft_assign(R, model.params.C.value, model.params.beta);
  std::vector<double> r(static_cast<std::size_t>(model.params.K), 0.0);
  for (int j = 0; j < a.z.rows(); ++j)
    for (int k = 0; k < a.z.cols(); ++k) r[static_cast<std::size_t>(k)] += a.z(j, k);
  return r;
}

inline double proposal_relevance(const InteractionProposal& prop, int k, const Model& model,
                                 int n, const ExternalSet* externals = nullptr) {
  require(k >= 0 && k < model.params.K, "proposal_relevance: primitive index out of range");
  return relevance_profile(prop.pair, prop.span, model, n, externals)[static_cast<std::size_t>(k)];
}

struct SearchHit {
  std::string video_id;
  InteractionProposal proposal;
  double score = 0.0;
};

// Rank every proposal by its summed relevance over the query's resolved
// primitives. Pure ranking: nothing in the model or pool is modified.
inline std::vector<SearchHit> search(const PrimitiveQuery& query, const Dataset& ds,
                                     const std::vector<std::vector<InteractionProposal>>& proposals,
                                     const Model& model, int top_r, int n = 25,
                                     const ExternalSet* externals = nullptr) {
  require(top_r >= 1, "search: top_r must be positive");
  require(n >= 1, "search: n must be positive");
  require(proposals.size() == ds.videos.size(), "search: proposals not aligned with videos");
  require(!query.resolved.empty(), "search: query resolves to no primitives");
  for (int k : query.resolved)
    require(k >= 0 && k < model.params.K, "search: resolved primitive out of range");

  std::vector<SearchHit> hits;
  for (std::size_t v = 0; v < proposals.size(); ++v) {
    for (const InteractionProposal& prop : proposals[v]) {
      SearchHit h;
      h.video_id = ds.videos[v].video_id;
      h.proposal = prop;
      hits.push_back(std::move(h));
    }
  }
  if (hits.empty()) return hits;

  parallel_for(static_cast<int>(hits.size()), [&](int i) {
    SearchHit& h = hits[static_cast<std::size_t>(i)];
    const std::vector<double> r = relevance_profile(h.proposal.pair, h.proposal.span, model, n,
                                                    externals);
    double s = 0.0;
    for (int k : query.resolved) s += r[static_cast<std::size_t>(k)];
    h.score = s;
  });

  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    return a.proposal.span.t1 < b.proposal.span.t1;
  });
  if (static_cast<int>(hits.size()) > top_r) hits.resize(static_cast<std::size_t>(top_r));
  return hits;
}

}  // namespace socialfabric
