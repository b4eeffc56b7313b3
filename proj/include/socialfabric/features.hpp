#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "socialfabric/errors.hpp"
#include "socialfabric/geometry.hpp"
#include "socialfabric/matrix.hpp"

namespace socialfabric {

struct ExternalChannelSpec {
  std::string name;
  int dim = 0;
};

struct FeatureConfig {
  bool use_motion = true;
  bool use_mask = true;
  bool use_language = true;
  int mask_grid = 8;
  int embed_dim = 16;
  std::vector<ExternalChannelSpec> external_channels;

  int motion_dim() const { return use_motion ? 10 : 0; }
  int mask_dim() const { return use_mask ? 2 * mask_grid * mask_grid : 0; }
  int language_dim() const { return use_language ? 2 * embed_dim : 0; }

  int external_dim() const {
    int d = 0;
    for (const auto& ch : external_channels) d += ch.dim;
    return d;
  }

  // Channel order is fixed: motion, mask, language, externals in declared order.
  int language_offset() const { return motion_dim() + mask_dim(); }
  int external_offset() const { return language_offset() + language_dim(); }
  int total_dim() const { return external_offset() + external_dim(); }

  void validate() const {
    require(total_dim() > 0, "feature config enables no channels");
    require(!use_mask || mask_grid >= 2, "mask_grid must be >= 2");
    require(!use_language || embed_dim > 0, "embed_dim must be positive");
    for (const auto& ch : external_channels)
      require(ch.dim > 0, "external channel '" + ch.name + "' has non-positive dim");
  }
};

// Externally precomputed per-frame vectors for one (video, channel).
struct ExternalChannelData {
  std::string video_id;
  std::string channel_name;
  int dim = 0;
  std::unordered_map<int, std::vector<double>> frames;
};

using ExternalSet = std::vector<ExternalChannelData>;

// [Δcx/ws, Δcy/hs, log(ws/wo), log(hs/ho), IoU, s-area, o-area,
//  intersection/union, cx_s, cy_s]; Δ is object minus subject.
inline void motion_feature(const Box& s, const Box& o, std::span<double> out) {
  require(out.size() == 10, "motion_feature needs a 10-wide output");
  const double ws = s.width(), hs = s.height();
  const double inter = intersection_area(s, o);
  const double uni = s.area() + o.area() - inter;
  out[0] = (o.cx() - s.cx()) / ws;
  out[1] = (o.cy() - s.cy()) / hs;
  out[2] = std::log(std::max(ws / o.width(), 1e-6));
  out[3] = std::log(std::max(hs / o.height(), 1e-6));
  out[4] = frame_iou(s, o);
  out[5] = s.area();
  out[6] = o.area();
  out[7] = uni > 0.0 ? inter / uni : 0.0;
  out[8] = s.cx();
  out[9] = s.cy();
}

namespace detail {

// Fraction of each grid cell covered by the box; grid spans the unit square.
inline void coverage_map(const Box& b, int grid, std::span<double> out) {
  const double cell = 1.0 / grid;
  const double cell_area = cell * cell;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const double ox = std::max(0.0, std::min(b.x2, (c + 1) * cell) - std::max(b.x1, c * cell));
      const double oy = std::max(0.0, std::min(b.y2, (r + 1) * cell) - std::max(b.y1, r * cell));
      out[static_cast<size_t>(r) * grid + c] = ox * oy / cell_area;
    }
  }
}

}  // namespace detail

inline void mask_feature(const Box& s, const Box& o, int grid, std::span<double> out) {
  require(grid >= 2, "mask_feature needs grid >= 2");
  const size_t cells = static_cast<size_t>(grid) * grid;
  require(out.size() == 2 * cells, "mask_feature output size mismatch");
  detail::coverage_map(s, grid, out.subspan(0, cells));
  detail::coverage_map(o, grid, out.subspan(cells, cells));
}

inline void language_feature(int subject_cat, int object_cat, const Matrix& table,
                             std::span<double> out) {
  require(subject_cat >= 0 && subject_cat < table.rows(), "subject category out of range");
  require(object_cat >= 0 && object_cat < table.rows(), "object category out of range");
  const size_t e = static_cast<size_t>(table.cols());
  require(out.size() == 2 * e, "language_feature output size mismatch");
  auto srow = table.row(subject_cat);
  auto orow = table.row(object_cat);
  std::copy(srow.begin(), srow.end(), out.begin());
  std::copy(orow.begin(), orow.end(), out.begin() + e);
}

inline const ExternalChannelData* find_channel(const ExternalSet* externals,
                                               const std::string& name) {
  if (externals == nullptr) return nullptr;
  for (const auto& ch : *externals)
    if (ch.channel_name == name) return &ch;
  return nullptr;
}

// One feature row for frame t of the pair. Both tubelets must cover t; the
// class-embedding table is required iff the language channel is enabled.
inline void feature_row(const TubeletPair& pair, int t, const FeatureConfig& cfg,
                        const Matrix* class_embed, const ExternalSet* externals,
                        std::span<double> out) {
  require(out.size() == static_cast<size_t>(cfg.total_dim()), "feature_row output size mismatch");
  size_t off = 0;
  if (cfg.use_motion) {
    motion_feature(pair.subject.box_at(t), pair.object.box_at(t), out.subspan(off, 10));
    off += 10;
  }
  if (cfg.use_mask) {
    const size_t md = static_cast<size_t>(cfg.mask_dim());
    mask_feature(pair.subject.box_at(t), pair.object.box_at(t), cfg.mask_grid,
                 out.subspan(off, md));
    off += md;
  }
  if (cfg.use_language) {
    require(class_embed != nullptr, "language channel enabled but no embedding table given");
    language_feature(pair.subject.category, pair.object.category, *class_embed,
                     out.subspan(off, 2 * static_cast<size_t>(cfg.embed_dim)));
    off += 2 * static_cast<size_t>(cfg.embed_dim);
  }
  for (const auto& spec : cfg.external_channels) {
    const ExternalChannelData* ch = find_channel(externals, spec.name);
    if (ch == nullptr)
      throw DataError("external channel '" + spec.name + "' not provided");
    if (ch->dim != spec.dim)
      throw DataError("external channel '" + spec.name + "' has dim " + std::to_string(ch->dim) +
                      ", expected " + std::to_string(spec.dim));
    auto it = ch->frames.find(t);
    if (it == ch->frames.end())
      throw DataError("external channel '" + spec.name + "' missing frame " + std::to_string(t) +
                      (ch->video_id.empty() ? "" : " for video " + ch->video_id));
    if (static_cast<int>(it->second.size()) != spec.dim)
      throw DataError("external channel '" + spec.name + "' frame " + std::to_string(t) +
                      " has wrong length");
    std::copy(it->second.begin(), it->second.end(), out.begin() + off);
    off += static_cast<size_t>(spec.dim);
  }
}

struct PairFrameFeatures {
  TubeletPair pair;
  Matrix frames;
};

// Rows ordered by frame index over the pair's overlap span.
inline PairFrameFeatures build_pair_features(const TubeletPair& pair, const FeatureConfig& cfg,
                                             const Matrix* class_embed = nullptr,
                                             const ExternalSet* externals = nullptr) {
  cfg.validate();
  require(pair.overlap.length() > 0, "pair has no overlap frames");
  PairFrameFeatures out;
  out.pair = pair;
  out.frames = Matrix(pair.overlap.length(), cfg.total_dim());
  for (int t = pair.overlap.t1; t < pair.overlap.t2; ++t)
    feature_row(pair, t, cfg, class_embed, externals,
                out.frames.row(t - pair.overlap.t1));
  return out;
}

// Scatter the language-block columns of a per-row feature gradient into the
// embedding-table gradient; categories are constant across a pair's rows.
inline void accumulate_language_grad(int subject_cat, int object_cat, const FeatureConfig& cfg,
                                     const Matrix& dS, Matrix& table_grad) {
  if (!cfg.use_language) return;
  const int e = cfg.embed_dim;
  const int off = cfg.language_offset();
  require(table_grad.cols() == e, "embedding grad width mismatch");
  require(subject_cat >= 0 && subject_cat < table_grad.rows(), "subject category out of range");
  require(object_cat >= 0 && object_cat < table_grad.rows(), "object category out of range");
  for (int r = 0; r < dS.rows(); ++r) {
    for (int j = 0; j < e; ++j) {
      table_grad(subject_cat, j) += dS(r, off + j);
      table_grad(object_cat, j) += dS(r, off + e + j);
    }
  }
}

}  // namespace socialfabric
