#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialfabric/dataset.hpp"
#include "socialfabric/errors.hpp"
#include "socialfabric/eval.hpp"
#include "socialfabric/model.hpp"
#include "socialfabric/search.hpp"
#include "socialfabric/stage1.hpp"
#include "socialfabric/stage2.hpp"

namespace socialfabric {

// Insertion-ordered so files lay out the way they were built; dumps are
// deterministic either way.
using jsn = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CheckpointMeta {
  std::string stage;  // "stage1" | "stage2"
  int epochs = 0;
  double final_loss = 0.0;
  uint64_t seed = 0;
};

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

namespace detail {

inline jsn parse_json(const std::string& text, const std::string& path) {
  jsn j = jsn::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + path);
  return j;
}

// Loaders funnel every failure mode through DataError: nlohmann throws on
// missing keys and type mismatches, require() on semantic checks.
template <typename Fn>
auto as_data_error(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const jsn::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void check_schema(const jsn& j, const std::string& kind, const std::string& path) {
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw DataError(path + ": missing schema_version");
  const int v = j["schema_version"].get<int>();
  if (v != kSchemaVersion)
    throw DataError(path + ": schema version " + std::to_string(v) + ", expected " +
                    std::to_string(kSchemaVersion));
  if (!j.contains("kind") || j["kind"].get<std::string>() != kind)
    throw DataError(path + ": expected a " + kind + " file");
}

inline jsn box_to_json(const Box& b) { return jsn::array({b.x1, b.y1, b.x2, b.y2}); }

inline Box box_from_json(const jsn& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw DataError(where + ": box must be [x1,y1,x2,y2]");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw DataError(where + ": invalid box extents");
  return b;
}

inline jsn span_to_json(const Span& s) { return jsn::array({s.t1, s.t2}); }

inline Span span_from_json(const jsn& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw DataError(where + ": span must be [t1,t2]");
  const Span s{j[0].get<int>(), j[1].get<int>()};
  if (s.length() < 1) throw DataError(where + ": empty span");
  return s;
}

template <typename Fn>
inline void for_each_jsonl(const std::string& path, Fn&& fn) {
  const std::string text = read_file(path);
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    if (end > start) {
      const std::string line = text.substr(start, end - start);
      fn(parse_json(line, path + ":" + std::to_string(line_no)), line_no);
    }
    start = end + 1;
  }
}

inline std::size_t video_index(const Dataset& ds, const std::string& video_id,
                               const std::string& where) {
  for (std::size_t v = 0; v < ds.videos.size(); ++v)
    if (ds.videos[v].video_id == video_id) return v;
  throw DataError(where + ": unknown video " + video_id);
}

inline TubeletPair pair_by_ids(const Video& video, int sid, int oid, const std::string& where) {
  const int nt = static_cast<int>(video.tubelets.size());
  if (sid < 0 || sid >= nt || oid < 0 || oid >= nt || sid == oid)
    throw DataError(where + ": tubelet ids out of range");
  return make_pair(video.tubelets[static_cast<std::size_t>(sid)],
                   video.tubelets[static_cast<std::size_t>(oid)], sid, oid);
}

}  // namespace detail

// --- dataset -----------------------------------------------------------------

inline jsn dataset_to_json(const Dataset& ds) {
  jsn j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "dataset";
  j["suite"] = ds.suite;
  j["split"] = ds.split;
  j["predicate_names"] = ds.predicate_names;
  j["category_names"] = ds.category_names;
  j["videos"] = jsn::array();
  for (const Video& v : ds.videos) {
    jsn jv;
    jv["video_id"] = v.video_id;
    jv["num_frames"] = v.num_frames;
    jv["tubelets"] = jsn::array();
    for (const Tubelet& t : v.tubelets) {
      jsn jt;
      jt["category"] = t.category;
      jt["score"] = t.score;
      jt["t_begin"] = t.t_begin;
      jt["boxes"] = jsn::array();
      for (const Box& b : t.boxes) jt["boxes"].push_back(detail::box_to_json(b));
      jv["tubelets"].push_back(std::move(jt));
    }
    jv["gt"] = jsn::array();
    for (const RelationInstance& g : v.gt) {
      jsn jg;
      jg["subject_cat"] = g.subject_cat;
      jg["predicate"] = g.predicate;
      jg["object_cat"] = g.object_cat;
      jg["subject_id"] = g.subject_id;
      jg["object_id"] = g.object_id;
      jg["span"] = detail::span_to_json(g.span);
      jv["gt"].push_back(std::move(jg));
    }
    j["videos"].push_back(std::move(jv));
  }
  return j;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  atomic_write(path, dataset_to_json(ds).dump(2) + "\n");
}

namespace detail {

inline Dataset load_dataset_impl(const std::string& path) {
  const jsn j = parse_json(read_file(path), path);
  check_schema(j, "dataset", path);
  Dataset ds;
  ds.suite = j.value("suite", "");
  ds.split = j.value("split", "");
  ds.predicate_names = j.at("predicate_names").get<std::vector<std::string>>();
  ds.category_names = j.at("category_names").get<std::vector<std::string>>();
  for (const jsn& jv : j.at("videos")) {
    Video v;
    v.video_id = jv.at("video_id").get<std::string>();
    const std::string where = path + ": video " + v.video_id;
    v.num_frames = jv.at("num_frames").get<int>();
    if (v.num_frames < 1) throw DataError(where + ": num_frames must be positive");
    for (const jsn& jt : jv.at("tubelets")) {
      Tubelet t;
      t.category = jt.at("category").get<int>();
      if (t.category < 0 || t.category >= ds.num_categories())
        throw DataError(where + ": tubelet category out of range");
      t.score = jt.at("score").get<double>();
      if (!(t.score >= 0.0 && t.score <= 1.0))
        throw DataError(where + ": tubelet score outside [0,1]");
      t.t_begin = jt.at("t_begin").get<int>();
      for (const jsn& jb : jt.at("boxes")) t.boxes.push_back(detail::box_from_json(jb, where));
      if (t.boxes.empty()) throw DataError(where + ": tubelet has no boxes");
      if (t.t_begin < 0 || t.t_end() > v.num_frames)
        throw DataError(where + ": tubelet span outside the video");
      v.tubelets.push_back(std::move(t));
    }
    for (const jsn& jg : jv.at("gt")) {
      RelationInstance g;
      g.subject_cat = jg.at("subject_cat").get<int>();
      g.predicate = jg.at("predicate").get<int>();
      g.object_cat = jg.at("object_cat").get<int>();
      g.subject_id = jg.at("subject_id").get<int>();
      g.object_id = jg.at("object_id").get<int>();
      g.span = span_from_json(jg.at("span"), where);
      if (g.predicate < 0 || g.predicate >= ds.num_predicates())
        throw DataError(where + ": gt predicate out of range");
      const int nt = static_cast<int>(v.tubelets.size());
      if (g.subject_id < 0 || g.subject_id >= nt || g.object_id < 0 || g.object_id >= nt ||
          g.subject_id == g.object_id)
        throw DataError(where + ": gt tubelet ids out of range");
      g.subject_track = v.tubelets[static_cast<std::size_t>(g.subject_id)];
      g.object_track = v.tubelets[static_cast<std::size_t>(g.object_id)];
      if (g.subject_cat != g.subject_track.category || g.object_cat != g.object_track.category)
        throw DataError(where + ": gt categories disagree with the tracks");
      if (g.span.t1 < std::max(g.subject_track.t_begin, g.object_track.t_begin) ||
          g.span.t2 > std::min(g.subject_track.t_end(), g.object_track.t_end()))
        throw DataError(where + ": gt span not covered by both tracks");
      v.gt.push_back(std::move(g));
    }
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

}  // namespace detail

// GT tracks are stored by tubelet id and rehydrated on load; matching
// restricts them to the instance span, so the full track is the faithful
// reload.
inline Dataset load_dataset(const std::string& path) {
  return detail::as_data_error(path, [&] { return detail::load_dataset_impl(path); });
}

// --- checkpoints ---------------------------------------------------------------

namespace detail {

inline jsn tensor_to_json(const ParamTensor& p) {
  jsn j;
  j["rows"] = p.value.rows();
  j["cols"] = p.value.cols();
  j["data"] = p.value.data();
  return j;
}

inline void tensor_from_json(const jsn& j, int rows, int cols, ParamTensor& p,
                             const std::string& name, const std::string& path) {
  if (!j.contains(name)) throw DataError(path + ": checkpoint missing tensor " + name);
  const jsn& t = j.at(name);
  if (t.at("rows").get<int>() != rows || t.at("cols").get<int>() != cols)
    throw DataError(path + ": tensor " + name + " has shape " +
                    std::to_string(t.at("rows").get<int>()) + "x" +
                    std::to_string(t.at("cols").get<int>()) + ", expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  const auto data = t.at("data").get<std::vector<double>>();
  if (data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw DataError(path + ": tensor " + name + " data length mismatch");
  p = ParamTensor(name, rows, cols);
  std::copy(data.begin(), data.end(), p.value.data().begin());
}

inline Checkpoint load_checkpoint_impl(const std::string& path) {
  const jsn j = parse_json(read_file(path), path);
  check_schema(j, "checkpoint", path);
  Checkpoint ck;
  Model& m = ck.model;

  const jsn& f = j.at("features");
  m.fcfg.use_motion = f.at("use_motion").get<bool>();
  m.fcfg.use_mask = f.at("use_mask").get<bool>();
  m.fcfg.use_language = f.at("use_language").get<bool>();
  m.fcfg.mask_grid = f.at("mask_grid").get<int>();
  m.fcfg.embed_dim = f.at("embed_dim").get<int>();
  for (const jsn& ch : f.at("external_channels"))
    m.fcfg.external_channels.push_back({ch.at("name").get<std::string>(), ch.at("dim").get<int>()});

  m.category_names = j.at("category_names").get<std::vector<std::string>>();
  m.predicate_names = j.at("predicate_names").get<std::vector<std::string>>();
  m.trained_epochs = j.at("trained_epochs").get<int>();

  SocialFabricParams& p = m.params;
  const jsn& dims = j.at("dims");
  p.F = dims.at("F").get<int>();
  p.D = dims.at("D").get<int>();
  p.K = dims.at("K").get<int>();
  p.H = dims.at("H").get<int>();
  p.variant = parse_variant(j.at("variant").get<std::string>());
  p.beta = j.at("beta").get<double>();
  if (p.F != m.fcfg.total_dim())
    throw DataError(path + ": dims.F disagrees with the feature config");

  const jsn& params = j.at("params");
  tensor_from_json(params, 1, p.F, p.ln_gain, "ln_gain", path);
  tensor_from_json(params, 1, p.F, p.ln_bias, "ln_bias", path);
  tensor_from_json(params, p.F, p.D, p.W, "W", path);
  tensor_from_json(params, 1, p.D, p.b, "b", path);
  tensor_from_json(params, p.K, p.D, p.C, "C", path);
  tensor_from_json(params, p.head_input_dim(), p.H, p.head_W, "head_W", path);
  tensor_from_json(params, 1, p.H, p.head_b, "head_b", path);
  tensor_from_json(params, std::max(static_cast<int>(m.category_names.size()), 1),
                   m.fcfg.embed_dim, m.class_embed, "class_embed", path);

  const jsn& meta = j.at("meta");
  ck.meta.stage = j.at("stage").get<std::string>();
  ck.meta.epochs = meta.at("epochs").get<int>();
  ck.meta.final_loss = meta.at("final_loss").get<double>();
  ck.meta.seed = meta.at("seed").get<uint64_t>();

  m.validate();
  return ck;
}

}  // namespace detail

inline jsn checkpoint_to_json(const Model& m, const CheckpointMeta& meta) {
  m.validate();
  jsn j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "checkpoint";
  j["stage"] = meta.stage;
  j["variant"] = variant_name(m.params.variant);
  j["dims"] = {{"F", m.params.F}, {"D", m.params.D}, {"K", m.params.K}, {"H", m.params.H}};
  j["beta"] = m.params.beta;
  jsn f;
  f["use_motion"] = m.fcfg.use_motion;
  f["use_mask"] = m.fcfg.use_mask;
  f["use_language"] = m.fcfg.use_language;
  f["mask_grid"] = m.fcfg.mask_grid;
  f["embed_dim"] = m.fcfg.embed_dim;
  f["external_channels"] = jsn::array();
  for (const auto& ch : m.fcfg.external_channels)
    f["external_channels"].push_back({{"name", ch.name}, {"dim", ch.dim}});
  j["features"] = std::move(f);
  j["category_names"] = m.category_names;
  j["predicate_names"] = m.predicate_names;
  j["trained_epochs"] = m.trained_epochs;
  jsn params;
  params["ln_gain"] = detail::tensor_to_json(m.params.ln_gain);
  params["ln_bias"] = detail::tensor_to_json(m.params.ln_bias);
  params["W"] = detail::tensor_to_json(m.params.W);
  params["b"] = detail::tensor_to_json(m.params.b);
  params["C"] = detail::tensor_to_json(m.params.C);
  params["head_W"] = detail::tensor_to_json(m.params.head_W);
  params["head_b"] = detail::tensor_to_json(m.params.head_b);
  params["class_embed"] = detail::tensor_to_json(m.class_embed);
  j["params"] = std::move(params);
  j["meta"] = {{"epochs", meta.epochs}, {"final_loss", meta.final_loss}, {"seed", meta.seed}};
  return j;
}

inline void save_checkpoint(const Model& m, const CheckpointMeta& meta, const std::string& path) {
  atomic_write(path, checkpoint_to_json(m, meta).dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return detail::as_data_error(path, [&] { return detail::load_checkpoint_impl(path); });
}

// --- proposals and detections (JSON lines) ---------------------------------------

inline std::string proposals_to_jsonl(const Dataset& ds,
                                      const std::vector<std::vector<InteractionProposal>>& props) {
  require(props.size() == ds.videos.size(), "proposals not aligned with videos");
  std::string out;
  for (std::size_t v = 0; v < props.size(); ++v) {
    for (const InteractionProposal& p : props[v]) {
      jsn j;
      j["video_id"] = ds.videos[v].video_id;
      j["subject_id"] = p.pair.subject_id;
      j["object_id"] = p.pair.object_id;
      j["span"] = detail::span_to_json(p.span);
      j["mean_score"] = p.mean_score;
      j["subject_score"] = p.subject_score;
      j["object_score"] = p.object_score;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

inline void save_proposals(const Dataset& ds,
                           const std::vector<std::vector<InteractionProposal>>& props,
                           const std::string& path) {
  atomic_write(path, proposals_to_jsonl(ds, props));
}

inline std::vector<std::vector<InteractionProposal>> load_proposals(const Dataset& ds,
                                                                    const std::string& path) {
  return detail::as_data_error(path, [&] {
    std::vector<std::vector<InteractionProposal>> props(ds.videos.size());
    detail::for_each_jsonl(path, [&](const jsn& j, std::size_t line_no) {
      const std::string where = path + ":" + std::to_string(line_no);
      const std::size_t v = detail::video_index(ds, j.at("video_id").get<std::string>(), where);
      InteractionProposal p;
      p.pair = detail::pair_by_ids(ds.videos[v], j.at("subject_id").get<int>(),
                                   j.at("object_id").get<int>(), where);
      p.span = detail::span_from_json(j.at("span"), where);
      if (p.span.t1 < p.pair.overlap.t1 || p.span.t2 > p.pair.overlap.t2)
        throw DataError(where + ": span outside the pair overlap");
      p.mean_score = j.at("mean_score").get<double>();
      p.subject_score = j.at("subject_score").get<double>();
      p.object_score = j.at("object_score").get<double>();
      props[v].push_back(std::move(p));
    });
    return props;
  });
}

inline std::string detections_to_jsonl(const Dataset& ds,
                                       const std::vector<std::vector<ScoredTriplet>>& dets) {
  require(dets.size() == ds.videos.size(), "detections not aligned with videos");
  std::string out;
  for (std::size_t v = 0; v < dets.size(); ++v) {
    for (const ScoredTriplet& t : dets[v]) {
      jsn j;
      j["video_id"] = ds.videos[v].video_id;
      j["subject_id"] = t.instance.subject_id;
      j["object_id"] = t.instance.object_id;
      j["subject_cat"] = t.instance.subject_cat;
      j["predicate"] = t.instance.predicate;
      j["object_cat"] = t.instance.object_cat;
      j["span"] = detail::span_to_json(t.instance.span);
      j["predicate_prob"] = t.predicate_prob;
      j["subject_score"] = t.subject_score;
      j["object_score"] = t.object_score;
      j["final_score"] = t.final_score;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

inline void save_detections(const Dataset& ds, const std::vector<std::vector<ScoredTriplet>>& dets,
                            const std::string& path) {
  atomic_write(path, detections_to_jsonl(ds, dets));
}

inline std::vector<std::vector<ScoredTriplet>> load_detections(const Dataset& ds,
                                                               const std::string& path) {
  return detail::as_data_error(path, [&] {
    std::vector<std::vector<ScoredTriplet>> dets(ds.videos.size());
    detail::for_each_jsonl(path, [&](const jsn& j, std::size_t line_no) {
      const std::string where = path + ":" + std::to_string(line_no);
      const std::size_t v = detail::video_index(ds, j.at("video_id").get<std::string>(), where);
      const TubeletPair pair = detail::pair_by_ids(ds.videos[v], j.at("subject_id").get<int>(),
                                                   j.at("object_id").get<int>(), where);
      ScoredTriplet t;
      t.instance.subject_cat = j.at("subject_cat").get<int>();
      t.instance.predicate = j.at("predicate").get<int>();
      t.instance.object_cat = j.at("object_cat").get<int>();
      t.instance.subject_id = pair.subject_id;
      t.instance.object_id = pair.object_id;
      t.instance.subject_track = pair.subject;
      t.instance.object_track = pair.object;
      t.instance.span = detail::span_from_json(j.at("span"), where);
      t.predicate_prob = j.at("predicate_prob").get<double>();
      t.subject_score = j.at("subject_score").get<double>();
      t.object_score = j.at("object_score").get<double>();
      t.final_score = j.at("final_score").get<double>();
      t.instance.score = t.final_score;
      dets[v].push_back(std::move(t));
    });
    return dets;
  });
}

// --- metric reports -----------------------------------------------------------

inline jsn report_to_json(const MetricReport& rep) {
  jsn j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "report";
  j["p_at"] = jsn::object();
  for (const auto& [k, v] : rep.p_at) j["p_at"][std::to_string(k)] = v;
  j["map"] = rep.map;
  j["recall_at"] = jsn::object();
  for (const auto& [n, v] : rep.recall_at) j["recall_at"][std::to_string(n)] = v;
  j["per_duration"] = jsn::object();
  for (const auto& [bucket, v] : rep.per_duration) j["per_duration"][bucket] = v;
  j["gt_empty_warning"] = rep.gt_empty_warning;
  return j;
}

inline void save_report(const MetricReport& rep, const std::string& path) {
  atomic_write(path, report_to_json(rep).dump(2) + "\n");
}

inline MetricReport load_report(const std::string& path) {
  return detail::as_data_error(path, [&] {
    const jsn j = detail::parse_json(read_file(path), path);
    detail::check_schema(j, "report", path);
    MetricReport rep;
    for (const auto& [k, v] : j.at("p_at").items()) rep.p_at[std::stoi(k)] = v.get<double>();
    rep.map = j.at("map").get<double>();
    for (const auto& [n, v] : j.at("recall_at").items())
      rep.recall_at[std::stoi(n)] = v.get<double>();
    for (const auto& [b, v] : j.at("per_duration").items())
      rep.per_duration[b] = v.get<double>();
    rep.gt_empty_warning = j.at("gt_empty_warning").get<bool>();
    return rep;
  });
}

inline std::string report_table(const MetricReport& rep) {
  char line[64];
  std::string out = "metric        value\n";
  auto add = [&](const std::string& name, double v) {
    std::snprintf(line, sizeof(line), "%-12s %7.4f\n", name.c_str(), v);
    out += line;
  };
  for (const auto& [k, v] : rep.p_at) add("P@" + std::to_string(k), v);
  add("mAP", rep.map);
  for (const auto& [n, v] : rep.recall_at) add("R@" + std::to_string(n), v);
  for (const auto& [bucket, v] : rep.per_duration) add("mAP[" + bucket + "]", v);
  if (rep.gt_empty_warning) out += "warning: some videos have no ground truth\n";
  return out;
}

inline std::string duration_csv(const MetricReport& rep) {
  std::string out = "bucket,map\n";
  char line[64];
  for (const std::string bucket : {"short", "medium", "long"}) {
    const auto it = rep.per_duration.find(bucket);
    std::snprintf(line, sizeof(line), "%s,%.6f\n", bucket.c_str(),
                  it == rep.per_duration.end() ? 0.0 : it->second);
    out += line;
  }
  return out;
}

inline std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,loss\n";
  char line[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i + 1, curve[i]);
    out += line;
  }
  return out;
}

// --- queries and search results --------------------------------------------------

// A query file is a JSON list of single-frame examples:
//   [{"subject": [x1,y1,x2,y2], "object": [...], "subject_cat": 3, "object_cat": 0}]
// with the categories optional.
inline std::vector<QueryExample> load_query(const std::string& path) {
  return detail::as_data_error(path, [&] {
    const jsn j = detail::parse_json(read_file(path), path);
    if (!j.is_array() || j.empty()) throw DataError(path + ": expected a non-empty JSON list");
    std::vector<QueryExample> examples;
    for (const jsn& je : j) {
      QueryExample ex;
      ex.subject = detail::box_from_json(je.at("subject"), path);
      ex.object = detail::box_from_json(je.at("object"), path);
      ex.subject_cat = je.value("subject_cat", -1);
      ex.object_cat = je.value("object_cat", -1);
      examples.push_back(ex);
    }
    return examples;
  });
}

inline std::string search_results_to_jsonl(const std::vector<SearchHit>& hits) {
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const SearchHit& h = hits[i];
    jsn j;
    j["rank"] = i + 1;
    j["score"] = h.score;
    j["video_id"] = h.video_id;
    j["subject_id"] = h.proposal.pair.subject_id;
    j["object_id"] = h.proposal.pair.object_id;
    j["span"] = detail::span_to_json(h.proposal.span);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_search_results(const std::vector<SearchHit>& hits, const std::string& path) {
  atomic_write(path, search_results_to_jsonl(hits));
}

// --- external feature channels -----------------------------------------------------

// One file per (video, channel): {video_id, channel_name, dim, frames: {"12": [..]}}.
inline ExternalChannelData load_external_channel(const std::string& path) {
  return detail::as_data_error(path, [&] {
    const jsn j = detail::parse_json(read_file(path), path);
    ExternalChannelData ch;
    ch.video_id = j.at("video_id").get<std::string>();
    ch.channel_name = j.at("channel_name").get<std::string>();
    ch.dim = j.at("dim").get<int>();
    if (ch.dim < 1) throw DataError(path + ": dim must be positive");
    for (const auto& [key, arr] : j.at("frames").items()) {
      int frame = 0;
      try {
        frame = std::stoi(key);
      } catch (const std::exception&) {
        throw DataError(path + ": frame key '" + key + "' is not an integer");
      }
      const auto vec = arr.get<std::vector<double>>();
      if (static_cast<int>(vec.size()) != ch.dim)
        throw DataError(path + ": frame " + key + " has length " + std::to_string(vec.size()) +
                        ", expected " + std::to_string(ch.dim));
      ch.frames[frame] = vec;
    }
    return ch;
  });
}

}  // namespace socialfabric
