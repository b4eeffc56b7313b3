// sfrel: command line front end over the relation pipeline. Subcommands cover
// synthetic data generation, the two training stages, proposal generation,
// detection, evaluation, primitive search, gradient checking, and the K /
// variant ablations. Exit codes: 0 ok, 1 usage, 2 bad data, 3 numeric failure.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "socialfabric/eval.hpp"
#include "socialfabric/gradcheck.hpp"
#include "socialfabric/io.hpp"
#include "socialfabric/nn.hpp"
#include "socialfabric/search.hpp"
#include "socialfabric/synth.hpp"

namespace sf = socialfabric;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  int d = 512;
  int k = 64;
  std::string variant = "aggregate";
  std::uint64_t seed = 0;
  sf::FeatureConfig features;
  sf::Stage1Config stage1;
  sf::Stage2Config stage2;
};

void reject_unknown_keys(const sf::jsn& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw sf::DataError("config: unknown key \"" + item.key() + "\" in " + where);
  }
}

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  const sf::jsn j = sf::detail::parse_json(sf::read_file(path), path);
  sf::detail::as_data_error(path, [&] {
    if (!j.is_object()) throw sf::DataError("config: top level must be an object");
    reject_unknown_keys(j, {"d", "k", "variant", "seed", "features", "stage1", "stage2"}, "config");
    rc.d = j.value("d", rc.d);
    rc.k = j.value("k", rc.k);
    rc.variant = j.value("variant", rc.variant);
    rc.seed = j.value("seed", rc.seed);
    if (j.contains("features")) {
      const sf::jsn& f = j["features"];
      reject_unknown_keys(f, {"motion", "mask", "language", "mask_grid", "embed_dim"}, "features");
      rc.features.use_motion = f.value("motion", rc.features.use_motion);
      rc.features.use_mask = f.value("mask", rc.features.use_mask);
      rc.features.use_language = f.value("language", rc.features.use_language);
      rc.features.mask_grid = f.value("mask_grid", rc.features.mask_grid);
      rc.features.embed_dim = f.value("embed_dim", rc.features.embed_dim);
    }
    if (j.contains("stage1")) {
      const sf::jsn& s = j["stage1"];
      reject_unknown_keys(
          s, {"m", "epochs", "lr", "batch", "thresholds", "min_len", "dedup_tiou", "neg_ratio"},
          "stage1");
      rc.stage1.m = s.value("m", rc.stage1.m);
      rc.stage1.epochs = s.value("epochs", rc.stage1.epochs);
      rc.stage1.lr = s.value("lr", rc.stage1.lr);
      rc.stage1.batch = s.value("batch", rc.stage1.batch);
      rc.stage1.min_len = s.value("min_len", rc.stage1.min_len);
      rc.stage1.dedup_tiou = s.value("dedup_tiou", rc.stage1.dedup_tiou);
      rc.stage1.neg_ratio = s.value("neg_ratio", rc.stage1.neg_ratio);
      if (s.contains("thresholds"))
        rc.stage1.thresholds = s["thresholds"].get<std::vector<double>>();
    }
    if (j.contains("stage2")) {
      const sf::jsn& s = j["stage2"];
      reject_unknown_keys(s, {"n", "epochs", "lr", "batch", "top_p", "freeze_trunk"}, "stage2");
      rc.stage2.n = s.value("n", rc.stage2.n);
      rc.stage2.epochs = s.value("epochs", rc.stage2.epochs);
      rc.stage2.lr = s.value("lr", rc.stage2.lr);
      rc.stage2.batch = s.value("batch", rc.stage2.batch);
      rc.stage2.top_p = s.value("top_p", rc.stage2.top_p);
      rc.stage2.freeze_trunk = s.value("freeze_trunk", rc.stage2.freeze_trunk);
    }
  });
  return rc;
}

sf::FeatureConfig parse_feature_list(const std::string& csv, const sf::FeatureConfig& base) {
  sf::FeatureConfig out = base;
  out.use_motion = out.use_mask = out.use_language = false;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (item == "motion") out.use_motion = true;
    else if (item == "mask") out.use_mask = true;
    else if (item == "language") out.use_language = true;
    else if (!item.empty())
      throw std::invalid_argument("unknown feature channel \"" + item +
                                  "\" (expected motion, mask, language)");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  sf::require(out.use_motion || out.use_mask || out.use_language,
              "--features must enable at least one channel");
  return out;
}

// Shared flags across the training / inference subcommands. Values resolve as
// built-in defaults, then --config, then explicit flags.
struct SharedFlags {
  std::string config_path;
  int d = 0, k = 0, m = 0, n = 0, epochs = 0, batch = 0, top_p = 0;
  double lr = 0.0;
  std::string variant, features;
  std::uint64_t seed = 0;
  CLI::Option *o_config = nullptr, *o_d = nullptr, *o_k = nullptr, *o_m = nullptr,
              *o_n = nullptr, *o_epochs = nullptr, *o_batch = nullptr, *o_top_p = nullptr,
              *o_lr = nullptr, *o_variant = nullptr, *o_features = nullptr, *o_seed = nullptr;

  void attach(CLI::App* cmd) {
    o_config = cmd->add_option("--config", config_path, "JSON config file");
    o_d = cmd->add_option("--d", d, "embedding dimension");
    o_k = cmd->add_option("--k", k, "number of primitives");
    o_variant = cmd->add_option("--variant", variant, "avgpool | literal | aggregate");
    o_features = cmd->add_option("--features", features,
                                 "comma list of channels: motion,mask,language");
    o_seed = cmd->add_option("--seed", seed, "rng seed");
    o_m = cmd->add_option("--m", m, "stage-1 window size");
    o_n = cmd->add_option("--n", n, "stage-2 sampled frames per span");
    o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
    o_lr = cmd->add_option("--lr", lr, "learning rate");
    o_batch = cmd->add_option("--batch", batch, "minibatch size");
    o_top_p = cmd->add_option("--top-p", top_p, "predicates kept per proposal");
  }

  RunConfig resolve() const {
    RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (o_d->count()) rc.d = d;
    if (o_k->count()) rc.k = k;
    if (o_variant->count()) rc.variant = variant;
    if (o_features->count()) rc.features = parse_feature_list(features, rc.features);
    if (o_seed->count()) rc.seed = seed;
    if (o_m->count()) rc.stage1.m = m;
    if (o_n->count()) rc.stage2.n = n;
    if (o_epochs->count()) {
      rc.stage1.epochs = epochs;
      rc.stage2.epochs = epochs;
    }
    if (o_lr->count()) {
      rc.stage1.lr = lr;
      rc.stage2.lr = lr;
    }
    if (o_batch->count()) {
      rc.stage1.batch = batch;
      rc.stage2.batch = batch;
    }
    if (o_top_p->count()) rc.stage2.top_p = top_p;
    return rc;
  }
};

// stage1.json -> stage1_loss.csv, next to the checkpoint.
std::string loss_curve_path(const std::string& checkpoint_path) {
  fs::path p(checkpoint_path);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + "_loss.csv")).string();
}

std::vector<std::vector<sf::InteractionProposal>> propose_all(const sf::Dataset& ds,
                                                              const sf::Model& model,
                                                              const sf::Stage1Config& cfg) {
  std::vector<std::vector<sf::InteractionProposal>> out(ds.videos.size());
  for (std::size_t v = 0; v < ds.videos.size(); ++v)
    out[v] = sf::generate_proposals(ds.videos[v], model, cfg);
  return out;
}

std::vector<std::vector<sf::ScoredTriplet>> detect_all(
    const std::vector<std::vector<sf::InteractionProposal>>& proposals, const sf::Model& model,
    const sf::Stage2Config& cfg) {
  std::vector<std::vector<sf::ScoredTriplet>> out(proposals.size());
  for (std::size_t v = 0; v < proposals.size(); ++v)
    out[v] = sf::assemble_triplets(proposals[v], model, cfg);
  return out;
}

sf::MetricReport eval_detections(const sf::Dataset& ds,
                                 const std::vector<std::vector<sf::ScoredTriplet>>& dets) {
  sf::require(dets.size() == ds.videos.size(), "detections not aligned with videos");
  std::vector<sf::VideoResult> results(ds.videos.size());
  for (std::size_t v = 0; v < ds.videos.size(); ++v) {
    results[v].video_id = ds.videos[v].video_id;
    results[v].predictions = dets[v];
    results[v].gt = ds.videos[v].gt;
  }
  return sf::evaluate(results);
}

std::size_t count_rows(const std::vector<std::vector<sf::InteractionProposal>>& per_video) {
  std::size_t n = 0;
  for (const auto& v : per_video) n += v.size();
  return n;
}

// ---- subcommand bodies ----

int cmd_gen(const std::string& suite, const std::string& split, std::uint64_t seed,
            const std::string& out_dir) {
  std::vector<sf::SuiteKind> kinds;
  if (suite == "all") {
    kinds = {sf::SuiteKind::separable, sf::SuiteKind::compositional, sf::SuiteKind::duration};
  } else {
    kinds = {sf::parse_suite(suite)};
  }
  std::vector<std::string> splits;
  if (split == "both") splits = {"train", "test"};
  else splits = {split};

  fs::create_directories(out_dir);
  for (const sf::SuiteKind kind : kinds) {
    for (const std::string& sp : splits) {
      const sf::Dataset ds = sf::make_suite(kind, sp, seed);
      const std::string path =
          (fs::path(out_dir) / (std::string(sf::suite_name(kind)) + "_" + sp + ".json")).string();
      sf::save_dataset(ds, path);
      std::size_t gt = 0;
      for (const auto& v : ds.videos) gt += v.gt.size();
      std::printf("gen: %s/%s -> %s (%zu videos, %zu gt relations)\n", sf::suite_name(kind),
                  sp.c_str(), path.c_str(), ds.videos.size(), gt);
    }
  }
  return 0;
}

int cmd_train_stage1(const std::string& data_path, const SharedFlags& flags,
                     const std::string& out_path) {
  const RunConfig rc = flags.resolve();
  const sf::Dataset ds = sf::load_dataset(data_path);
  sf::RngState rng(rc.seed);
  sf::Model model = sf::init_model(rc.features, rc.d, rc.k, 1, sf::parse_variant(rc.variant),
                                   ds.category_names, {"interaction"}, rng);
  const std::vector<double> curve = sf::train_stage1(ds, model, rc.stage1, rng);
  sf::CheckpointMeta meta;
  meta.stage = "stage1";
  meta.epochs = rc.stage1.epochs;
  meta.final_loss = curve.empty() ? 0.0 : curve.back();
  meta.seed = rc.seed;
  sf::save_checkpoint(model, meta, out_path);
  sf::atomic_write(loss_curve_path(out_path), sf::loss_curve_csv(curve));
  std::printf("train-stage1: %d epochs on %zu videos, final loss %.6f -> %s\n", rc.stage1.epochs,
              ds.videos.size(), meta.final_loss, out_path.c_str());
  return 0;
}

int cmd_propose(const std::string& data_path, const std::string& ckpt_path,
                const SharedFlags& flags, const std::string& out_path) {
  const RunConfig rc = flags.resolve();
  const sf::Dataset ds = sf::load_dataset(data_path);
  const sf::Checkpoint ck = sf::load_checkpoint(ckpt_path);
  if (ck.model.params.H != 1)
    throw sf::DataError("propose: checkpoint is not a stage-1 model (head width " +
                        std::to_string(ck.model.params.H) + ")");
  const auto proposals = propose_all(ds, ck.model, rc.stage1);
  sf::save_proposals(ds, proposals, out_path);
  std::printf("propose: %zu proposals across %zu videos -> %s\n", count_rows(proposals),
              ds.videos.size(), out_path.c_str());
  return 0;
}

int cmd_train_stage2(const std::string& data_path, const std::string& props_path,
                     const std::string& ckpt_path, const SharedFlags& flags, bool freeze,
                     const std::string& out_path) {
  RunConfig rc = flags.resolve();
  if (freeze) rc.stage2.freeze_trunk = true;
  const sf::Dataset ds = sf::load_dataset(data_path);
  const auto proposals = sf::load_proposals(ds, props_path);
  const sf::Checkpoint ck = sf::load_checkpoint(ckpt_path);
  if (ck.model.params.H != 1)
    throw sf::DataError("train-stage2: checkpoint is not a stage-1 model (head width " +
                        std::to_string(ck.model.params.H) + ")");
  sf::RngState rng(rc.seed);
  sf::Model model =
      sf::make_stage2_model(ck.model, ds.num_predicates(), ds.predicate_names, rng);
  const std::vector<double> curve = sf::train_stage2(ds, proposals, model, rc.stage2, rng);
  sf::CheckpointMeta meta;
  meta.stage = "stage2";
  meta.epochs = rc.stage2.epochs;
  meta.final_loss = curve.empty() ? 0.0 : curve.back();
  meta.seed = rc.seed;
  sf::save_checkpoint(model, meta, out_path);
  sf::atomic_write(loss_curve_path(out_path), sf::loss_curve_csv(curve));
  std::printf("train-stage2: %d epochs, %zu proposals, final loss %.6f -> %s\n", rc.stage2.epochs,
              count_rows(proposals), meta.final_loss, out_path.c_str());
  return 0;
}

int cmd_detect(const std::string& data_path, const std::string& props_path,
               const std::string& ckpt_path, const SharedFlags& flags,
               const std::string& out_path) {
  const RunConfig rc = flags.resolve();
  const sf::Dataset ds = sf::load_dataset(data_path);
  const auto proposals = sf::load_proposals(ds, props_path);
  const sf::Checkpoint ck = sf::load_checkpoint(ckpt_path);
  if (ck.model.params.H != ds.num_predicates())
    throw sf::DataError("detect: checkpoint head width " + std::to_string(ck.model.params.H) +
                        " does not match the dataset's " +
                        std::to_string(ds.num_predicates()) + " predicates");
  const auto dets = detect_all(proposals, ck.model, rc.stage2);
  sf::save_detections(ds, dets, out_path);
  std::size_t n = 0;
  for (const auto& v : dets) n += v.size();
  std::printf("detect: %zu scored triplets across %zu videos -> %s\n", n, ds.videos.size(),
              out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& dets_path,
             const std::string& out_path, const std::string& csv_path) {
  const sf::Dataset ds = sf::load_dataset(data_path);
  const auto dets = sf::load_detections(ds, dets_path);
  const sf::MetricReport rep = eval_detections(ds, dets);
  if (!out_path.empty()) sf::save_report(rep, out_path);
  if (!csv_path.empty()) sf::atomic_write(csv_path, sf::duration_csv(rep));
  std::fputs(sf::report_table(rep).c_str(), stdout);
  if (rep.gt_empty_warning)
    std::fputs("warning: at least one video has no ground-truth relations\n", stderr);
  return 0;
}

int cmd_search(const std::string& data_path, const std::string& props_path,
               const std::string& ckpt_path, const std::string& query_path,
               const SharedFlags& flags, int top_r, const std::string& out_path) {
  const RunConfig rc = flags.resolve();
  const sf::Dataset ds = sf::load_dataset(data_path);
  const auto proposals = sf::load_proposals(ds, props_path);
  const sf::Checkpoint ck = sf::load_checkpoint(ckpt_path);
  const std::vector<sf::QueryExample> examples = sf::load_query(query_path);
  const sf::PrimitiveQuery query = sf::make_query(examples, ck.model);
  const auto hits = sf::search(query, ds, proposals, ck.model, top_r, rc.stage2.n);
  if (!out_path.empty()) sf::save_search_results(hits, out_path);
  std::string resolved;
  for (const int k : query.resolved) resolved += " " + std::to_string(k);
  std::printf("search: %zu examples resolved to primitives%s\n", examples.size(),
              resolved.c_str());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::printf("%3zu. %-24s [%d, %d]  score %.6f\n", i + 1, hits[i].video_id.c_str(),
                hits[i].proposal.span.t1, hits[i].proposal.span.t2, hits[i].score);
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int configs) {
  sf::require(configs >= 1, "gradcheck: --configs must be positive");
  sf::RngState rng(seed);
  double worst_all = 0.0;
  for (int i = 0; i < configs; ++i) {
    const int F = 4 + rng.uniform_int(9);
    const int D = 3 + rng.uniform_int(8);
    const int K = 1 + rng.uniform_int(8);
    const sf::Variant variant = static_cast<sf::Variant>(i % 3);
    const int H = (i % 2 == 0) ? 1 : 2 + rng.uniform_int(4);
    const int rows = 2 + rng.uniform_int(6);

    sf::SocialFabricParams params = sf::init_params(F, D, K, H, variant, rng);
    sf::Matrix S(rows, F);
    for (double& v : S.data()) v = rng.normal();
    const int label = (H == 1) ? rng.uniform_int(2) : rng.uniform_int(H);

    const auto loss_fn = [&]() {
      sf::SfeCache c;
      const std::vector<double> logits = sf::sfe_forward(S, params, c);
      if (H == 1) return sf::bce_loss(sf::sigmoid(logits[0]), label).loss;
      return sf::ce_loss(logits, label).loss;
    };

    params.zero_grads();
    sf::SfeCache cache;
    const std::vector<double> logits = sf::sfe_forward(S, params, cache);
    std::vector<double> dlogits;
    if (H == 1) {
      dlogits = {sf::sigmoid(logits[0]) - label};
    } else {
      dlogits = sf::ce_loss(logits, label).dlogits;
    }
    sf::sfe_backward(dlogits, cache, params);

    const double err = sf::grad_check(loss_fn, params.all_params());
    worst_all = std::max(worst_all, err);
    std::printf("config %2d: variant=%-9s F=%-2d D=%-2d K=%d H=%d rows=%d  rel err %.3e\n", i,
                sf::variant_name(variant), F, D, K, H, rows, err);
  }
  std::printf("gradcheck: %d configs, max rel err %.3e\n", configs, worst_all);
  if (worst_all >= 1e-4)
    throw sf::NumericError("gradient check failed: max rel err " + std::to_string(worst_all));
  return 0;
}

sf::MetricReport run_pipeline(const sf::Dataset& train, const sf::Dataset& test,
                              const RunConfig& rc) {
  sf::RngState rng(rc.seed);
  sf::Model m1 = sf::init_model(rc.features, rc.d, rc.k, 1, sf::parse_variant(rc.variant),
                                train.category_names, {"interaction"}, rng);
  sf::train_stage1(train, m1, rc.stage1, rng);
  const auto train_props = propose_all(train, m1, rc.stage1);
  sf::Model m2 = sf::make_stage2_model(m1, train.num_predicates(), train.predicate_names, rng);
  sf::train_stage2(train, train_props, m2, rc.stage2, rng);
  const auto test_props = propose_all(test, m1, rc.stage1);
  const auto dets = detect_all(test_props, m2, rc.stage2);
  return eval_detections(test, dets);
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!item.empty()) out.push_back(std::stoi(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  sf::require(!out.empty(), "expected a comma-separated list of integers");
  return out;
}

int cmd_ablate_k(const std::string& train_path, const std::string& test_path,
                 const SharedFlags& flags, const std::string& ks_csv,
                 const std::string& out_path) {
  const RunConfig base = flags.resolve();
  const std::vector<int> ks = parse_int_list(ks_csv);
  const sf::Dataset train = sf::load_dataset(train_path);
  const sf::Dataset test = sf::load_dataset(test_path);

  sf::jsn rows = sf::jsn::array();
  std::printf("%8s %8s %8s %8s %8s\n", "K", "P@1", "P@5", "mAP", "R@50");
  for (const int k : ks) {
    RunConfig rc = base;
    rc.k = k;
    const sf::MetricReport rep = run_pipeline(train, test, rc);
    std::printf("%8d %8.4f %8.4f %8.4f %8.4f\n", k, rep.p_at.at(1), rep.p_at.at(5), rep.map,
                rep.recall_at.at(50));
    rows.push_back({{"k", k},
                    {"p_at_1", rep.p_at.at(1)},
                    {"p_at_5", rep.p_at.at(5)},
                    {"map", rep.map},
                    {"recall_at_50", rep.recall_at.at(50)}});
  }
  if (!out_path.empty()) {
    sf::jsn j{{"schema_version", sf::kSchemaVersion}, {"kind", "ablation"}, {"axis", "k"},
              {"rows", rows}};
    sf::atomic_write(out_path, j.dump(2) + "\n");
    std::printf("ablate-k: wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_ablate_variant(const std::string& train_path, const std::string& test_path,
                       const SharedFlags& flags, const std::string& out_path) {
  const RunConfig base = flags.resolve();
  const sf::Dataset train = sf::load_dataset(train_path);
  const sf::Dataset test = sf::load_dataset(test_path);

  sf::jsn rows = sf::jsn::array();
  std::printf("%10s %8s %8s %8s %8s\n", "variant", "P@1", "P@5", "mAP", "R@50");
  for (const char* name : {"avgpool", "literal", "aggregate"}) {
    RunConfig rc = base;
    rc.variant = name;
    const sf::MetricReport rep = run_pipeline(train, test, rc);
    std::printf("%10s %8.4f %8.4f %8.4f %8.4f\n", name, rep.p_at.at(1), rep.p_at.at(5), rep.map,
                rep.recall_at.at(50));
    rows.push_back({{"variant", name},
                    {"p_at_1", rep.p_at.at(1)},
                    {"p_at_5", rep.p_at.at(5)},
                    {"map", rep.map},
                    {"recall_at_50", rep.recall_at.at(50)}});
  }
  if (!out_path.empty()) {
    sf::jsn j{{"schema_version", sf::kSchemaVersion}, {"kind", "ablation"}, {"axis", "variant"},
              {"rows", rows}};
    sf::atomic_write(out_path, j.dump(2) + "\n");
    std::printf("ablate-variant: wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_duration_report(const std::string& data_path, const std::string& dets_path,
                        const std::string& out_path, const std::string& report_path) {
  const sf::Dataset ds = sf::load_dataset(data_path);
  const auto dets = sf::load_detections(ds, dets_path);
  const sf::MetricReport rep = eval_detections(ds, dets);
  sf::atomic_write(out_path, sf::duration_csv(rep));
  if (!report_path.empty()) sf::save_report(rep, report_path);
  for (const char* b : {"short", "medium", "long"})
    std::printf("%-8s mAP %.4f\n", b, rep.per_duration.at(b));
  std::printf("duration-report: wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relation pipeline: synthesis, training, detection, evaluation, search"};
  app.require_subcommand(1);
  app.footer("Thread count is taken from SF_THREADS (default: hardware concurrency).");

  // gen
  std::string gen_suite, gen_split = "both", gen_out = "data";
  std::uint64_t gen_seed = 0;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic suite");
  gen->add_option("--suite", gen_suite, "separable | compositional | duration | all")->required();
  gen->add_option("--split", gen_split, "train | test | both");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output directory");

  // train-stage1
  std::string ts1_data, ts1_out;
  SharedFlags ts1_flags;
  CLI::App* ts1 = app.add_subcommand("train-stage1", "train the interaction scorer");
  ts1->add_option("--data", ts1_data, "training dataset JSON")->required();
  ts1->add_option("--out", ts1_out, "checkpoint path")->required();
  ts1_flags.attach(ts1);

  // propose
  std::string pr_data, pr_ckpt, pr_out;
  SharedFlags pr_flags;
  CLI::App* pr = app.add_subcommand("propose", "generate interaction proposals");
  pr->add_option("--data", pr_data, "dataset JSON")->required();
  pr->add_option("--checkpoint", pr_ckpt, "stage-1 checkpoint")->required();
  pr->add_option("--out", pr_out, "proposals JSONL path")->required();
  pr_flags.attach(pr);

  // train-stage2
  std::string ts2_data, ts2_props, ts2_ckpt, ts2_out;
  bool ts2_freeze = false;
  SharedFlags ts2_flags;
  CLI::App* ts2 = app.add_subcommand("train-stage2", "train the predicate classifier");
  ts2->add_option("--data", ts2_data, "training dataset JSON")->required();
  ts2->add_option("--proposals", ts2_props, "proposals JSONL from propose")->required();
  ts2->add_option("--checkpoint", ts2_ckpt, "stage-1 checkpoint to grow from")->required();
  ts2->add_option("--out", ts2_out, "checkpoint path")->required();
  ts2->add_flag("--freeze", ts2_freeze, "freeze the trunk; train the head only");
  ts2_flags.attach(ts2);

  // detect
  std::string dt_data, dt_props, dt_ckpt, dt_out;
  SharedFlags dt_flags;
  CLI::App* dt = app.add_subcommand("detect", "score predicates over proposals");
  dt->add_option("--data", dt_data, "dataset JSON")->required();
  dt->add_option("--proposals", dt_props, "proposals JSONL")->required();
  dt->add_option("--checkpoint", dt_ckpt, "stage-2 checkpoint")->required();
  dt->add_option("--out", dt_out, "detections JSONL path")->required();
  dt_flags.attach(dt);

  // eval
  std::string ev_data, ev_dets, ev_out, ev_csv;
  CLI::App* ev = app.add_subcommand("eval", "score detections against ground truth");
  ev->add_option("--data", ev_data, "dataset JSON")->required();
  ev->add_option("--detections", ev_dets, "detections JSONL")->required();
  ev->add_option("--out", ev_out, "metric report JSON path");
  ev->add_option("--csv", ev_csv, "per-duration mAP CSV path");

  // search
  std::string se_data, se_props, se_ckpt, se_query, se_out;
  int se_top_r = 10;
  SharedFlags se_flags;
  CLI::App* se = app.add_subcommand("search", "query proposals by primitive example");
  se->add_option("--data", se_data, "dataset JSON")->required();
  se->add_option("--proposals", se_props, "proposals JSONL")->required();
  se->add_option("--checkpoint", se_ckpt, "trained checkpoint")->required();
  se->add_option("--query", se_query, "query examples JSON")->required();
  se->add_option("--top-r", se_top_r, "results to keep");
  se->add_option("--out", se_out, "results JSONL path");
  se_flags.attach(se);

  // gradcheck
  std::uint64_t gc_seed = 0;
  int gc_configs = 20;
  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of the backward pass");
  gc->add_option("--seed", gc_seed, "rng seed");
  gc->add_option("--configs", gc_configs, "random configurations to sweep");

  // ablate-k
  std::string ak_train, ak_test, ak_ks = "1,8,32,64,128", ak_out;
  SharedFlags ak_flags;
  CLI::App* ak = app.add_subcommand("ablate-k", "full pipeline across primitive counts");
  ak->add_option("--train", ak_train, "training dataset JSON")->required();
  ak->add_option("--test", ak_test, "test dataset JSON")->required();
  ak->add_option("--ks", ak_ks, "comma list of K values");
  ak->add_option("--out", ak_out, "ablation JSON path");
  ak_flags.attach(ak);

  // ablate-variant
  std::string av_train, av_test, av_out;
  SharedFlags av_flags;
  CLI::App* av = app.add_subcommand("ablate-variant", "full pipeline across encoder variants");
  av->add_option("--train", av_train, "training dataset JSON")->required();
  av->add_option("--test", av_test, "test dataset JSON")->required();
  av->add_option("--out", av_out, "ablation JSON path");
  av_flags.attach(av);

  // duration-report
  std::string dr_data, dr_dets, dr_out, dr_report;
  CLI::App* dr = app.add_subcommand("duration-report", "per-duration mAP breakdown");
  dr->add_option("--data", dr_data, "dataset JSON")->required();
  dr->add_option("--detections", dr_dets, "detections JSONL")->required();
  dr->add_option("--out", dr_out, "CSV path")->required();
  dr->add_option("--report", dr_report, "also write the full metric report JSON");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen(gen_suite, gen_split, gen_seed, gen_out);
    if (ts1->parsed()) return cmd_train_stage1(ts1_data, ts1_flags, ts1_out);
    if (pr->parsed()) return cmd_propose(pr_data, pr_ckpt, pr_flags, pr_out);
    if (ts2->parsed())
      return cmd_train_stage2(ts2_data, ts2_props, ts2_ckpt, ts2_flags, ts2_freeze, ts2_out);
    if (dt->parsed()) return cmd_detect(dt_data, dt_props, dt_ckpt, dt_flags, dt_out);
    if (ev->parsed()) return cmd_eval(ev_data, ev_dets, ev_out, ev_csv);
    if (se->parsed())
      return cmd_search(se_data, se_props, se_ckpt, se_query, se_flags, se_top_r, se_out);
    if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_configs);
    if (ak->parsed()) return cmd_ablate_k(ak_train, ak_test, ak_flags, ak_ks, ak_out);
    if (av->parsed()) return cmd_ablate_variant(av_train, av_test, av_flags, av_out);
    if (dr->parsed()) return cmd_duration_report(dr_data, dr_dets, dr_out, dr_report);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return 1;
  } catch (const sf::DataError& e) {
    std::fprintf(stderr, "error[data]: %s\n", e.what());
    return 2;
  } catch (const sf::NumericError& e) {
    std::fprintf(stderr, "error[numeric]: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[data]: %s\n", e.what());
    return 2;
  }
}
