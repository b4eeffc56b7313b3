#pragma once

#include <string>
#include <vector>

#include "socialfabric/encoding.hpp"
#include "socialfabric/features.hpp"

namespace socialfabric {

// A stage's trainable state: the SFE trunk and head plus the class-embedding
// table feeding the language feature channel. F is fixed by the feature
// config; H is 1 for stage 1 and the predicate count for stage 2.
struct Model {
  SocialFabricParams params;
  ParamTensor class_embed;  // num_categories x embed_dim
  FeatureConfig fcfg;
  std::vector<std::string> predicate_names;
  std::vector<std::string> category_names;
  int trained_epochs = 0;  // cumulative across stages; 0 means never trained

  std::vector<ParamTensor*> trainable() {
    std::vector<ParamTensor*> out = params.all_params();
    if (fcfg.use_language) out.push_back(&class_embed);
    return out;
  }

  void zero_grads() {
    params.zero_grads();
    class_embed.zero_grad();
  }

  void validate() const {
    fcfg.validate();
    params.validate();
    require(params.F == fcfg.total_dim(), "model: params.F does not match the feature config");
    if (fcfg.use_language) {
      require(class_embed.value.rows() == static_cast<int>(category_names.size()),
              "model: class_embed rows must match the category count");
      require(class_embed.value.cols() == fcfg.embed_dim,
              "model: class_embed cols must match embed_dim");
    }
  }
};

inline Model init_model(const FeatureConfig& fcfg, int D, int K, int H, Variant variant,
                        std::vector<std::string> category_names,
                        std::vector<std::string> predicate_names, RngState& rng) {
  fcfg.validate();
  Model m;
  m.fcfg = fcfg;
  m.category_names = std::move(category_names);
  m.predicate_names = std::move(predicate_names);
  m.params = init_params(fcfg.total_dim(), D, K, H, variant, rng);
  const int cats = static_cast<int>(m.category_names.size());
  m.class_embed = ParamTensor("class_embed", std::max(cats, 1), fcfg.embed_dim);
  if (fcfg.use_language) {
    require(cats >= 1, "init_model: language channel needs categories");
    for (double& v : m.class_embed.value.data()) v = rng.normal();
  }
  m.validate();
  return m;
}

// Stage-2 model: trunk (layer norm, embedding, codebook, class embeddings)
// copied from a stage-1 model, fresh head sized for the predicate set.
inline Model make_stage2_model(const Model& stage1, int num_predicates,
                               std::vector<std::string> predicate_names, RngState& rng) {
  require(num_predicates >= 2, "stage 2 needs at least two predicates");
  Model m = stage1;
  m.predicate_names = std::move(predicate_names);
  m.params.H = num_predicates;
  const int hin = m.params.head_input_dim();
  m.params.head_W = ParamTensor("head_W", hin, num_predicates);
  const double h_std = 1.0 / std::sqrt(static_cast<double>(hin));
  for (double& v : m.params.head_W.value.data()) v = rng.normal(0.0, h_std);
  m.params.head_b = ParamTensor("head_b", 1, num_predicates);
  m.validate();
  return m;
}

}  // namespace socialfabric
