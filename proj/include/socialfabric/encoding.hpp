#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "socialfabric/errors.hpp"
#include "socialfabric/matrix.hpp"
#include "socialfabric/nn.hpp"
#include "socialfabric/rng.hpp"

namespace socialfabric {

// literal:   E_k = (sum_j z_jk) * C_k
// aggregate: E_k = sum_j z_jk * R_j
// avgpool:   E   = (1/N) sum_j R_j   (head input D, not K*D)
enum class Variant { literal, aggregate, avgpool };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::literal: return "literal";
    case Variant::aggregate: return "aggregate";
    case Variant::avgpool: return "avgpool";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "literal") return Variant::literal;
  if (s == "aggregate") return Variant::aggregate;
  if (s == "avgpool") return Variant::avgpool;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

struct SocialFabricParams {
  int F = 0, D = 0, K = 0, H = 0;
  Variant variant = Variant::literal;
  double beta = 0.0;  // fixed to 1/sqrt(D), never learned

  ParamTensor ln_gain, ln_bias;  // 1xF
  ParamTensor W;                 // FxD
  ParamTensor b;                 // 1xD
  ParamTensor C;                 // KxD
  ParamTensor head_W;            // head_input_dim x H
  ParamTensor head_b;            // 1xH

  int head_input_dim() const { return variant == Variant::avgpool ? D : K * D; }

  std::vector<ParamTensor*> all_params() {
    return {&ln_gain, &ln_bias, &W, &b, &C, &head_W, &head_b};
  }

  void zero_grads() {
    for (ParamTensor* p : all_params()) p->zero_grad();
  }

  void validate() const {
    require(F >= 1 && D >= 1 && K >= 1 && H >= 1, "params: dims must be >= 1");
    require(beta > 0.0, "params: beta must be positive");
    require(ln_gain.value.rows() == 1 && ln_gain.value.cols() == F, "params: ln_gain shape");
    require(ln_bias.value.rows() == 1 && ln_bias.value.cols() == F, "params: ln_bias shape");
    require(W.value.rows() == F && W.value.cols() == D, "params: W shape");
    require(b.value.rows() == 1 && b.value.cols() == D, "params: b shape");
    require(C.value.rows() == K && C.value.cols() == D, "params: C shape");
    require(head_W.value.rows() == head_input_dim() && head_W.value.cols() == H,
            "params: head_W shape");
    require(head_b.value.rows() == 1 && head_b.value.cols() == H, "params: head_b shape");
  }
};

inline SocialFabricParams init_params(int F, int D, int K, int H, Variant variant,
                                      RngState& rng) {
  require(F >= 1 && D >= 1 && K >= 1 && H >= 1, "init_params: dims must be >= 1");
  SocialFabricParams p;
  p.F = F;
  p.D = D;
  p.K = K;
  p.H = H;
  p.variant = variant;
  p.beta = 1.0 / std::sqrt(static_cast<double>(D));
  p.ln_gain = ParamTensor("ln_gain", 1, F);
  p.ln_gain.value.fill(1.0);
  p.ln_bias = ParamTensor("ln_bias", 1, F);
  p.W = ParamTensor("W", F, D);
  const double w_std = 1.0 / std::sqrt(static_cast<double>(F));
  for (double& v : p.W.value.data()) v = rng.normal(0.0, w_std);
  p.b = ParamTensor("b", 1, D);
  p.C = ParamTensor("C", K, D);
  for (double& v : p.C.value.data()) v = rng.normal();
  const int hin = p.head_input_dim();
  p.head_W = ParamTensor("head_W", hin, H);
  const double h_std = 1.0 / std::sqrt(static_cast<double>(hin));
  for (double& v : p.head_W.value.data()) v = rng.normal(0.0, h_std);
  p.head_b = ParamTensor("head_b", 1, H);
  return p;
}

struct Assignment {
  Matrix z;  // NxK, rows on the simplex
};

struct FabricEncoding {
  Matrix E;                  // KxD, or 1xD for avgpool
  std::vector<double> mass;  // mass_k = sum_j z_jk; sums to N
};

// R = linear(layer_norm(S)); caches are filled when given.
inline Matrix embed(const Matrix& S, const SocialFabricParams& p,
                    LayerNormCache* ln_cache = nullptr, Matrix* xnorm_out = nullptr) {
  require(S.cols() == p.F, "embed: feature dim mismatch");
  Matrix xnorm = layer_norm(S, p.ln_gain.value, p.ln_bias.value, kLayerNormEps, ln_cache);
  Matrix R = linear_forward(xnorm, p.W.value, p.b.value);
  if (xnorm_out) *xnorm_out = std::move(xnorm);
  return R;
}

// z_jk = softmax_k(-beta * ||R_j - C_k||^2)
inline Assignment soft_assign(const Matrix& R, const Matrix& C, double beta) {
  require(R.cols() == C.cols(), "soft_assign: embedding dim mismatch");
  require(beta > 0.0, "soft_assign: beta must be positive");
  const int n = R.rows(), k = C.rows(), d = R.cols();
  Assignment a;
  a.z = Matrix(n, k);
  std::vector<double> logits(static_cast<std::size_t>(k));
  for (int j = 0; j < n; ++j) {
    const auto rj = R.row(j);
    for (int i = 0; i < k; ++i) {
      const auto ci = C.row(i);
      double dist2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = rj[c] - ci[c];
        dist2 += diff * diff;
      }
      logits[static_cast<std::size_t>(i)] = -beta * dist2;
    }
    const std::vector<double> z = softmax(logits);
    for (int i = 0; i < k; ++i) a.z(j, i) = z[static_cast<std::size_t>(i)];
  }
  return a;
}

inline FabricEncoding encode_from_assignment(const Matrix& R, const Assignment& a,
                                             const SocialFabricParams& p) {
  require(a.z.rows() == R.rows() && a.z.cols() == p.K, "encode: assignment shape mismatch");
  const int n = R.rows();
  FabricEncoding enc;
  enc.mass.assign(static_cast<std::size_t>(p.K), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < p.K; ++k) enc.mass[static_cast<std::size_t>(k)] += a.z(j, k);

  switch (p.variant) {
    case Variant::literal:
      enc.E = Matrix(p.K, p.D);
      for (int k = 0; k < p.K; ++k)
        for (int c = 0; c < p.D; ++c)
          enc.E(k, c) = enc.mass[static_cast<std::size_t>(k)] * p.C.value(k, c);
      break;
    case Variant::aggregate:
      enc.E = matmul_at(a.z, R);  // KxD
      break;
    case Variant::avgpool:
      enc.E = Matrix(1, p.D);
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < p.D; ++c) enc.E(0, c) += R(j, c);
      for (int c = 0; c < p.D; ++c) enc.E(0, c) /= n;
      break;
  }
  return enc;
}

inline FabricEncoding encode(const Matrix& R, const SocialFabricParams& p) {
  return encode_from_assignment(R, soft_assign(R, p.C.value, p.beta), p);
}

// logits = flatten(E) * head_W + head_b
inline std::vector<double> head_forward(const FabricEncoding& enc, const SocialFabricParams& p) {
  require(enc.E.size() == static_cast<std::size_t>(p.head_input_dim()),
          "head_forward: encoding size mismatch");
  std::vector<double> logits(static_cast<std::size_t>(p.H));
  for (int h = 0; h < p.H; ++h) {
    double acc = p.head_b.value(0, h);
    for (std::size_t i = 0; i < enc.E.size(); ++i)
      acc += enc.E.data()[i] * p.head_W.value(static_cast<int>(i), h);
    logits[static_cast<std::size_t>(h)] = acc;
  }
  return logits;
}

struct SfeCache {
  LayerNormCache ln;
  Matrix xnorm;  // NxF after gain/bias
  Matrix R;      // NxD
  Assignment assign;
  FabricEncoding enc;
  std::vector<double> logits;
};

inline std::vector<double> sfe_forward(const Matrix& S, const SocialFabricParams& p,
                                       SfeCache& cache) {
  p.validate();
  require(S.rows() >= 1, "sfe_forward: empty input");
  cache.R = embed(S, p, &cache.ln, &cache.xnorm);
  cache.assign = soft_assign(cache.R, p.C.value, p.beta);
  cache.enc = encode_from_assignment(cache.R, cache.assign, p);
  cache.logits = head_forward(cache.enc, p);
  return cache.logits;
}

// Analytic backward through head, encode, soft assignment, linear, and layer
// norm. Parameter gradients accumulate into p's grad tensors; beta is a
// constant. dS (overwritten, NxF) is produced only when requested.
inline void sfe_backward(const std::vector<double>& dlogits, const SfeCache& cache,
                         SocialFabricParams& p, Matrix* dS = nullptr) {
  require(dlogits.size() == static_cast<std::size_t>(p.H), "sfe_backward: dlogits size");
  const int n = cache.R.rows();
  const Matrix& E = cache.enc.E;

  // Head: dE = dlogits * head_W^T, flat layout matching head_forward.
  Matrix dE(E.rows(), E.cols());
  for (std::size_t i = 0; i < E.size(); ++i) {
    double acc = 0.0;
    for (int h = 0; h < p.H; ++h) {
      const double dl = dlogits[static_cast<std::size_t>(h)];
      acc += dl * p.head_W.value(static_cast<int>(i), h);
      p.head_W.grad(static_cast<int>(i), h) += E.data()[i] * dl;
    }
    dE.data()[i] = acc;
  }
  for (int h = 0; h < p.H; ++h) p.head_b.grad(0, h) += dlogits[static_cast<std::size_t>(h)];

  Matrix dR(n, p.D);
  Matrix dz;  // NxK when the variant routes gradient through z

  switch (p.variant) {
    case Variant::avgpool: {
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < p.D; ++c) dR(j, c) = dE(0, c) / n;
      break;
    }
    case Variant::literal: {
      // E_k = mass_k * C_k: C takes the direct term, z takes dmass.
      std::vector<double> dmass(static_cast<std::size_t>(p.K), 0.0);
      for (int k = 0; k < p.K; ++k) {
        double acc = 0.0;
        for (int c = 0; c < p.D; ++c) {
          p.C.grad(k, c) += cache.enc.mass[static_cast<std::size_t>(k)] * dE(k, c);
          acc += dE(k, c) * p.C.value(k, c);
        }
        dmass[static_cast<std::size_t>(k)] = acc;
      }
      dz = Matrix(n, p.K);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < p.K; ++k) dz(j, k) = dmass[static_cast<std::size_t>(k)];
      break;
    }
    case Variant::aggregate: {
      // E_k = sum_j z_jk R_j
      dz = Matrix(n, p.K);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < p.K; ++k) {
          double acc = 0.0;
          for (int c = 0; c < p.D; ++c) acc += dE(k, c) * cache.R(j, c);
          dz(j, k) = acc;
        }
      add_inplace(dR, matmul(cache.assign.z, dE));
      break;
    }
  }

  if (dz.rows() > 0) {
    // Softmax over k, then dist^2_jk = ||R_j - C_k||^2.
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < p.K; ++k) dot += dz(j, k) * cache.assign.z(j, k);
      for (int k = 0; k < p.K; ++k) {
        const double da = cache.assign.z(j, k) * (dz(j, k) - dot);
        const double ddist2 = -p.beta * da;
        for (int c = 0; c < p.D; ++c) {
          const double diff = 2.0 * (cache.R(j, c) - p.C.value(k, c));
          dR(j, c) += ddist2 * diff;
          p.C.grad(k, c) -= ddist2 * diff;
        }
      }
    }
  }

  Matrix dxnorm;
  linear_backward(dR, cache.xnorm, p.W.value, dxnorm, p.W.grad, p.b.grad);
  Matrix dx;
  layer_norm_backward(dxnorm, cache.ln, p.ln_gain.value, dx, p.ln_gain.grad, p.ln_bias.grad);
  if (dS) *dS = std::move(dx);
}

}  // namespace socialfabric
