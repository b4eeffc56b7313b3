#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "socialfabric/errors.hpp"
#include "socialfabric/matrix.hpp"

namespace socialfabric {

constexpr double kLayerNormEps = 1e-5;
constexpr double kBceClampEps = 1e-7;

struct LayerNormCache {
  Matrix xhat;                  // normalized rows before gain/bias
  std::vector<double> mean;     // per row
  std::vector<double> inv_std;  // 1 / sqrt(var + eps), per row
};

/// Row-wise layer normalization with population variance:
///   y = gain * (x - mean) / sqrt(var + eps) + bias.
/// gain and bias are 1xF.
inline Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                         double eps = kLayerNormEps, LayerNormCache* cache = nullptr) {
  require(x.rows() >= 1 && x.cols() >= 1, "layer_norm: empty input");
  require(eps > 0.0, "layer_norm: eps must be positive");
  require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: gain shape mismatch");
  require(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bias shape mismatch");

  const int n = x.rows(), f = x.cols();
  Matrix out(n, f);
  if (cache) {
    cache->xhat = Matrix(n, f);
    cache->mean.assign(static_cast<std::size_t>(n), 0.0);
    cache->inv_std.assign(static_cast<std::size_t>(n), 0.0);
  }
  for (int r = 0; r < n; ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= f;
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= f;
    const double inv = 1.0 / std::sqrt(var + eps);
    auto orow = out.row(r);
    for (int c = 0; c < f; ++c) {
      const double xhat = (xr[c] - mean) * inv;
      orow[c] = gain(0, c) * xhat + bias(0, c);
      if (cache) cache->xhat(r, c) = xhat;
    }
    if (cache) {
      cache->mean[static_cast<std::size_t>(r)] = mean;
      cache->inv_std[static_cast<std::size_t>(r)] = inv;
    }
  }
  return out;
}

/// Backward of layer_norm. Adds into dgain/dbias; overwrites dx.
inline void layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gain,
                                Matrix& dx, Matrix& dgain, Matrix& dbias) {
  const int n = dy.rows(), f = dy.cols();
  require(cache.xhat.rows() == n && cache.xhat.cols() == f, "layer_norm_backward: cache mismatch");
  dx = Matrix(n, f);
  for (int r = 0; r < n; ++r) {
    const auto dyr = dy.row(r);
    const double inv = cache.inv_std[static_cast<std::size_t>(r)];
    // dxhat, plus the reductions the row statistics couple in.
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (int c = 0; c < f; ++c) {
      const double dxhat = dyr[c] * gain(0, c);
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * cache.xhat(r, c);
    }
    for (int c = 0; c < f; ++c) {
      const double dxhat = dyr[c] * gain(0, c);
      const double xhat = cache.xhat(r, c);
      dx(r, c) = inv * (dxhat - sum_dxhat / f - xhat * sum_dxhat_xhat / f);
      dgain(0, c) += dyr[c] * xhat;
      dbias(0, c) += dyr[c];
    }
  }
}

/// out = x * W + b, with b (1xD) broadcast over rows.
inline Matrix linear_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
  require(x.cols() == w.rows(), "linear_forward: inner dimensions disagree");
  require(b.rows() == 1 && b.cols() == w.cols(), "linear_forward: bias shape mismatch");
  Matrix out = matmul(x, w);
  for (int r = 0; r < out.rows(); ++r) {
    auto orow = out.row(r);
    for (int c = 0; c < out.cols(); ++c) orow[c] += b(0, c);
  }
  return out;
}

/// Backward of linear_forward. Adds into dw/db; overwrites dx.
inline void linear_backward(const Matrix& dout, const Matrix& x, const Matrix& w,
                            Matrix& dx, Matrix& dw, Matrix& db) {
  dx = matmul_bt(dout, w);
  add_inplace(dw, matmul_at(x, dout));
  for (int r = 0; r < dout.rows(); ++r)
    for (int c = 0; c < dout.cols(); ++c) db(0, c) += dout(r, c);
}

/// Stabilized softmax: the max logit is subtracted before exponentiation.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  require(!logits.empty(), "softmax: empty logits");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct BceResult {
  double loss = 0.0;
  double dscore = 0.0;  // d loss / d score, evaluated at the clamped score
};

/// Binary cross-entropy on a probability. The score is clamped to
/// [eps, 1-eps] before the logs.
inline BceResult bce_loss(double score, int label) {
  require(label == 0 || label == 1, "bce_loss: label must be 0 or 1");
  const double s = std::clamp(score, kBceClampEps, 1.0 - kBceClampEps);
  BceResult r;
  r.loss = -(label * std::log(s) + (1 - label) * std::log(1.0 - s));
  r.dscore = (s - label) / (s * (1.0 - s));
  return r;
}

struct CeResult {
  double loss = 0.0;
  std::vector<double> dlogits;  // softmax(logits) - onehot(label)
};

inline CeResult ce_loss(const std::vector<double>& logits, int label) {
  require(label >= 0 && label < static_cast<int>(logits.size()), "ce_loss: label out of range");
  CeResult r;
  r.dlogits = softmax(logits);
  const double p = r.dlogits[static_cast<std::size_t>(label)];
  r.loss = -std::log(std::max(p, 1e-300));
  r.dlogits[static_cast<std::size_t>(label)] -= 1.0;
  return r;
}

/// value <- value - lr * grad, then grads are zeroed.
inline void sgd_step(const std::vector<ParamTensor*>& params, double lr) {
  require(lr > 0.0, "sgd_step: lr must be positive");
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value.data()[i] -= lr * p->grad.data()[i];
    p->zero_grad();
  }
}

}  // namespace socialfabric
