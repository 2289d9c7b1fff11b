#pragma once

// Reverse-mode kernels for small dense networks: affine maps, ReLU, softmax
// cross-entropy, column concatenation, the gradient-reversal gate and Adam.
// Every backward function returns exact analytic gradients; tests compare
// them against central finite differences.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgen/error.hpp"
#include "lgen/matrix.hpp"
#include "lgen/rng.hpp"

namespace lgen {

struct AdamState {
  Matrix m;
  Matrix v;
};

/// A trainable tensor with its gradient accumulator and optimizer moments.
struct Tensor {
  Matrix value;
  Matrix grad;
  AdamState adam;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols)
      : value(rows, cols), grad(rows, cols), adam{Matrix(rows, cols), Matrix(rows, cols)} {}

  void zero_grad() { grad.fill(0.0); }
};

struct AffineLayer {
  Tensor weight;  // in_dim x out_dim
  Tensor bias;    // 1 x out_dim

  AffineLayer() = default;
  AffineLayer(std::size_t in_dim, std::size_t out_dim) : weight(in_dim, out_dim), bias(1, out_dim) {}

  std::size_t in_dim() const { return weight.value.rows(); }
  std::size_t out_dim() const { return weight.value.cols(); }
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
inline void init_glorot(AffineLayer& layer, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
  for (double& w : layer.weight.value.data()) w = rng.uniform(-bound, bound);
  layer.bias.value.fill(0.0);
}

inline Matrix affine_forward(const AffineLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_dim()) {
    throw ShapeError("affine_forward: input " + shape_string(x) + " vs weight " +
                     shape_string(layer.weight.value));
  }
  Matrix out = matmul(x, layer.weight.value);
  const auto b = layer.bias.value.row(0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return out;
}

struct AffineGrads {
  Matrix input;
  Matrix weight;
  Matrix bias;
};

inline AffineGrads affine_backward(const AffineLayer& layer, const Matrix& x, const Matrix& upstream) {
  if (x.cols() != layer.in_dim() || upstream.cols() != layer.out_dim() || x.rows() != upstream.rows()) {
    throw ShapeError("affine_backward: x " + shape_string(x) + ", upstream " + shape_string(upstream));
  }
  AffineGrads g;
  g.input = matmul_nt(upstream, layer.weight.value);
  g.weight = matmul_tn(x, upstream);
  g.bias = Matrix(1, layer.out_dim());
  for (std::size_t r = 0; r < upstream.rows(); ++r)
    for (std::size_t c = 0; c < upstream.cols(); ++c) g.bias(0, c) += upstream(r, c);
  return g;
}

// Adds parameter gradients into the layer's accumulators; returns dL/dx.
inline Matrix affine_accumulate(AffineLayer& layer, const Matrix& x, const Matrix& upstream) {
  AffineGrads g = affine_backward(layer, x, upstream);
  add_inplace(layer.weight.grad, g.weight);
  add_inplace(layer.bias.grad, g.bias);
  return std::move(g.input);
}

inline Matrix relu_forward(const Matrix& z) {
  Matrix out = z;
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  return out;
}

// Gradient passes only where the forward input was strictly positive.
inline Matrix relu_backward(const Matrix& input, const Matrix& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Matrix out = upstream;
  auto in = input.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (in[i] <= 0.0) o[i] = 0.0;
  return out;
}

struct XentResult {
  double loss = 0.0;  // mean over rows
  Matrix grad;        // d loss / d logits
  std::vector<int> predictions;
};

// Max-subtracted softmax followed by mean negative log-likelihood.
// `scale` multiplies both the loss and gradient (e.g. 1/total_rows when the
// caller averages over a larger pool than this matrix).
inline XentResult softmax_xent_scaled(const Matrix& logits, std::span<const int> labels, double scale) {
  if (labels.size() != logits.rows()) throw ShapeError("softmax_xent: label count != rows");
  XentResult res;
  res.grad = Matrix(logits.rows(), logits.cols());
  res.predictions.resize(logits.rows());
  const int classes = static_cast<int>(logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || y >= classes) {
      throw ShapeError("softmax_xent: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const auto row = logits.row(r);
    double mx = row[0];
    int arg = 0;
    for (int c = 1; c < classes; ++c) {
      if (row[c] > mx) {
        mx = row[c];
        arg = c;
      }
    }
    res.predictions[r] = arg;
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(row[c] - mx);
    const double log_denom = std::log(denom);
    res.loss += -(row[y] - mx - log_denom) * scale;
    auto g = res.grad.row(r);
    for (int c = 0; c < classes; ++c) g[c] = std::exp(row[c] - mx - log_denom) * scale;
    g[y] -= scale;
  }
  return res;
}

inline XentResult softmax_xent(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) throw ShapeError("softmax_xent: empty batch");
  return softmax_xent_scaled(logits, labels, 1.0 / static_cast<double>(logits.rows()));
}

/// Gradient-reversal gate: identity forward, -lambda * upstream backward.
struct GrlGate {
  double lambda = 1.0;
};

inline Matrix grl_forward(const GrlGate&, const Matrix& z) { return z; }

inline Matrix grl_backward(const GrlGate& gate, const Matrix& upstream) {
  Matrix out = upstream;
  const double factor = -gate.lambda;
  for (double& x : out.data()) x = factor * x;
  return out;
}

inline Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row mismatch " + shape_string(a) + " | " + shape_string(b));
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

// Inverse of concat_cols; also routes a gradient on the concatenation back to
// the two branches.
inline std::pair<Matrix, Matrix> split_cols(const Matrix& h, std::size_t at) {
  if (at > h.cols()) throw ShapeError("split_cols: split point beyond width");
  Matrix a(h.rows(), at);
  Matrix b(h.rows(), h.cols() - at);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto src = h.row(r);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(at), a.row(r).begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(at), src.end(), b.row(r).begin());
  }
  return {std::move(a), std::move(b)};
}

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. `t` is the 1-based step count.
inline void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& cfg,
                      std::int64_t t) {
  if (t < 1) throw ShapeError("adam_step: t must be >= 1");
  require_same_shape(param, grad, "adam_step grad");
  require_same_shape(param, state.m, "adam_step m");
  require_same_shape(param, state.v, "adam_step v");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  auto p = param.data();
  auto g = grad.data();
  auto m = state.m.data();
  auto v = state.v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

inline void adam_step(Tensor& t, const AdamConfig& cfg, std::int64_t step) {
  adam_step(t.value, t.grad, t.adam, cfg, step);
}

/// Two affine layers with a ReLU between them.
struct Mlp2 {
  AffineLayer first;
  AffineLayer second;

  Mlp2() = default;
  Mlp2(std::size_t in_dim, std::size_t hidden, std::size_t out_dim)
      : first(in_dim, hidden), second(hidden, out_dim) {}

  std::size_t in_dim() const { return first.in_dim(); }
  std::size_t out_dim() const { return second.out_dim(); }
};

struct Mlp2Cache {
  Matrix input;
  Matrix pre;     // first-layer output before ReLU
  Matrix hidden;  // after ReLU
};

inline void init_glorot(Mlp2& mlp, Rng& rng) {
  init_glorot(mlp.first, rng);
  init_glorot(mlp.second, rng);
}

inline Matrix mlp2_forward(const Mlp2& mlp, const Matrix& x, Mlp2Cache* cache = nullptr) {
  Matrix pre = affine_forward(mlp.first, x);
  Matrix hidden = relu_forward(pre);
  Matrix out = affine_forward(mlp.second, hidden);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

inline Matrix mlp2_backward(Mlp2& mlp, const Mlp2Cache& cache, const Matrix& upstream) {
  Matrix d_hidden = affine_accumulate(mlp.second, cache.hidden, upstream);
  Matrix d_pre = relu_backward(cache.pre, d_hidden);
  return affine_accumulate(mlp.first, cache.input, d_pre);
}

/// Named view over a trainable tensor, used by the optimizer, checkpoints and
/// the gradient checker.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

inline void append_params(std::vector<ParamRef>& out, const std::string& prefix, AffineLayer& layer) {
  out.push_back({prefix + ".weight", &layer.weight});
  out.push_back({prefix + ".bias", &layer.bias});
}

inline void append_params(std::vector<ParamRef>& out, const std::string& prefix, Mlp2& mlp) {
  append_params(out, prefix + ".0", mlp.first);
  append_params(out, prefix + ".1", mlp.second);
}

}  // namespace lgen
