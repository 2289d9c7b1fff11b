#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lgen/matrix.hpp"
#include "lgen/nn.hpp"

namespace lgen {

// Norm-wise relative error between two gradient blocks. Blocks whose combined
// norm is below `floor` are compared on an absolute scale of `floor`.
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric,
                             double floor = 1e-7) {
  if (analytic.size() != numeric.size()) throw ShapeError("relative_error: size mismatch");
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na) + std::sqrt(nn), floor);
  return std::sqrt(diff) / denom;
}

// Central differences of a scalar function with respect to every entry of x.
// x is perturbed in place and restored.
inline Matrix numeric_gradient(const std::function<double()>& f, Matrix& x, double eps = 1e-5) {
  Matrix g(x.rows(), x.cols());
  auto xs = x.data();
  auto gs = g.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double saved = xs[i];
    xs[i] = saved + eps;
    const double up = f();
    xs[i] = saved - eps;
    const double down = f();
    xs[i] = saved;
    gs[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // name of the block with the largest error
  std::size_t blocks = 0;
  std::size_t entries = 0;

  void merge(const GradCheckResult& other) {
    if (other.blocks == 0) return;
    if (blocks == 0 || other.max_rel_error > max_rel_error) {
      max_rel_error = other.max_rel_error;
      worst = other.worst;
    }
    blocks += other.blocks;
    entries += other.entries;
  }
};

inline void record_block(GradCheckResult& res, const std::string& name, const Matrix& analytic,
                         const Matrix& numeric) {
  const double err = relative_error(analytic.data(), numeric.data());
  if (res.blocks == 0 || err > res.max_rel_error) {
    res.max_rel_error = err;
    res.worst = name;
  }
  ++res.blocks;
  res.entries += analytic.size();
}

// Compares the analytic gradients already accumulated in `params` against
// central differences of `loss`, which must recompute the scalar from the
// current parameter values.
inline GradCheckResult grad_check(std::span<const ParamRef> params, const std::function<double()>& loss,
                                  double eps = 1e-5) {
  GradCheckResult res;
  for (const ParamRef& p : params) {
    const Matrix analytic = p.tensor->grad;
    const Matrix numeric = numeric_gradient(loss, p.tensor->value, eps);
    record_block(res, p.name, analytic, numeric);
  }
  return res;
}

}  // namespace lgen
