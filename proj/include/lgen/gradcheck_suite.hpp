#pragma once

// Seeded finite-difference fixtures for every kernel and for the composed
// dual-encoder loss in each mode.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "lgen/gradcheck.hpp"
#include "lgen/nn.hpp"
#include "lgen/rng.hpp"
#include "lgen/tasks.hpp"
#include "lgen/vacai.hpp"

namespace lgen {

inline constexpr double kGradTolerance = 1e-5;
inline constexpr double kGradEps = 1e-5;

namespace detail {

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

// Entries at least `gap` away from zero, so ReLU kinks stay out of reach of
// the finite-difference step.
inline Matrix random_off_kink(Rng& rng, std::size_t r, std::size_t c, double gap = 0.1) {
  Matrix m(r, c);
  for (double& x : m.data()) {
    const double mag = gap + std::abs(rng.normal());
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return m;
}

inline double dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline void randomize(std::vector<ParamRef>& params, Rng& rng, double scale) {
  for (ParamRef& p : params)
    for (double& x : p.tensor->value.data()) x = scale * rng.normal();
}

// Random batch of sentences with valid heads, relations and tags.
inline Batch random_batch(Rng& rng, const DualEncoderModel& model, std::size_t sentences) {
  Batch b;
  std::size_t total = 0;
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t len = 1 + rng.index(4);
    b.spans.push_back({total, len});
    for (std::size_t i = 0; i < len; ++i) {
      std::size_t head = rng.index(len);  // 0 = root, otherwise 1-based, never self
      if (head == i + 1) head = 0;
      b.y_head.push_back(static_cast<int>(head));
      b.y_rel.push_back(static_cast<int>(rng.index(model.labels.rels.size())));
      b.y_tag.push_back(static_cast<int>(rng.index(model.labels.tags.size())));
    }
    total += len;
    b.y_var.push_back(static_cast<int>(rng.index(model.labels.varieties.size())));
  }
  b.cls = random_matrix(rng, sentences, model.dim);
  b.words = random_matrix(rng, total, model.dim);
  return b;
}

}  // namespace detail

/// Per-kernel maximum relative error over a set of fixtures.
struct GradSuiteReport {
  std::map<std::string, GradCheckResult> kernels;
  std::size_t fixtures = 0;

  double max_error() const {
    double m = 0.0;
    for (const auto& [name, r] : kernels) m = std::max(m, r.max_rel_error);
    return m;
  }
  bool passed(double tol = kGradTolerance) const { return fixtures > 0 && max_error() < tol; }
};

inline void check_affine(GradSuiteReport& rep, Rng& rng) {
  AffineLayer layer(4, 3);
  init_glorot(layer, rng);
  for (double& b : layer.bias.value.data()) b = rng.normal();
  Matrix x = detail::random_matrix(rng, 5, 4);
  const Matrix g = detail::random_matrix(rng, 5, 3);
  auto f = [&] { return detail::dot(g, affine_forward(layer, x)); };
  const AffineGrads a = affine_backward(layer, x, g);
  GradCheckResult r;
  record_block(r, "affine.input", a.input, numeric_gradient(f, x, kGradEps));
  record_block(r, "affine.weight", a.weight, numeric_gradient(f, layer.weight.value, kGradEps));
  record_block(r, "affine.bias", a.bias, numeric_gradient(f, layer.bias.value, kGradEps));
  rep.kernels["affine"].merge(r);
}

inline void check_relu(GradSuiteReport& rep, Rng& rng) {
  Matrix x = detail::random_off_kink(rng, 4, 6);
  const Matrix g = detail::random_matrix(rng, 4, 6);
  auto f = [&] { return detail::dot(g, relu_forward(x)); };
  GradCheckResult r;
  record_block(r, "relu.input", relu_backward(x, g), numeric_gradient(f, x, kGradEps));
  rep.kernels["relu"].merge(r);
}

inline void check_softmax_xent(GradSuiteReport& rep, Rng& rng) {
  Matrix logits = detail::random_matrix(rng, 6, 4, 2.0);
  std::vector<int> labels(6);
  for (int& y : labels) y = static_cast<int>(rng.index(4));
  auto f = [&] { return softmax_xent(logits, labels).loss; };
  const Matrix analytic = softmax_xent(logits, labels).grad;
  GradCheckResult r;
  record_block(r, "softmax_xent.logits", analytic, numeric_gradient(f, logits, kGradEps));
  rep.kernels["softmax_xent"].merge(r);
}

inline void check_concat_split(GradSuiteReport& rep, Rng& rng) {
  Matrix a = detail::random_matrix(rng, 3, 2);
  Matrix b = detail::random_matrix(rng, 3, 4);
  const Matrix g = detail::random_matrix(rng, 3, 6);
  auto f = [&] { return detail::dot(g, concat_cols(a, b)); };
  const auto [ga, gb] = split_cols(g, 2);
  GradCheckResult r;
  record_block(r, "concat.left", ga, numeric_gradient(f, a, kGradEps));
  record_block(r, "concat.right", gb, numeric_gradient(f, b, kGradEps));
  rep.kernels["concat_split"].merge(r);
}

// The reversed gradient must equal -lambda times the gradient of the
// downstream loss with respect to the gate input.
inline void check_grl(GradSuiteReport& rep, Rng& rng) {
  Mlp2 disc(3, 4, 2);
  init_glorot(disc, rng);
  Matrix z = detail::random_matrix(rng, 5, 3);
  std::vector<int> labels(5);
  for (int& y : labels) y = static_cast<int>(rng.index(2));
  for (double lambda : {0.0, 0.1, 0.5, 1.0}) {
    const GrlGate gate{lambda};
    auto f = [&] { return softmax_xent(mlp2_forward(disc, grl_forward(gate, z)), labels).loss; };
    Mlp2Cache cache;
    const XentResult x = softmax_xent(mlp2_forward(disc, grl_forward(gate, z), &cache), labels);
    Mlp2 scratch = disc;
    const Matrix dz = mlp2_backward(scratch, cache, x.grad);
    const Matrix reversed = grl_backward(gate, dz);
    GradCheckResult r;
    record_block(r, "grl.input", reversed, scaled(numeric_gradient(f, z, kGradEps), -lambda));
    rep.kernels["grl"].merge(r);
  }
}

inline void check_mlp2(GradSuiteReport& rep, Rng& rng) {
  Mlp2 mlp(4, 5, 3);
  init_glorot(mlp, rng);
  for (double& b : mlp.first.bias.value.data()) b = 0.3 * rng.normal();
  Matrix x = detail::random_matrix(rng, 6, 4);
  const Matrix g = detail::random_matrix(rng, 6, 3);
  auto f = [&] { return detail::dot(g, mlp2_forward(mlp, x)); };
  std::vector<ParamRef> params;
  append_params(params, "mlp2", mlp);
  for (ParamRef& p : params) p.tensor->zero_grad();
  Mlp2Cache cache;
  mlp2_forward(mlp, x, &cache);
  const Matrix dx = mlp2_backward(mlp, cache, g);
  GradCheckResult r = grad_check(params, f, kGradEps);
  record_block(r, "mlp2.input", dx, numeric_gradient(f, x, kGradEps));
  rep.kernels["mlp2"].merge(r);
}

inline void check_pos_head(GradSuiteReport& rep, Rng& rng) {
  PosHead head(6, 4);
  init_head(head, rng);
  Matrix h = detail::random_matrix(rng, 7, 6);
  std::vector<int> tags(7);
  for (int& t : tags) t = static_cast<int>(rng.index(4));
  std::vector<ParamRef> params;
  append_params(params, "pos", head);
  for (ParamRef& p : params) p.tensor->zero_grad();
  const TaskLoss t = pos_loss(head, h, tags);
  PosHead probe = head;
  auto f = [&] { return pos_loss(probe, h, tags).loss; };
  std::vector<ParamRef> probe_params;
  append_params(probe_params, "pos", probe);
  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    record_block(r, params[i].name, params[i].tensor->grad, numeric_gradient(f, probe_params[i].tensor->value, kGradEps));
  }
  record_block(r, "pos.h", t.grad_h, numeric_gradient(f, h, kGradEps));
  rep.kernels["pos_loss"].merge(r);
}

inline void check_dep_head(GradSuiteReport& rep, Rng& rng) {
  DepHead head(6, 4, 3);
  init_head(head, rng);
  for (double& b : head.rel_classifier.bias.value.data()) b = 0.2 * rng.normal();
  std::vector<SentenceSpan> spans{{0, 3}, {3, 1}, {4, 4}};
  Matrix h = detail::random_matrix(rng, 8, 6);
  std::vector<int> heads, rels;
  for (const SentenceSpan& s : spans) {
    for (std::size_t i = 0; i < s.length; ++i) {
      std::size_t hd = rng.index(s.length);
      if (hd == i + 1) hd = 0;
      heads.push_back(static_cast<int>(hd));
      rels.push_back(static_cast<int>(rng.index(3)));
    }
  }
  std::vector<ParamRef> params;
  append_params(params, "dep", head);
  for (ParamRef& p : params) p.tensor->zero_grad();
  const TaskLoss t = dep_loss(head, h, spans, heads, rels);
  DepHead probe = head;
  auto f = [&] { return dep_loss(probe, h, spans, heads, rels).loss; };
  std::vector<ParamRef> probe_params;
  append_params(probe_params, "dep", probe);
  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    record_block(r, params[i].name, params[i].tensor->grad, numeric_gradient(f, probe_params[i].tensor->value, kGradEps));
  }
  record_block(r, "dep.h", t.grad_h, numeric_gradient(f, h, kGradEps));
  rep.kernels["dep_loss"].merge(r);
}

/// Composed loss. Blocks of f_inv are compared against the reversed
/// objective L_task + L_spc - lambda L_inv; every other block against L_total.
inline GradCheckResult check_model_loss(Rng& rng, Mode mode, TaskKind task, AblationFlags flags, double lambda) {
  LabelSpace labels;
  labels.varieties = {"x", "y"};
  labels.tags = LabelVocab::from({"N", "V", "ADJ"});
  labels.rels = LabelVocab::from({"root", "nsubj", "obj"});
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.ablation = flags;
  cfg.lambda = lambda;
  cfg.hidden = 5;
  cfg.seed = rng.next();
  DualEncoderModel model = make_model(6, labels, task, cfg, 4);
  std::vector<ParamRef> params = model.params();
  detail::randomize(params, rng, 0.5);
  const Batch batch = detail::random_batch(rng, model, 3);

  model.zero_grad();
  loss_total(model, batch);
  std::vector<Matrix> analytic;
  for (const ParamRef& p : params) analytic.push_back(p.tensor->grad);

  auto total = [&] { return loss_total(model, batch).total; };
  auto reversed = [&] {
    const LossBreakdown l = loss_total(model, batch);
    return l.task + l.spc - model.grl.lambda * l.inv;
  };
  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool encoder_inv = params[i].name.rfind("f_inv", 0) == 0;
    const Matrix numeric = encoder_inv ? numeric_gradient(reversed, params[i].tensor->value, kGradEps)
                                       : numeric_gradient(total, params[i].tensor->value, kGradEps);
    record_block(r, params[i].name, analytic[i], numeric);
  }
  return r;
}

inline void check_models(GradSuiteReport& rep, Rng& rng) {
  struct Variant {
    const char* name;
    Mode mode;
    AblationFlags flags;
  };
  const Variant variants[] = {
      {"model.baseline", Mode::baseline, {true, true}},
      {"model.alignment", Mode::alignment_only, {true, true}},
      {"model.vacai", Mode::vacai, {true, true}},
      {"model.vacai_no_spc", Mode::vacai, {true, false}},
      {"model.vacai_no_inv", Mode::vacai, {false, true}},
  };
  for (const Variant& v : variants) {
    for (TaskKind task : {TaskKind::dep, TaskKind::pos}) {
      const double lambda = std::vector<double>{0.1, 0.5, 1.0}[rng.index(3)];
      rep.kernels[std::string(v.name) + "." + to_string(task)].merge(check_model_loss(rng, v.mode, task, v.flags, lambda));
    }
  }
}

/// Runs `fixtures` seeded rounds of every check.
inline GradSuiteReport run_gradcheck_suite(std::uint64_t seed, std::size_t fixtures) {
  GradSuiteReport rep;
  for (std::size_t i = 0; i < fixtures; ++i) {
    Rng rng(derive_seed(seed, i));
    check_affine(rep, rng);
    check_relu(rep, rng);
    check_softmax_xent(rep, rng);
    check_concat_split(rep, rng);
    check_grl(rep, rng);
    check_mlp2(rep, rng);
    check_pos_head(rep, rng);
    check_dep_head(rep, rng);
    check_models(rep, rng);
    ++rep.fixtures;
  }
  return rep;
}

inline std::string format_gradcheck(const GradSuiteReport& rep, double tol = kGradTolerance) {
  std::string out = "kernel\tblocks\tentries\tmax_rel_error\tworst_block\tstatus\n";
  for (const auto& [name, r] : rep.kernels) {
    char err[32];
    std::snprintf(err, sizeof err, "%.3e", r.max_rel_error);
    out += name + "\t" + std::to_string(r.blocks) + "\t" + std::to_string(r.entries) + "\t" + err + "\t" + r.worst +
           "\t" + (r.max_rel_error < tol ? "ok" : "FAIL") + "\n";
  }
  return out;
}

}  // namespace lgen
