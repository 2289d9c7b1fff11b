#pragma once

// Task heads (POS tagging, dependency parsing) and their metrics.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lgen/error.hpp"
#include "lgen/matrix.hpp"
#include "lgen/nn.hpp"
#include "lgen/rng.hpp"

namespace lgen {

enum class TaskKind { dep, pos };

inline const char* to_string(TaskKind t) { return t == TaskKind::dep ? "dep" : "pos"; }

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "dep") return TaskKind::dep;
  if (s == "pos") return TaskKind::pos;
  throw UsageError("unknown task '" + s + "' (expected dep or pos)");
}

/// Sorted label inventory; ids index into `labels`.
struct LabelVocab {
  std::vector<std::string> labels;

  static LabelVocab from(std::vector<std::string> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return {std::move(values)};
  }

  // -1 when unseen.
  int id(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) return -1;
    return static_cast<int>(it - labels.begin());
  }

  std::size_t size() const { return labels.size(); }
};

// Rows [offset, offset + length) of a stacked word matrix belong to one sentence.
struct SentenceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct TaskLoss {
  double loss = 0.0;
  Matrix grad_h;  // d loss / d h, same shape as the input features
};

// ---------------------------------------------------------------------------
// POS tagging

struct PosHead {
  AffineLayer classifier;  // d -> T

  PosHead() = default;
  PosHead(std::size_t dim, std::size_t tagset) : classifier(dim, tagset) {
    if (tagset == 0) throw DataError("PosHead: empty tagset");
  }
};

inline void init_head(PosHead& head, Rng& rng) { init_glorot(head.classifier, rng); }

inline Matrix pos_forward(const PosHead& head, const Matrix& h_words) { return affine_forward(head.classifier, h_words); }

// Mean per-word cross entropy; accumulates classifier gradients.
inline TaskLoss pos_loss(PosHead& head, const Matrix& h_words, std::span<const int> tags) {
  const Matrix logits = pos_forward(head, h_words);
  XentResult x = softmax_xent(logits, tags);
  TaskLoss out;
  out.loss = x.loss;
  out.grad_h = affine_accumulate(head.classifier, h_words, x.grad);
  return out;
}

inline std::vector<int> pos_predict(const PosHead& head, const Matrix& h_words) {
  const Matrix logits = pos_forward(head, h_words);
  std::vector<int> pred(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    pred[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return pred;
}

inline void append_params(std::vector<ParamRef>& out, const std::string& prefix, PosHead& head) {
  append_params(out, prefix + ".classifier", head.classifier);
}

// ---------------------------------------------------------------------------
// Dependency parsing: bilinear-by-projection arc scores with a learned root
// vector, and a relation classifier over [dependent ; head] features.

struct DepHead {
  AffineLayer head_proj;       // d -> k
  AffineLayer dep_proj;        // d -> k
  Tensor root;                 // 1 x k
  AffineLayer rel_classifier;  // 2d -> R

  DepHead() = default;
  DepHead(std::size_t dim, std::size_t arc_dim, std::size_t relations)
      : head_proj(dim, arc_dim), dep_proj(dim, arc_dim), root(1, arc_dim), rel_classifier(2 * dim, relations) {
    if (arc_dim == 0) throw DataError("DepHead: arc dimension must be positive");
    if (relations == 0) throw DataError("DepHead: empty relation inventory");
  }

  std::size_t dim() const { return head_proj.in_dim(); }
};

inline void init_head(DepHead& head, Rng& rng) {
  init_glorot(head.head_proj, rng);
  init_glorot(head.dep_proj, rng);
  const double bound = std::sqrt(6.0 / static_cast<double>(head.root.value.cols() + 1));
  for (double& x : head.root.value.data()) x = rng.uniform(-bound, bound);
  init_glorot(head.rel_classifier, rng);
}

inline void append_params(std::vector<ParamRef>& out, const std::string& prefix, DepHead& head) {
  append_params(out, prefix + ".head_proj", head.head_proj);
  append_params(out, prefix + ".dep_proj", head.dep_proj);
  out.push_back({prefix + ".root", &head.root});
  append_params(out, prefix + ".rel_classifier", head.rel_classifier);
}

// n x (n+1) arc scores for one sentence given its projected rows. Column 0
// is the root; column j >= 1 is word j.
inline Matrix arc_scores_from_projections(const Matrix& dep_rows, const Matrix& head_rows, const Matrix& root) {
  const std::size_t n = dep_rows.rows();
  const std::size_t k = dep_rows.cols();
  Matrix scores(n, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto di = dep_rows.row(i);
    double s0 = 0.0;
    for (std::size_t c = 0; c < k; ++c) s0 += di[c] * root(0, c);
    scores(i, 0) = s0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto hj = head_rows.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += di[c] * hj[c];
      scores(i, j + 1) = s;
    }
  }
  return scores;
}

/// Arc scores (n x (n+1)) for a single sentence.
inline Matrix dep_forward(const DepHead& head, const Matrix& h_sentence) {
  if (h_sentence.rows() == 0) throw DataError("dep_forward: empty sentence");
  return arc_scores_from_projections(affine_forward(head.dep_proj, h_sentence),
                                     affine_forward(head.head_proj, h_sentence), head.root.value);
}

// [h_i ; h_head(i)] rows, zeros standing in for the root.
inline Matrix relation_features(const Matrix& h, std::span<const SentenceSpan> spans, std::span<const int> heads) {
  const std::size_t d = h.cols();
  Matrix f(h.rows(), 2 * d);
  for (const SentenceSpan& sp : spans) {
    for (std::size_t i = 0; i < sp.length; ++i) {
      const std::size_t r = sp.offset + i;
      auto dst = f.row(r);
      std::copy(h.row(r).begin(), h.row(r).end(), dst.begin());
      const int hd = heads[r];
      if (hd > 0) {
        const auto src = h.row(sp.offset + static_cast<std::size_t>(hd - 1));
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
      }
    }
  }
  return f;
}

inline Matrix relation_logits(const DepHead& head, const Matrix& h, std::span<const SentenceSpan> spans,
                              std::span<const int> heads) {
  return affine_forward(head.rel_classifier, relation_features(h, spans, heads));
}

/// Mean per-word head cross entropy plus mean relation cross entropy, the
/// relation classifier conditioned on the gold head. Accumulates head grads.
inline TaskLoss dep_loss(DepHead& head, const Matrix& h, std::span<const SentenceSpan> spans,
                         std::span<const int> gold_heads, std::span<const int> gold_rels) {
  const std::size_t total = h.rows();
  if (total == 0) throw DataError("dep_loss: no words");
  if (gold_heads.size() != total || gold_rels.size() != total) throw ShapeError("dep_loss: label count != rows");

  const Matrix dep_rows = affine_forward(head.dep_proj, h);
  const Matrix head_rows = affine_forward(head.head_proj, h);
  const std::size_t k = dep_rows.cols();
  Matrix d_dep(total, k), d_head(total, k), d_root(1, k);
  const double scale = 1.0 / static_cast<double>(total);

  TaskLoss out;
  for (const SentenceSpan& sp : spans) {
    const Matrix dr = slice_rows(dep_rows, sp.offset, sp.offset + sp.length);
    const Matrix hr = slice_rows(head_rows, sp.offset, sp.offset + sp.length);
    const Matrix scores = arc_scores_from_projections(dr, hr, head.root.value);
    std::vector<int> gold(gold_heads.begin() + static_cast<std::ptrdiff_t>(sp.offset),
                          gold_heads.begin() + static_cast<std::ptrdiff_t>(sp.offset + sp.length));
    for (int g : gold) {
      if (g < 0 || static_cast<std::size_t>(g) > sp.length) {
        throw DataError("dep_loss: gold head " + std::to_string(g) + " out of range");
      }
    }
    const XentResult x = softmax_xent_scaled(scores, gold, scale);
    out.loss += x.loss;
    // d scores -> d dep rows, d head rows, d root
    for (std::size_t i = 0; i < sp.length; ++i) {
      auto ddi = d_dep.row(sp.offset + i);
      const auto di = dr.row(i);
      const double g0 = x.grad(i, 0);
      for (std::size_t c = 0; c < k; ++c) {
        ddi[c] += g0 * head.root.value(0, c);
        d_root(0, c) += g0 * di[c];
      }
      for (std::size_t j = 0; j < sp.length; ++j) {
        const double g = x.grad(i, j + 1);
        if (g == 0.0) continue;
        const auto hj = hr.row(j);
        auto dhj = d_head.row(sp.offset + j);
        for (std::size_t c = 0; c < k; ++c) {
          ddi[c] += g * hj[c];
          dhj[c] += g * di[c];
        }
      }
    }
  }

  const Matrix features = relation_features(h, spans, gold_heads);
  const Matrix rel_logits = affine_forward(head.rel_classifier, features);
  const XentResult rel = softmax_xent(rel_logits, gold_rels);
  out.loss += rel.loss;

  add_inplace(head.root.grad, d_root);
  out.grad_h = affine_accumulate(head.dep_proj, h, d_dep);
  add_inplace(out.grad_h, affine_accumulate(head.head_proj, h, d_head));
  const Matrix d_features = affine_accumulate(head.rel_classifier, features, rel.grad);
  const std::size_t d = h.cols();
  for (const SentenceSpan& sp : spans) {
    for (std::size_t i = 0; i < sp.length; ++i) {
      const std::size_t r = sp.offset + i;
      const auto df = d_features.row(r);
      auto dh = out.grad_h.row(r);
      for (std::size_t c = 0; c < d; ++c) dh[c] += df[c];
      const int hd = gold_heads[r];
      if (hd > 0) {
        auto dhh = out.grad_h.row(sp.offset + static_cast<std::size_t>(hd - 1));
        for (std::size_t c = 0; c < d; ++c) dhh[c] += df[d + c];
      }
    }
  }
  return out;
}

struct DepPrediction {
  std::vector<int> heads;
  std::vector<int> rels;
};

/// Greedy per-word head argmax (lowest index wins ties), then the relation
/// argmax given the predicted head.
inline DepPrediction dep_predict(const DepHead& head, const Matrix& h, std::span<const SentenceSpan> spans) {
  DepPrediction p;
  p.heads.assign(h.rows(), 0);
  const Matrix dep_rows = affine_forward(head.dep_proj, h);
  const Matrix head_rows = affine_forward(head.head_proj, h);
  for (const SentenceSpan& sp : spans) {
    const Matrix scores =
        arc_scores_from_projections(slice_rows(dep_rows, sp.offset, sp.offset + sp.length),
                                    slice_rows(head_rows, sp.offset, sp.offset + sp.length), head.root.value);
    // Argmax over the root and every other word; a word never heads itself.
    for (std::size_t i = 0; i < sp.length; ++i) {
      const auto row = scores.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < row.size(); ++j)
        if (j != i + 1 && row[j] > row[best]) best = j;
      p.heads[sp.offset + i] = static_cast<int>(best);
    }
  }
  const Matrix logits = relation_logits(head, h, spans, p.heads);
  p.rels.resize(h.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    p.rels[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Metrics, micro-aggregated over every evaluated word.

struct AttachmentCounts {
  std::size_t words = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labeled = 0;

  double uas() const {
    if (words == 0) throw DataError("attachment score over zero words");
    return static_cast<double>(correct_heads) / static_cast<double>(words);
  }
  double las() const {
    if (words == 0) throw DataError("attachment score over zero words");
    return static_cast<double>(correct_labeled) / static_cast<double>(words);
  }

  AttachmentCounts& operator+=(const AttachmentCounts& o) {
    words += o.words;
    correct_heads += o.correct_heads;
    correct_labeled += o.correct_labeled;
    return *this;
  }
};

template <typename Label>
AttachmentCounts attachment_counts(std::span<const int> pred_heads, std::span<const Label> pred_rels,
                                   std::span<const int> gold_heads, std::span<const Label> gold_rels) {
  if (pred_heads.size() != gold_heads.size() || pred_rels.size() != gold_rels.size() ||
      pred_heads.size() != pred_rels.size()) {
    throw DataError("attachment score: length mismatch");
  }
  AttachmentCounts c;
  c.words = gold_heads.size();
  for (std::size_t i = 0; i < c.words; ++i) {
    if (pred_heads[i] == gold_heads[i]) {
      ++c.correct_heads;
      if (pred_rels[i] == gold_rels[i]) ++c.correct_labeled;
    }
  }
  return c;
}

inline double uas(std::span<const int> pred_heads, std::span<const int> gold_heads) {
  if (pred_heads.size() != gold_heads.size()) throw DataError("uas: length mismatch");
  AttachmentCounts c;
  c.words = gold_heads.size();
  for (std::size_t i = 0; i < c.words; ++i)
    if (pred_heads[i] == gold_heads[i]) ++c.correct_heads;
  return c.uas();
}

template <typename Label>
double las(std::span<const int> pred_heads, std::span<const Label> pred_rels, std::span<const int> gold_heads,
           std::span<const Label> gold_rels) {
  return attachment_counts(pred_heads, pred_rels, gold_heads, gold_rels).las();
}

struct TagCounts {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;

  double precision() const { return predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0; }
  double recall() const { return gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0; }
  double f1() const {
    if (gold == 0) throw DataError("token_f1 over zero tokens");
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  double accuracy() const {
    if (gold == 0) throw DataError("accuracy over zero tokens");
    return static_cast<double>(correct) / static_cast<double>(gold);
  }

  TagCounts& operator+=(const TagCounts& o) {
    predicted += o.predicted;
    gold += o.gold;
    correct += o.correct;
    return *this;
  }
};

template <typename Label>
TagCounts tag_counts(std::span<const Label> pred, std::span<const Label> gold) {
  if (pred.size() != gold.size()) throw DataError("token_f1: length mismatch");
  TagCounts c;
  c.predicted = pred.size();
  c.gold = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (pred[i] == gold[i]) ++c.correct;
  return c;
}

/// Micro-averaged F1 over tokens. With one prediction per token this equals
/// accuracy.
template <typename Label>
double token_f1(std::span<const Label> pred, std::span<const Label> gold) {
  return tag_counts(pred, gold).f1();
}

}  // namespace lgen
