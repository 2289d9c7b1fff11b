#pragma once

// Dual-encoder model over frozen encoder features. An invariant branch is
// trained adversarially against a variety discriminator through a
// gradient-reversal gate; a specific branch cooperates with its own
// discriminator. The concatenated features feed a task head.
//
// Encoders run over every word-aligned token vector (task head input) and
// over the final [CLS] vector (discriminator input).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/format.hpp"
#include "lgen/matrix.hpp"
#include "lgen/nn.hpp"
#include "lgen/rng.hpp"
#include "lgen/tasks.hpp"

namespace lgen {

enum class Mode { baseline, alignment_only, vacai };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::baseline: return "baseline";
    case Mode::alignment_only: return "alignment";
    case Mode::vacai: return "vacai";
  }
  return "vacai";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "baseline") return Mode::baseline;
  if (s == "alignment" || s == "alignment_only") return Mode::alignment_only;
  if (s == "vacai") return Mode::vacai;
  throw UsageError("unknown mode '" + s + "' (expected baseline, alignment or vacai)");
}

struct AblationFlags {
  bool use_inv_loss = true;
  bool use_spc_loss = true;
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  double lambda = 1.0;
  double lr = 2e-4;
  int batch_size = 64;
  int max_epochs = 10;
  int max_steps = 1000;
  std::uint64_t seed = 0;
  Mode mode = Mode::vacai;
  AblationFlags ablation;
  std::vector<double> lambda_grid{0.1, 0.5, 1.0};
  std::string preset = "mbert-like";
  std::size_t hidden = 0;   // 0: same as the feature width d
  std::size_t arc_dim = 0;  // 0: same as d
  int eval_every = 50;      // dev evaluation period in steps
  std::string nonlinearity = "relu";
};

/// Named learning-rate presets for the two backbone families.
inline TrainConfig preset_config(std::string_view name) {
  TrainConfig c;
  c.preset = std::string(name);
  if (name == "mbert-like") {
    c.lr = 2e-4;
  } else if (name == "xlmr-like") {
    c.lr = 5e-5;
  } else {
    throw UsageError("unknown preset '" + std::string(name) + "' (expected mbert-like or xlmr-like)");
  }
  return c;
}

struct LabelSpace {
  std::vector<std::string> varieties;
  LabelVocab tags;
  LabelVocab rels;

  int variety_index(const std::string& id) const {
    for (std::size_t i = 0; i < varieties.size(); ++i)
      if (varieties[i] == id) return static_cast<int>(i);
    return -1;
  }
};

struct DualEncoderModel {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  Mlp2 f_inv;  // d -> hidden -> d/2
  Mlp2 f_spc;  // d -> hidden -> d/2
  Mlp2 d_inv;  // d/2 -> hidden -> V
  Mlp2 d_spc;  // d/2 -> hidden -> V
  GrlGate grl;
  TaskKind task = TaskKind::dep;
  PosHead pos;
  DepHead dep;
  Mode mode = Mode::vacai;
  AblationFlags ablation;
  LabelSpace labels;

  std::size_t half() const { return dim / 2; }

  bool inv_active() const { return mode != Mode::baseline && ablation.use_inv_loss; }
  bool spc_active() const { return mode == Mode::vacai && ablation.use_spc_loss; }

  std::vector<ParamRef> params() {
    std::vector<ParamRef> out;
    append_params(out, "f_inv", f_inv);
    append_params(out, "f_spc", f_spc);
    append_params(out, "d_inv", d_inv);
    append_params(out, "d_spc", d_spc);
    if (task == TaskKind::pos) {
      append_params(out, "task.pos", pos);
    } else {
      append_params(out, "task.dep", dep);
    }
    return out;
  }

  void zero_grad() {
    for (ParamRef& p : params()) p.tensor->zero_grad();
  }
};

/// Builds and initializes a model. Initialization consumes the same random
/// stream in every mode, so modes differ only in which losses are active.
inline DualEncoderModel make_model(std::size_t dim, const LabelSpace& labels, TaskKind task, const TrainConfig& cfg,
                                   std::size_t arc_dim_override = 0) {
  if (dim == 0 || dim % 2 != 0) throw DataError("feature width d must be positive and even, got " + std::to_string(dim));
  if (labels.varieties.empty()) throw DataError("model needs at least one variety label");
  DualEncoderModel m;
  m.dim = dim;
  m.hidden = cfg.hidden ? cfg.hidden : dim;
  m.task = task;
  m.mode = cfg.mode;
  m.ablation = cfg.ablation;
  m.grl.lambda = cfg.lambda;
  m.labels = labels;
  const std::size_t v = labels.varieties.size();
  m.f_inv = Mlp2(dim, m.hidden, dim / 2);
  m.f_spc = Mlp2(dim, m.hidden, dim / 2);
  m.d_inv = Mlp2(dim / 2, m.hidden, v);
  m.d_spc = Mlp2(dim / 2, m.hidden, v);
  Rng rng(derive_seed(cfg.seed, 1));
  init_glorot(m.f_inv, rng);
  init_glorot(m.f_spc, rng);
  init_glorot(m.d_inv, rng);
  init_glorot(m.d_spc, rng);
  if (task == TaskKind::pos) {
    m.pos = PosHead(dim, labels.tags.size());
    init_head(m.pos, rng);
  } else {
    const std::size_t k = arc_dim_override ? arc_dim_override : (cfg.arc_dim ? cfg.arc_dim : dim);
    m.dep = DepHead(dim, k, labels.rels.size());
    init_head(m.dep, rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Encoding

struct Encoding {
  Matrix h;      // rows x d
  Matrix h_inv;  // rows x d/2
  Matrix h_spc;  // rows x d/2
};

struct EncodingCache {
  Mlp2Cache inv;
  Mlp2Cache spc;
};

/// Joint feature h = h_inv || h_spc; in alignment mode h_inv fills both halves.
inline Encoding encode(const DualEncoderModel& model, const Matrix& features, EncodingCache* cache = nullptr) {
  if (features.cols() != model.dim) {
    throw ShapeError("encode: feature width " + std::to_string(features.cols()) + " != d " + std::to_string(model.dim));
  }
  Encoding e;
  e.h_inv = mlp2_forward(model.f_inv, features, cache ? &cache->inv : nullptr);
  e.h_spc = mlp2_forward(model.f_spc, features, cache ? &cache->spc : nullptr);
  e.h = model.mode == Mode::alignment_only ? concat_cols(e.h_inv, e.h_inv) : concat_cols(e.h_inv, e.h_spc);
  return e;
}

// Routes d loss / d h back into both encoders.
inline void encode_backward(DualEncoderModel& model, const EncodingCache& cache, const Matrix& grad_h) {
  auto [g_left, g_right] = split_cols(grad_h, model.half());
  if (model.mode == Mode::alignment_only) {
    add_inplace(g_left, g_right);
    mlp2_backward(model.f_inv, cache.inv, g_left);
  } else {
    mlp2_backward(model.f_inv, cache.inv, g_left);
    mlp2_backward(model.f_spc, cache.spc, g_right);
  }
}

// ---------------------------------------------------------------------------
// Losses. Each accumulates parameter gradients into the model.

struct DiscriminatorLoss {
  double loss = 0.0;
  double accuracy = 0.0;
};

inline double accuracy_of(const std::vector<int>& pred, std::span<const int> gold) {
  if (gold.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) ok += pred[i] == gold[i];
  return static_cast<double>(ok) / static_cast<double>(gold.size());
}

/// Cross entropy of d_inv on GRL(h_inv); the gradient entering f_inv is
/// scaled by -lambda.
inline DiscriminatorLoss loss_inv(DualEncoderModel& model, const Matrix& cls_rows, std::span<const int> y_var) {
  Mlp2Cache enc_cache, disc_cache;
  const Matrix h_inv = mlp2_forward(model.f_inv, cls_rows, &enc_cache);
  const Matrix z = grl_forward(model.grl, h_inv);
  const Matrix logits = mlp2_forward(model.d_inv, z, &disc_cache);
  const XentResult x = softmax_xent(logits, y_var);
  const Matrix dz = mlp2_backward(model.d_inv, disc_cache, x.grad);
  mlp2_backward(model.f_inv, enc_cache, grl_backward(model.grl, dz));
  return {x.loss, accuracy_of(x.predictions, y_var)};
}

/// Cross entropy of d_spc on h_spc, cooperative (no reversal).
inline DiscriminatorLoss loss_spc(DualEncoderModel& model, const Matrix& cls_rows, std::span<const int> y_var) {
  Mlp2Cache enc_cache, disc_cache;
  const Matrix h_spc = mlp2_forward(model.f_spc, cls_rows, &enc_cache);
  const Matrix logits = mlp2_forward(model.d_spc, h_spc, &disc_cache);
  const XentResult x = softmax_xent(logits, y_var);
  mlp2_backward(model.f_spc, enc_cache, mlp2_backward(model.d_spc, disc_cache, x.grad));
  return {x.loss, accuracy_of(x.predictions, y_var)};
}

// Forward-only discriminator evaluation (no gradients).
inline DiscriminatorLoss probe_inv(const DualEncoderModel& model, const Matrix& cls_rows, std::span<const int> y_var) {
  const Matrix logits = mlp2_forward(model.d_inv, mlp2_forward(model.f_inv, cls_rows));
  const XentResult x = softmax_xent(logits, y_var);
  return {x.loss, accuracy_of(x.predictions, y_var)};
}

inline DiscriminatorLoss probe_spc(const DualEncoderModel& model, const Matrix& cls_rows, std::span<const int> y_var) {
  const Matrix logits = mlp2_forward(model.d_spc, mlp2_forward(model.f_spc, cls_rows));
  const XentResult x = softmax_xent(logits, y_var);
  return {x.loss, accuracy_of(x.predictions, y_var)};
}

/// Stacked features and labels for a set of sentences.
struct Batch {
  Matrix cls;    // B x d, final-layer [CLS]
  Matrix words;  // N x d, word-aligned token vectors
  std::vector<SentenceSpan> spans;
  std::vector<int> y_var;   // B
  std::vector<int> y_head;  // N (dep)
  std::vector<int> y_rel;   // N (dep), -1 when unseen
  std::vector<int> y_tag;   // N (pos), -1 when unseen
  bool has_labels = true;

  std::size_t sentences() const { return spans.size(); }
};

struct LabeledSentence {
  const Sentence* sentence;
  int variety;  // index into LabelSpace::varieties, -1 if not a training variety
};

inline Batch make_batch(const DualEncoderModel& model, std::span<const LabeledSentence> items, bool require_labels = true) {
  Batch b;
  std::size_t words = 0;
  for (const auto& it : items) words += it.sentence->size();
  b.cls = Matrix(items.size(), model.dim);
  b.words = Matrix(words, model.dim);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Sentence& s = *items[i].sentence;
    if (!s.embedding) throw DataError("sentence without embedding");
    const EmbeddingRecord& e = *s.embedding;
    if (e.dim() != model.dim || e.token_vectors.cols() != model.dim) {
      throw DataError("embedding width " + std::to_string(e.dim()) + " != model d " + std::to_string(model.dim));
    }
    std::copy(e.cls_final.begin(), e.cls_final.end(), b.cls.row(i).begin());
    std::copy(e.token_vectors.data().begin(), e.token_vectors.data().end(),
              b.words.data().begin() + static_cast<std::ptrdiff_t>(offset * model.dim));
    b.spans.push_back({offset, s.size()});
    b.y_var.push_back(items[i].variety);
    if (model.task == TaskKind::dep) {
      if (!s.heads || !s.deprels) {
        if (require_labels) throw DataError("sentence missing head/deprel annotation");
        b.has_labels = false;
      } else {
        for (std::size_t w = 0; w < s.size(); ++w) {
          b.y_head.push_back((*s.heads)[w]);
          b.y_rel.push_back(model.labels.rels.id((*s.deprels)[w]));
        }
      }
    } else {
      if (!s.pos_tags) {
        if (require_labels) throw DataError("sentence missing POS annotation");
        b.has_labels = false;
      } else {
        for (const auto& t : *s.pos_tags) b.y_tag.push_back(model.labels.tags.id(t));
      }
    }
    offset += s.size();
  }
  return b;
}

/// Task loss on per-word joint features; gradients flow into both encoders.
inline double loss_task(DualEncoderModel& model, const Batch& batch) {
  EncodingCache cache;
  const Encoding enc = encode(model, batch.words, &cache);
  TaskLoss t;
  if (model.task == TaskKind::pos) {
    t = pos_loss(model.pos, enc.h, batch.y_tag);
  } else {
    for (int r : batch.y_rel)
      if (r < 0) throw DataError("training relation label outside the label space");
    t = dep_loss(model.dep, enc.h, batch.spans, batch.y_head, batch.y_rel);
  }
  encode_backward(model, cache, t.grad_h);
  return t.loss;
}

struct LossBreakdown {
  double inv = 0.0;
  double spc = 0.0;
  double task = 0.0;
  double total = 0.0;
  double inv_accuracy = 0.0;
  double spc_accuracy = 0.0;
};

/// Unweighted sum of the active terms. Inactive variety terms contribute 0
/// and no gradient; their discriminators are still probed for accuracy.
inline LossBreakdown loss_total(DualEncoderModel& model, const Batch& batch) {
  LossBreakdown out;
  if (model.inv_active()) {
    const auto r = loss_inv(model, batch.cls, batch.y_var);
    out.inv = r.loss;
    out.inv_accuracy = r.accuracy;
  } else {
    out.inv_accuracy = probe_inv(model, batch.cls, batch.y_var).accuracy;
  }
  if (model.spc_active()) {
    const auto r = loss_spc(model, batch.cls, batch.y_var);
    out.spc = r.loss;
    out.spc_accuracy = r.accuracy;
  } else {
    out.spc_accuracy = probe_spc(model, batch.cls, batch.y_var).accuracy;
  }
  out.task = loss_task(model, batch);
  out.total = out.inv + out.spc + out.task;
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  TaskKind task = TaskKind::dep;
  AttachmentCounts attachment;
  TagCounts tags;
  std::size_t sentences = 0;
  std::vector<double> per_sentence;  // UAS or F1 of each sentence

  std::size_t words() const { return task == TaskKind::dep ? attachment.words : tags.gold; }
  // UAS for parsing, micro F1 for tagging.
  double metric() const { return task == TaskKind::dep ? attachment.uas() : tags.f1(); }
};

// Predicted heads/rels or tags for every word of a batch.
struct Prediction {
  std::vector<int> heads;
  std::vector<int> rels;
  std::vector<int> tags;
};

inline Prediction predict(const DualEncoderModel& model, const Batch& batch) {
  const Encoding enc = encode(model, batch.words);
  Prediction p;
  if (model.task == TaskKind::dep) {
    DepPrediction d = dep_predict(model.dep, enc.h, batch.spans);
    p.heads = std::move(d.heads);
    p.rels = std::move(d.rels);
  } else {
    p.tags = pos_predict(model.pos, enc.h);
  }
  return p;
}

inline void evaluate_into(const DualEncoderModel& model, const VarietyCorpus& corpus, EvalResult& res) {
  if (corpus.empty()) return;
  std::vector<LabeledSentence> items;
  items.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences) items.push_back({&s, model.labels.variety_index(corpus.variety_id)});
  const Batch batch = make_batch(model, items);
  const Prediction p = predict(model, batch);
  for (const SentenceSpan& sp : batch.spans) {
    const auto at = [&](const std::vector<int>& v) {
      return std::span<const int>(v.data() + sp.offset, sp.length);
    };
    if (model.task == TaskKind::dep) {
      const AttachmentCounts c = attachment_counts<int>(at(p.heads), at(p.rels), at(batch.y_head), at(batch.y_rel));
      res.attachment += c;
      res.per_sentence.push_back(c.uas());
    } else {
      const TagCounts c = tag_counts<int>(at(p.tags), at(batch.y_tag));
      res.tags += c;
      res.per_sentence.push_back(c.f1());
    }
  }
  res.sentences += corpus.size();
}

/// Micro-aggregated metrics over all words of the given corpora.
inline EvalResult evaluate(const DualEncoderModel& model, const std::vector<const VarietyCorpus*>& corpora) {
  EvalResult res;
  res.task = model.task;
  for (const VarietyCorpus* c : corpora) evaluate_into(model, *c, res);
  if (res.words() == 0) throw DataError("evaluate: no words to score");
  return res;
}

inline EvalResult evaluate(const DualEncoderModel& model, const VarietyCorpus& corpus) {
  return evaluate(model, std::vector<const VarietyCorpus*>{&corpus});
}

struct VarietyAccuracy {
  double inv = 0.0;
  double spc = 0.0;
  std::size_t sentences = 0;
};

/// Held-out accuracy of both discriminators. Every corpus id must be one of
/// the model's training varieties.
inline VarietyAccuracy discriminator_accuracy(const DualEncoderModel& model,
                                              const std::vector<const VarietyCorpus*>& corpora) {
  std::vector<LabeledSentence> items;
  for (const VarietyCorpus* c : corpora) {
    const int v = model.labels.variety_index(c->variety_id);
    if (v < 0) throw DataError("variety '" + c->variety_id + "' is not a training variety");
    for (const Sentence& s : c->sentences) items.push_back({&s, v});
  }
  if (items.empty()) throw DataError("discriminator_accuracy: no sentences");
  const Batch b = make_batch(model, items, false);
  return {probe_inv(model, b.cls, b.y_var).accuracy, probe_spc(model, b.cls, b.y_var).accuracy, items.size()};
}

// ---------------------------------------------------------------------------
// Training

struct StepRecord {
  int step = 0;
  LossBreakdown loss;
  double var0_fraction = 0.0;  // share of the batch drawn from the first variety
  std::optional<double> dev_metric;

  friend bool operator==(const StepRecord& a, const StepRecord& b) {
    return a.step == b.step && a.loss.inv == b.loss.inv && a.loss.spc == b.loss.spc && a.loss.task == b.loss.task &&
           a.loss.total == b.loss.total && a.loss.inv_accuracy == b.loss.inv_accuracy &&
           a.loss.spc_accuracy == b.loss.spc_accuracy && a.var0_fraction == b.var0_fraction &&
           a.dev_metric == b.dev_metric;
  }
};

struct TrainResult {
  DualEncoderModel model;  // best dev checkpoint (final model without dev data)
  std::vector<StepRecord> trace;
  int best_step = 0;
  std::optional<double> best_dev_metric;
};

inline void require_trainable(const VarietyCorpus& c, TaskKind task) {
  if (c.empty()) throw DataError("corpus " + c.variety_id + " is empty");
  for (std::size_t i = 0; i < c.sentences.size(); ++i) {
    const Sentence& s = c.sentences[i];
    if (!s.embedding) throw DataError(c.variety_id + " sentence " + std::to_string(i) + ": missing embedding");
    if (task == TaskKind::dep && (!s.heads || !s.deprels)) {
      throw DataError(c.variety_id + " sentence " + std::to_string(i) + ": missing head/deprel labels");
    }
    if (task == TaskKind::pos && !s.pos_tags) {
      throw DataError(c.variety_id + " sentence " + std::to_string(i) + ": missing POS labels");
    }
  }
}

inline LabelSpace build_label_space(const std::vector<const VarietyCorpus*>& sources) {
  LabelSpace ls;
  std::vector<std::string> tags, rels;
  for (const VarietyCorpus* c : sources) {
    ls.varieties.push_back(c->variety_id);
    for (const Sentence& s : c->sentences) {
      if (s.pos_tags) tags.insert(tags.end(), s.pos_tags->begin(), s.pos_tags->end());
      if (s.deprels) rels.insert(rels.end(), s.deprels->begin(), s.deprels->end());
    }
  }
  ls.tags = LabelVocab::from(std::move(tags));
  ls.rels = LabelVocab::from(std::move(rels));
  return ls;
}

inline int planned_steps(std::size_t pool_size, const TrainConfig& cfg) {
  if (cfg.batch_size <= 0) throw UsageError("batch_size must be positive");
  const long per_epoch = static_cast<long>((pool_size + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                           static_cast<std::size_t>(cfg.batch_size));
  return static_cast<int>(std::min<long>(static_cast<long>(cfg.max_epochs) * per_epoch, cfg.max_steps));
}

/// Trains on two source varieties. Mini-batches are drawn from the pooled,
/// seeded shuffle of both corpora. When dev corpora are given, the returned
/// model is the checkpoint with the highest dev metric (earliest on ties).
inline TrainResult train(const VarietyCorpus& first, const VarietyCorpus& second, const TrainConfig& cfg, TaskKind task,
                         const std::vector<const VarietyCorpus*>& dev = {}) {
  if (cfg.max_steps < 0 || cfg.max_epochs < 0) throw UsageError("step and epoch limits must be non-negative");
  if (cfg.lambda < 0.0) throw UsageError("lambda must be non-negative");
  require_trainable(first, task);
  require_trainable(second, task);
  validate_variety_ids({&first, &second});
  const std::size_t dim = first.sentences.front().embedding->dim();
  for (const VarietyCorpus* c : {&first, &second})
    for (const Sentence& s : c->sentences)
      if (s.embedding->dim() != dim) throw DataError("corpora disagree on embedding width");

  const LabelSpace labels = build_label_space({&first, &second});
  TrainResult res{make_model(dim, labels, task, cfg), {}, 0, std::nullopt};
  DualEncoderModel& model = res.model;
  DualEncoderModel best = model;

  std::vector<LabeledSentence> pool;
  for (const Sentence& s : first.sentences) pool.push_back({&s, 0});
  for (const Sentence& s : second.sentences) pool.push_back({&s, 1});

  const int total_steps = planned_steps(pool.size(), cfg);
  if (total_steps == 0) return res;

  const AdamConfig adam{cfg.lr};
  Rng rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(pool.size());
  std::size_t cursor = order.size();
  std::vector<LabeledSentence> items;
  std::vector<ParamRef> params = model.params();

  for (int step = 1; step <= total_steps; ++step) {
    if (cursor >= order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t end = std::min(order.size(), cursor + static_cast<std::size_t>(cfg.batch_size));
    items.clear();
    for (std::size_t i = cursor; i < end; ++i) items.push_back(pool[order[i]]);
    cursor = end;

    const Batch batch = make_batch(model, items);
    for (ParamRef& p : params) p.tensor->zero_grad();
    StepRecord rec;
    rec.step = step;
    rec.loss = loss_total(model, batch);
    std::size_t zeros = 0;
    for (int v : batch.y_var) zeros += v == 0;
    rec.var0_fraction = static_cast<double>(zeros) / static_cast<double>(batch.y_var.size());
    for (ParamRef& p : params) adam_step(*p.tensor, adam, step);

    const bool eval_now = !dev.empty() && ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || step == total_steps);
    if (eval_now) {
      const double metric = evaluate(model, dev).metric();
      rec.dev_metric = metric;
      if (!res.best_dev_metric || metric > *res.best_dev_metric) {
        res.best_dev_metric = metric;
        res.best_step = step;
        best = model;
      }
    }
    res.trace.push_back(rec);
  }
  if (dev.empty()) {
    res.best_step = total_steps;
  } else {
    model = std::move(best);
  }
  return res;
}

/// One TSV line per step.
inline std::string format_trace(const std::vector<StepRecord>& trace) {
  std::string out = "step\tL_inv\tL_spc\tL_task\tL_total\td_inv_acc\td_spc_acc\tvar0_frac\tdev_metric\n";
  for (const StepRecord& r : trace) {
    out += std::to_string(r.step);
    for (double v : {r.loss.inv, r.loss.spc, r.loss.task, r.loss.total, r.loss.inv_accuracy, r.loss.spc_accuracy,
                     r.var0_fraction}) {
      out += '\t';
      out += format_number(v);
    }
    out += '\t';
    out += r.dev_metric ? format_number(*r.dev_metric) : "-";
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment harnesses

struct SweepRow {
  double lambda = 0.0;
  double dev_metric = 0.0;
  int best_step = 0;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// One full training run per lambda value with a shared seed.
inline std::vector<SweepRow> lambda_sweep(const VarietyCorpus& first, const VarietyCorpus& second, const TrainConfig& cfg,
                                          TaskKind task, const std::vector<const VarietyCorpus*>& dev) {
  if (cfg.lambda_grid.empty()) throw UsageError("lambda grid is empty");
  if (dev.empty()) throw UsageError("lambda sweep needs dev corpora");
  std::vector<SweepRow> rows;
  for (double lambda : cfg.lambda_grid) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    const TrainResult r = train(first, second, c, task, dev);
    rows.push_back({lambda, r.best_dev_metric.value_or(evaluate(r.model, dev).metric()), r.best_step});
  }
  return rows;
}

struct AblationRow {
  std::string label;
  AblationFlags flags;
  std::vector<double> metrics;  // one per evaluation variety
  double mean() const {
    double s = 0.0;
    for (double m : metrics) s += m;
    return metrics.empty() ? 0.0 : s / static_cast<double>(metrics.size());
  }
};

inline const std::vector<std::pair<std::string, AblationFlags>>& ablation_variants() {
  static const std::vector<std::pair<std::string, AblationFlags>> rows{
      {"w/o both", {false, false}},
      {"w/o spc", {true, false}},
      {"w/o inv", {false, true}},
      {"full", {true, true}},
  };
  return rows;
}

/// The four loss-component combinations in vacai mode with a shared seed,
/// each scored on every evaluation corpus.
inline std::vector<AblationRow> ablation_suite(const VarietyCorpus& first, const VarietyCorpus& second,
                                               const TrainConfig& cfg, TaskKind task,
                                               const std::vector<const VarietyCorpus*>& dev,
                                               const std::vector<const VarietyCorpus*>& eval) {
  if (eval.empty()) throw UsageError("ablation needs evaluation corpora");
  std::vector<AblationRow> rows;
  for (const auto& [label, flags] : ablation_variants()) {
    TrainConfig c = cfg;
    c.mode = Mode::vacai;
    c.ablation = flags;
    const TrainResult r = train(first, second, c, task, dev);
    AblationRow row{label, flags, {}};
    for (const VarietyCorpus* e : eval) row.metrics.push_back(evaluate(r.model, *e).metric());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lgen
