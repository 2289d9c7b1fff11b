#pragma once

// Linear CKA between variety representation sets.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/matrix.hpp"
#include "lgen/rng.hpp"
#include "lgen/vacai.hpp"

namespace lgen {

/// ||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) with column-centered
/// inputs. Rows of X and Y are paired.
inline double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DataError("linear_cka: row counts differ");
  if (x.rows() < 2) throw DataError("linear_cka: need at least two rows");
  const Matrix xc = center_columns(x);
  const Matrix yc = center_columns(y);
  const double cross = frobenius_sq(matmul_tn(xc, yc));
  const double xx = std::sqrt(frobenius_sq(matmul_tn(xc, xc)));
  const double yy = std::sqrt(frobenius_sq(matmul_tn(yc, yc)));
  if (xx == 0.0 || yy == 0.0) throw DataError("linear_cka: zero-variance input");
  return cross / (xx * yy);
}

enum class FeatureStage { pretrained, post_training };

inline const char* to_string(FeatureStage s) { return s == FeatureStage::pretrained ? "pretrained" : "post_training"; }

struct CkaReport {
  std::vector<std::string> variety_ids;
  Matrix matrix;
  FeatureStage stage = FeatureStage::pretrained;
  std::size_t sample_size = 0;
  std::vector<Matrix> features;  // the paired rows used, one matrix per variety
};

// Final-layer [CLS] rows of a corpus, optionally mapped through a model.
inline Matrix cls_features(const VarietyCorpus& corpus, const std::vector<std::size_t>& rows,
                           const DualEncoderModel* model) {
  if (rows.empty()) throw DataError("no rows selected");
  const std::size_t d = corpus.sentences[rows.front()].embedding->dim();
  Matrix raw(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = corpus.sentences[rows[i]].embedding;
    if (!e) throw DataError(corpus.variety_id + ": missing embedding");
    if (e->dim() != d) throw DataError(corpus.variety_id + ": inconsistent embedding width");
    std::copy(e->cls_final.begin(), e->cls_final.end(), raw.row(i).begin());
  }
  if (!model) return raw;
  return encode(*model, raw).h;
}

/// Pairwise CKA over [CLS]-level features: raw final-layer vectors when
/// `model` is null, the joint feature h otherwise. Every corpus contributes
/// the same rows, chosen by one seeded permutation shared by all corpora.
inline CkaReport cka_report(const DualEncoderModel* model, const std::vector<const VarietyCorpus*>& corpora,
                            std::size_t sample_size, std::uint64_t seed) {
  if (corpora.empty()) throw DataError("cka_report: no corpora");
  std::size_t n = SIZE_MAX;
  for (const VarietyCorpus* c : corpora) {
    if (c->size() < 2) throw DataError("cka_report: " + c->variety_id + " has fewer than two sentences");
    if (!c->has_embeddings()) throw DataError("cka_report: " + c->variety_id + " lacks embeddings");
    n = std::min(n, c->size());
  }
  if (sample_size != 0) n = std::min(n, sample_size);
  if (n < 2) throw DataError("cka_report: sample size must be at least 2");

  CkaReport rep;
  rep.stage = model ? FeatureStage::post_training : FeatureStage::pretrained;
  rep.sample_size = n;
  // One index sample for every corpus, so parallel corpora stay row-aligned.
  std::size_t common = SIZE_MAX;
  for (const VarietyCorpus* c : corpora) common = std::min(common, c->size());
  std::vector<std::size_t> idx(common);
  for (std::size_t i = 0; i < common; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  for (std::size_t k = 0; k < corpora.size(); ++k) {
    rep.variety_ids.push_back(corpora[k]->variety_id);
    rep.features.push_back(cls_features(*corpora[k], idx, model));
  }
  const std::size_t v = corpora.size();
  rep.matrix = Matrix(v, v);
  for (std::size_t i = 0; i < v; ++i) {
    rep.matrix(i, i) = 1.0;
    for (std::size_t j = i + 1; j < v; ++j) {
      const double c = linear_cka(rep.features[i], rep.features[j]);
      rep.matrix(i, j) = c;
      rep.matrix(j, i) = c;
    }
  }
  return rep;
}

inline std::string format_cka_tsv(const CkaReport& rep) {
  std::string out = "# stage=" + std::string(to_string(rep.stage)) + " n=" + std::to_string(rep.sample_size) + "\n";
  out += "variety";
  for (const auto& id : rep.variety_ids) out += "\t" + id;
  out += '\n';
  for (std::size_t i = 0; i < rep.variety_ids.size(); ++i) {
    out += rep.variety_ids[i];
    for (std::size_t j = 0; j < rep.variety_ids.size(); ++j) out += "\t" + format_number(rep.matrix(i, j));
    out += '\n';
  }
  return out;
}

inline std::string format_features_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_number(m(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace lgen
