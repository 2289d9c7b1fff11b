#pragma once

// Deterministic synthetic varieties with controlled vocabulary overlap,
// centroid geometry and learnable tagging/parsing structure.
//
// Geometry of the generated vectors (all in R^d):
//   cls_layer2 = mu_v + cls_noise * n
//   token      = prototype(word) + position_v(i) + mu_v + token_noise * n
//   cls_final  = mu_v + R_v z + mean_i(prototype + position_v(i)) + style_v + cls_noise * n
// where mu_v are variety centroids laid out by classical MDS of
// centroid_spread * distance, position_v is a per-family positional code
// (with per-variety drift) and style_v is a random combination of the
// family's positional directions. Prototypes are tag direction plus a
// word-specific offset. Heads point at the previous word; word 1 attaches to
// the root.
//
// Splits are parallel across varieties: sentence s of a split has the same
// length and latent content z in every variety. R_v renders z through a
// basis shared by all varieties mixed with one owned by the family.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/format.hpp"
#include "lgen/matrix.hpp"
#include "lgen/rng.hpp"

namespace lgen {

struct SynthConfig {
  std::vector<std::string> variety_ids{"v0", "v1"};
  std::size_t vocab_size = 60;
  Matrix overlap_rate{{1.0, 0.0}, {0.0, 1.0}};  // symmetric, unit diagonal
  Matrix distance{{0.0, 1.0}, {1.0, 0.0}};      // centroid distance shape
  double centroid_spread = 1.0;
  double token_noise = 0.1;
  double cls_noise = 0.1;
  std::vector<int> family{0, 1};  // varieties sharing a family share positional codes
  double family_drift = 0.0;      // per-variety perturbation of the family code
  double style_scale = 0.0;       // family-specific sentence-level variation in cls_final
  double position_scale = 1.0;
  double tag_scale = 1.0;
  double word_scale = 0.5;
  std::size_t content_dim = 0;  // latent sentence content shared by parallel sentences
  double content_scale = 1.0;
  double family_content = 0.5;  // share of the content rendering owned by the family
  std::size_t sentences_per_variety = 200;  // train split
  std::size_t dev_sentences = 50;
  std::size_t test_sentences = 50;
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  std::size_t tagset_size = 4;
  std::size_t dim = 32;
  std::uint64_t seed = 0;

  std::size_t n_varieties() const { return variety_ids.size(); }
};

struct SynthCorpora {
  std::vector<VarietyCorpus> train;
  std::vector<VarietyCorpus> dev;
  std::vector<VarietyCorpus> test;
  Matrix shared_types;                      // exact shared-type counts per pair
  std::vector<std::vector<double>> centroids;  // layer-2 centroids
  std::string manifest;

  const VarietyCorpus& train_of(const std::string& id) const { return find(train, id); }
  const VarietyCorpus& dev_of(const std::string& id) const { return find(dev, id); }
  const VarietyCorpus& test_of(const std::string& id) const { return find(test, id); }

 private:
  static const VarietyCorpus& find(const std::vector<VarietyCorpus>& v, const std::string& id) {
    for (const auto& c : v)
      if (c.variety_id == id) return c;
    throw DataError("no synthetic variety '" + id + "'");
  }
};

inline void validate(const SynthConfig& c) {
  const std::size_t n = c.n_varieties();
  auto fail = [](const std::string& m) { throw DataError("synth config: " + m); };
  if (n == 0) fail("no varieties");
  std::set<std::string> ids(c.variety_ids.begin(), c.variety_ids.end());
  if (ids.size() != n || ids.count("")) fail("variety ids must be unique and non-empty");
  if (c.overlap_rate.rows() != n || c.overlap_rate.cols() != n) fail("overlap_rate must be n x n");
  if (c.distance.rows() != n || c.distance.cols() != n) fail("distance must be n x n");
  if (c.family.size() != n) fail("family must list one entry per variety");
  for (std::size_t i = 0; i < n; ++i) {
    if (c.overlap_rate(i, i) != 1.0) fail("overlap_rate diagonal must be 1");
    if (c.distance(i, i) != 0.0) fail("distance diagonal must be 0");
    for (std::size_t j = 0; j < n; ++j) {
      if (c.overlap_rate(i, j) != c.overlap_rate(j, i)) fail("overlap_rate must be symmetric");
      if (c.overlap_rate(i, j) < 0.0 || c.overlap_rate(i, j) > 1.0) fail("overlap_rate outside [0, 1]");
      if (c.distance(i, j) != c.distance(j, i) || c.distance(i, j) < 0.0) fail("distance must be symmetric, >= 0");
    }
  }
  if (c.vocab_size == 0 || c.sentences_per_variety == 0 || c.tagset_size == 0) fail("counts must be positive");
  if (c.min_length == 0 || c.min_length > c.max_length) fail("bad sentence length range");
  if (c.dim == 0 || c.dim % 2 != 0) fail("dim must be positive and even");
  if (c.sentences_per_variety * c.min_length < c.vocab_size) {
    fail("train split too small to realize every vocabulary type");
  }
  if (c.centroid_spread < 0.0 || c.token_noise < 0.0 || c.cls_noise < 0.0 || c.content_scale < 0.0) {
    fail("scales must be non-negative");
  }
  if (c.family_content < 0.0 || c.family_content > 1.0) fail("family_content outside [0, 1]");
}

namespace detail {

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t d, double scale) {
  std::vector<double> v(d);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Random pronounceable string; uniqueness is enforced by the caller.
inline std::string make_word(Rng& rng) {
  static const char* onsets[] = {"b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sk", "tr"};
  static const char* vowels[] = {"a", "e", "i", "o", "u", "aa", "ei", "ou"};
  const std::size_t syllables = 1 + rng.index(3);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += onsets[rng.index(std::size(onsets))];
    w += vowels[rng.index(std::size(vowels))];
  }
  return w;
}

// Classical MDS of a distance matrix, embedded into R^dim with a random
// orthonormal basis.
inline std::vector<std::vector<double>> place_centroids(const Matrix& dist, double spread, std::size_t dim, Rng& rng) {
  const std::size_t n = dist.rows();
  Eigen::MatrixXd d2(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d2(i, j) = std::pow(spread * dist(i, j), 2);
  const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd b = -0.5 * j * d2 * j;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  const std::size_t k = std::min(n, dim);
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - c);  // descending eigenvalues
    const double lambda = std::max(0.0, eig.eigenvalues()(src));
    coords.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(src) * std::sqrt(lambda);
  }
  Eigen::MatrixXd gauss(dim, k);
  for (Eigen::Index r = 0; r < gauss.rows(); ++r)
    for (Eigen::Index c = 0; c < gauss.cols(); ++c) gauss(r, c) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ() * Eigen::MatrixXd::Identity(dim, k);
  const Eigen::MatrixXd placed = coords * q.transpose();  // n x dim
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c) out[i][c] = placed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return out;
}

inline std::string relation_label(std::size_t dep_tag, std::size_t head_tag, std::size_t tagset) {
  return "rel" + std::to_string((dep_tag + head_tag) % std::max<std::size_t>(tagset, 2));
}

}  // namespace detail

inline std::string format_manifest(const SynthConfig& cfg, const SynthCorpora& out,
                                   const std::vector<std::vector<std::size_t>>& vocab) {
  std::string m = "# synthetic variety manifest\n";
  m += "seed\t" + std::to_string(cfg.seed) + "\n";
  m += "dim\t" + std::to_string(cfg.dim) + "\n";
  m += "vocab_size\t" + std::to_string(cfg.vocab_size) + "\n";
  m += "centroid_spread\t" + format_number(cfg.centroid_spread) + "\n";
  m += "token_noise\t" + format_number(cfg.token_noise) + "\n";
  m += "cls_noise\t" + format_number(cfg.cls_noise) + "\n";
  m += "family_drift\t" + format_number(cfg.family_drift) + "\n";
  m += "style_scale\t" + format_number(cfg.style_scale) + "\n";
  m += "content\tdim=" + std::to_string(cfg.content_dim) + " scale=" + format_number(cfg.content_scale) +
       " family=" + format_number(cfg.family_content) + "\n";
  m += "sentences\ttrain=" + std::to_string(cfg.sentences_per_variety) + " dev=" + std::to_string(cfg.dev_sentences) +
       " test=" + std::to_string(cfg.test_sentences) + "\n";
  m += "varieties";
  for (std::size_t i = 0; i < cfg.n_varieties(); ++i)
    m += "\t" + cfg.variety_ids[i] + "(family=" + std::to_string(cfg.family[i]) + ",types=" +
         std::to_string(vocab[i].size()) + ")";
  m += "\n[shared_types]\n";
  for (std::size_t i = 0; i < cfg.n_varieties(); ++i)
    for (std::size_t j = i + 1; j < cfg.n_varieties(); ++j)
      m += cfg.variety_ids[i] + "\t" + cfg.variety_ids[j] + "\t" +
           std::to_string(static_cast<long>(out.shared_types(i, j))) + "\n";
  m += "[centroids]\n";
  for (std::size_t i = 0; i < cfg.n_varieties(); ++i) {
    m += cfg.variety_ids[i];
    for (double x : out.centroids[i]) m += "\t" + format_number(x);
    m += "\n";
  }
  return m;
}

/// Generates train/dev/test corpora for every configured variety.
inline SynthCorpora generate(const SynthConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n_varieties();
  const std::size_t d = cfg.dim;
  const std::size_t V = cfg.vocab_size;

  // Vocabularies over a global type pool. Variety j takes round(rate * V)
  // types from each earlier variety's own fresh types, each fresh type handed
  // to at most one later variety, so pairwise shared counts are exact.
  std::vector<std::vector<std::size_t>> vocab(n);
  std::vector<std::vector<std::size_t>> fresh(n);
  std::vector<std::size_t> fresh_used(n, 0);
  std::size_t next_type = 0;
  SynthCorpora out;
  out.shared_types = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto take = static_cast<std::size_t>(std::llround(cfg.overlap_rate(i, j) * static_cast<double>(V)));
      if (fresh_used[i] + take > fresh[i].size() || vocab[j].size() + take > V) {
        throw DataError("synth config: overlap rates cannot be realized exactly");
      }
      for (std::size_t t = 0; t < take; ++t) vocab[j].push_back(fresh[i][fresh_used[i]++]);
      out.shared_types(i, j) = out.shared_types(j, i) = static_cast<double>(take);
    }
    while (vocab[j].size() < V) {
      fresh[j].push_back(next_type);
      vocab[j].push_back(next_type++);
    }
    out.shared_types(j, j) = static_cast<double>(V);
  }
  const std::size_t n_types = next_type;

  // Word strings and tags per global type.
  Rng word_rng(derive_seed(cfg.seed, 100));
  std::vector<std::string> words(n_types);
  std::set<std::string> used;
  for (std::size_t t = 0; t < n_types; ++t) {
    std::string w = detail::make_word(word_rng);
    while (!used.insert(w).second) w = detail::make_word(word_rng);
    words[t] = w;
  }
  std::vector<std::size_t> tag_of(n_types);
  for (std::size_t t = 0; t < n_types; ++t) tag_of[t] = t % cfg.tagset_size;

  // Geometry.
  Rng geo(derive_seed(cfg.seed, 200));
  out.centroids = detail::place_centroids(cfg.distance, cfg.centroid_spread, d, geo);
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> tag_dir(cfg.tagset_size);
  for (auto& t : tag_dir) t = detail::gaussian_vector(geo, d, cfg.tag_scale * unit);
  std::vector<std::vector<double>> proto(n_types);
  for (std::size_t t = 0; t < n_types; ++t) {
    proto[t] = detail::gaussian_vector(geo, d, cfg.word_scale * unit);
    detail::axpy(proto[t], 1.0, tag_dir[tag_of[t]]);
  }
  std::map<int, std::vector<std::vector<double>>> family_pos;
  for (int f : cfg.family) {
    if (family_pos.count(f)) continue;
    auto& codes = family_pos[f];
    for (std::size_t i = 0; i < cfg.max_length; ++i) codes.push_back(detail::gaussian_vector(geo, d, cfg.position_scale * unit));
  }
  std::vector<std::vector<std::vector<double>>> pos_code(n);
  for (std::size_t v = 0; v < n; ++v) {
    pos_code[v] = family_pos[cfg.family[v]];
    for (auto& code : pos_code[v]) detail::axpy(code, 1.0, detail::gaussian_vector(geo, d, cfg.family_drift * unit));
  }

  // Content renderers, d x k each.
  const std::size_t kc = cfg.content_dim;
  auto gaussian_matrix = [&](double scale) {
    Matrix m(d, kc);
    for (double& x : m.data()) x = scale * geo.normal();
    return m;
  };
  const Matrix shared_render = gaussian_matrix(unit);
  std::map<int, Matrix> family_render;
  for (int f : cfg.family)
    if (!family_render.count(f)) family_render[f] = gaussian_matrix(unit);
  std::vector<Matrix> render(n);
  for (std::size_t v = 0; v < n; ++v) {
    render[v] = scaled(shared_render, std::sqrt(1.0 - cfg.family_content));
    add_inplace(render[v], scaled(family_render[cfg.family[v]], std::sqrt(cfg.family_content)));
    add_inplace(render[v], gaussian_matrix(cfg.family_drift * unit));
  }

  // Lengths and content are drawn once per split position and reused by
  // every variety.
  struct Slot {
    std::size_t length;
    std::vector<double> content;
  };
  auto make_slots = [&](std::size_t count, std::uint64_t stream) {
    Rng r(derive_seed(cfg.seed, stream));
    std::vector<Slot> slots(count);
    for (Slot& sl : slots) {
      sl.length = cfg.min_length + r.index(cfg.max_length - cfg.min_length + 1);
      sl.content = detail::gaussian_vector(r, kc, cfg.content_scale);
    }
    return slots;
  };
  const std::vector<Slot> train_slots = make_slots(cfg.sentences_per_variety, 300);
  const std::vector<Slot> dev_slots = make_slots(cfg.dev_sentences, 301);
  const std::vector<Slot> test_slots = make_slots(cfg.test_sentences, 302);

  // Sentences. Each variety draws words from repeated shuffles of its
  // vocabulary, so the train split covers every type.
  for (std::size_t v = 0; v < n; ++v) {
    Rng rng(derive_seed(cfg.seed, 1000 + v));
    std::vector<std::size_t> stream;
    std::size_t stream_pos = 0;
    auto next_word = [&]() {
      if (stream_pos == stream.size()) {
        stream = vocab[v];
        rng.shuffle(stream);
        stream_pos = 0;
      }
      return stream[stream_pos++];
    };
    auto make_corpus = [&](const std::vector<Slot>& slots, Split split) {
      VarietyCorpus c;
      c.variety_id = cfg.variety_ids[v];
      c.split = split;
      for (const Slot& slot : slots) {
        const std::size_t len = slot.length;
        Sentence sent;
        std::vector<std::size_t> types(len);
        for (auto& t : types) t = next_word();
        sent.pos_tags.emplace();
        sent.heads.emplace();
        sent.deprels.emplace();
        for (std::size_t i = 0; i < len; ++i) {
          sent.words.push_back(words[types[i]]);
          sent.pos_tags->push_back("T" + std::to_string(tag_of[types[i]]));
          sent.heads->push_back(static_cast<int>(i));
          sent.deprels->push_back(i == 0 ? "root"
                                         : detail::relation_label(tag_of[types[i]], tag_of[types[i - 1]], cfg.tagset_size));
        }
        sent.subword_tokens = sent.words;

        EmbeddingRecord e;
        e.cls_layer2 = out.centroids[v];
        for (double& x : e.cls_layer2) x += cfg.cls_noise * rng.normal();
        e.token_vectors = Matrix(len, d);
        std::vector<double> summary(d, 0.0);
        for (std::size_t i = 0; i < len; ++i) {
          auto row = e.token_vectors.row(i);
          for (std::size_t k = 0; k < d; ++k) {
            const double content = proto[types[i]][k] + pos_code[v][i][k];
            summary[k] += content / static_cast<double>(len);
            row[k] = content + out.centroids[v][k] + cfg.token_noise * rng.normal();
          }
        }
        e.cls_final = out.centroids[v];
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t j = 0; j < kc; ++j) e.cls_final[r] += render[v](r, j) * slot.content[j];
        for (std::size_t k = 0; k < d; ++k) e.cls_final[k] += summary[k] + cfg.cls_noise * rng.normal();
        if (cfg.style_scale > 0.0) {
          for (std::size_t i = 0; i < cfg.max_length; ++i) {
            const double coef = cfg.style_scale * rng.normal();
            detail::axpy(e.cls_final, coef, pos_code[v][i]);
          }
        }
        // Stored vectors are exactly representable in the 32-bit file format.
        for (double& x : e.cls_layer2) x = static_cast<float>(x);
        for (double& x : e.cls_final) x = static_cast<float>(x);
        for (double& x : e.token_vectors.data()) x = static_cast<float>(x);
        sent.embedding = std::move(e);
        c.sentences.push_back(std::move(sent));
      }
      return c;
    };
    out.train.push_back(make_corpus(train_slots, Split::train));
    out.dev.push_back(make_corpus(dev_slots, Split::dev));
    out.test.push_back(make_corpus(test_slots, Split::test));
  }
  out.manifest = format_manifest(cfg, out, vocab);
  return out;
}

/// Canonical three-variety scenario: A and B related (shared vocabulary,
/// near centroids, shared family), C unrelated (no shared types, far
/// centroid, its own family).
inline SynthConfig triple_config(std::uint64_t seed) {
  SynthConfig c;
  c.variety_ids = {"A", "B", "C"};
  c.vocab_size = 60;
  c.overlap_rate = Matrix{{1.0, 0.6, 0.0}, {0.6, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  c.distance = Matrix{{0.0, 1.0, 4.0}, {1.0, 0.0, 4.0}, {4.0, 4.0, 0.0}};
  c.centroid_spread = 1.0;
  c.family = {0, 0, 1};
  c.family_drift = 0.3;
  c.style_scale = 0.5;
  c.token_noise = 0.1;
  c.cls_noise = 1.0;
  c.content_dim = 8;
  c.content_scale = 1.0;
  c.family_content = 0.5;
  c.sentences_per_variety = 3200;
  c.dev_sentences = 200;
  c.test_sentences = 200;
  c.seed = seed;
  return c;
}

inline SynthCorpora make_triple(std::uint64_t seed) { return generate(triple_config(seed)); }

}  // namespace lgen
