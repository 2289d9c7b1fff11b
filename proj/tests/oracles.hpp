#pragma once

// Brute-force reference implementations used by the unit tests and the
// acceptance harness. They share no code with the library beyond the data
// types.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lgen/corpus.hpp"
#include "lgen/matrix.hpp"
#include "lgen/rng.hpp"

namespace oracle {

using lgen::Matrix;
using lgen::Rng;
using lgen::VarietyCorpus;

// Decodes UTF-8 lead bytes one at a time.
inline long scalar_count(const std::string& s) {
  long n = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t step = 1;
    if (c >= 0xF0) step = 4;
    else if (c >= 0xE0) step = 3;
    else if (c >= 0xC0) step = 2;
    i += step;
    ++n;
  }
  return n;
}

inline long weight(const std::string& tok) { return std::max(1L, scalar_count(tok) - 1); }

inline std::set<std::string> types(const VarietyCorpus& c) {
  std::vector<std::string> all;
  for (const auto& s : c.sentences)
    for (const auto& t : s.subword_tokens) all.push_back(t);
  std::vector<std::string> uniq;
  for (const auto& t : all) {
    bool seen = false;
    for (const auto& u : uniq) seen = seen || u == t;
    if (!seen) uniq.push_back(t);
  }
  return {uniq.begin(), uniq.end()};
}

inline double tj(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> uni = a;
  uni.insert(b.begin(), b.end());
  long num = 0, den = 0;
  for (const auto& t : uni) {
    den += weight(t);
    if (a.count(t) && b.count(t)) num += weight(t);
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// Compensated summation.
inline std::vector<double> centroid(const VarietyCorpus& c) {
  const std::size_t d = c.sentences.front().embedding->cls_layer2.size();
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    double sum = 0.0, comp = 0.0;
    for (const auto& s : c.sentences) {
      const double y = s.embedding->cls_layer2[k] - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    out[k] = sum / static_cast<double>(c.sentences.size());
  }
  return out;
}

using Ranking = std::vector<std::pair<std::string, double>>;

// Selection by repeated scanning for the best remaining candidate.
inline Ranking rank(std::vector<std::pair<std::string, double>> scored, bool ascending) {
  Ranking out;
  while (!scored.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
      const double a = scored[i].second, b = scored[best].second;
      const bool better = ascending ? a < b : a > b;
      if (better || (a == b && scored[i].first < scored[best].first)) best = i;
    }
    out.push_back(scored[best]);
    scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

inline Ranking sim_ranking(const VarietyCorpus& target, const std::vector<const VarietyCorpus*>& cands) {
  const auto mt = oracle::centroid(target);
  std::vector<std::pair<std::string, double>> scored;
  for (const auto* c : cands) {
    const auto mc = oracle::centroid(*c);
    long double s = 0.0L;
    for (std::size_t k = 0; k < mt.size(); ++k) s += (long double)(mc[k] - mt[k]) * (mc[k] - mt[k]);
    scored.emplace_back(c->variety_id, static_cast<double>(std::sqrt(s)));
  }
  return rank(std::move(scored), true);
}

inline Ranking overlap_ranking(const VarietyCorpus& target, const std::vector<const VarietyCorpus*>& cands) {
  const auto tt = types(target);
  std::vector<std::pair<std::string, double>> scored;
  for (const auto* c : cands) scored.emplace_back(c->variety_id, tj(types(*c), tt));
  return rank(std::move(scored), false);
}

// A random selection problem: one target and 1..8 candidates over a pool of
// ASCII and multi-byte tokens, at most 50 types per corpus.
struct ToppingInstance {
  VarietyCorpus target;
  std::vector<VarietyCorpus> candidates;

  std::vector<const VarietyCorpus*> pointers() const {
    std::vector<const VarietyCorpus*> out;
    for (const auto& c : candidates) out.push_back(&c);
    return out;
  }
};

inline std::string random_token(Rng& rng) {
  static const std::vector<std::string> glyphs{"a", "b", "k", "s", "ñ", "á", "ŋ", "ø", "ж", "語", "ā"};
  const std::size_t len = 1 + rng.index(5);
  std::string t;
  for (std::size_t i = 0; i < len; ++i) t += glyphs[rng.index(glyphs.size())];
  return t;
}

inline VarietyCorpus random_corpus(Rng& rng, const std::string& id, const std::vector<std::string>& pool,
                                   std::size_t dim, double offset) {
  VarietyCorpus c;
  c.variety_id = id;
  const std::size_t n_types = 1 + rng.index(std::min<std::size_t>(50, pool.size()));
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < n_types; ++i) vocab.push_back(pool[rng.index(pool.size())]);
  const std::size_t n_sent = 1 + rng.index(6);
  for (std::size_t s = 0; s < n_sent; ++s) {
    lgen::Sentence sent;
    const std::size_t len = s == 0 ? vocab.size() : 1 + rng.index(vocab.size());
    for (std::size_t i = 0; i < len; ++i) {
      const std::string& t = s == 0 ? vocab[i] : vocab[rng.index(vocab.size())];
      sent.words.push_back(t);
      sent.subword_tokens.push_back(t);
    }
    lgen::EmbeddingRecord e;
    for (std::size_t k = 0; k < dim; ++k) {
      e.cls_layer2.push_back(offset + rng.normal());
      e.cls_final.push_back(rng.normal());
    }
    e.token_vectors = Matrix(len, dim);
    sent.embedding = std::move(e);
    c.sentences.push_back(std::move(sent));
  }
  return c;
}

inline ToppingInstance random_topping_instance(Rng& rng) {
  std::vector<std::string> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(random_token(rng));
  const std::size_t dim = 2 + 2 * rng.index(3);
  ToppingInstance inst;
  inst.target = random_corpus(rng, "tgt", pool, dim, 0.0);
  const std::size_t n = 1 + rng.index(8);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = std::string(1, static_cast<char>('a' + rng.index(26))) + std::to_string(i);
    if (i > 0 && rng.index(5) == 0) {
      // An exact duplicate under another id forces ties in both rankings.
      VarietyCorpus dup = inst.candidates[rng.index(inst.candidates.size())];
      dup.variety_id = id;
      inst.candidates.push_back(std::move(dup));
    } else {
      inst.candidates.push_back(random_corpus(rng, id, pool, dim, 3.0 * rng.uniform()));
    }
  }
  return inst;
}

// Linear CKA through explicit n x n Gram matrices and HSIC.
inline double cka_gram(const Matrix& x, const Matrix& y) {
  const std::size_t n = x.rows();
  auto gram = [n](const Matrix& m) {
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(i, c) * m(j, c);
        k[i][j] = s;
      }
    // H K H with H = I - 11^T / n
    std::vector<double> row(n), col(n);
    double all = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        row[i] += k[i][j] / n;
        col[j] += k[i][j] / n;
        all += k[i][j] / (double(n) * n);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) k[i][j] = k[i][j] - row[i] - col[j] + all;
    return k;
  };
  const auto kx = gram(x), ky = gram(y);
  auto hsic = [n](const auto& a, const auto& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s += a[i][j] * b[j][i];
    return s;
  };
  return hsic(kx, ky) / std::sqrt(hsic(kx, kx) * hsic(ky, ky));
}

// Attachment counts by direct enumeration.
struct Attachment {
  double uas, las;
};

inline Attachment attachment(const std::vector<int>& ph, const std::vector<int>& pr, const std::vector<int>& gh,
                             const std::vector<int>& gr) {
  long head = 0, lab = 0;
  for (std::size_t i = 0; i < gh.size(); ++i) {
    if (ph[i] != gh[i]) continue;
    ++head;
    if (pr[i] == gr[i]) ++lab;
  }
  return {double(head) / gh.size(), double(lab) / gh.size()};
}

}  // namespace oracle
