#pragma once

// Source-variety selection by two independent rankings: proximity of
// second-layer [CLS] centroids, and token-length weighted Jaccard overlap of
// subword vocabularies.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"

namespace lgen {

struct RankedVariety {
  std::string variety_id;
  double score = 0.0;  // centroid distance or TJ, depending on the ranking
  friend bool operator==(const RankedVariety&, const RankedVariety&) = default;
};

struct SelectionReport {
  std::string target_id;
  std::vector<RankedVariety> sim_ranking;      // ascending distance
  std::vector<RankedVariety> overlap_ranking;  // descending TJ
  std::pair<std::string, std::string> selected_pair;  // (v_sim, v_overlap)
};

/// Mean of the corpus' second-layer [CLS] vectors.
inline std::vector<double> centroid(const VarietyCorpus& corpus) {
  if (corpus.empty()) throw DataError("centroid: corpus " + corpus.variety_id + " is empty");
  std::vector<double> sum;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& emb = corpus.sentences[i].embedding;
    if (!emb) {
      throw DataError("centroid: sentence " + std::to_string(i) + " of " + corpus.variety_id +
                      " has no embedding");
    }
    if (sum.empty()) sum.assign(emb->cls_layer2.size(), 0.0);
    if (emb->cls_layer2.size() != sum.size()) throw DataError("centroid: inconsistent dimension");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += emb->cls_layer2[k];
  }
  const double n = static_cast<double>(corpus.size());
  for (double& x : sum) x /= n;
  return sum;
}

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Candidates by ascending centroid distance to the target; ties by id.
inline std::vector<RankedVariety> select_sim(const VarietyCorpus& target,
                                             const std::vector<const VarietyCorpus*>& candidates) {
  if (candidates.empty()) throw DataError("select_sim: no candidates");
  const auto mu_target = centroid(target);
  std::vector<RankedVariety> ranking;
  for (const VarietyCorpus* c : candidates) ranking.push_back({c->variety_id, euclidean_distance(centroid(*c), mu_target)});
  std::sort(ranking.begin(), ranking.end(), [](const RankedVariety& a, const RankedVariety& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.variety_id < b.variety_id;
  });
  return ranking;
}

// Number of Unicode scalar values in a UTF-8 string.
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0u) != 0x80u) ++n;
  return n;
}

/// max(1, len(tok) - 1), length in Unicode scalar values.
inline long token_weight(std::string_view tok) {
  if (tok.empty()) throw DataError("token_weight: empty token");
  const long len = static_cast<long>(utf8_length(tok));
  return std::max(1L, len - 1);
}

/// Token-length weighted Jaccard similarity of two type sets.
inline double tj_similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) throw DataError("tj_similarity: both token sets are empty");
  long inter = 0, uni = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && *ia < *ib)) {
      uni += token_weight(*ia++);
    } else if (ia == a.end() || *ib < *ia) {
      uni += token_weight(*ib++);
    } else {
      const long w = token_weight(*ia);
      inter += w;
      uni += w;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Candidates by descending TJ against the target vocabulary; ties by id.
inline std::vector<RankedVariety> select_overlap(const VarietyCorpus& target,
                                                 const std::vector<const VarietyCorpus*>& candidates) {
  if (candidates.empty()) throw DataError("select_overlap: no candidates");
  const auto target_types = token_type_set(target);
  std::vector<RankedVariety> ranking;
  for (const VarietyCorpus* c : candidates) ranking.push_back({c->variety_id, tj_similarity(token_type_set(*c), target_types)});
  std::sort(ranking.begin(), ranking.end(), [](const RankedVariety& a, const RankedVariety& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.variety_id < b.variety_id;
  });
  return ranking;
}

/// Heads of both rankings. With `force_distinct`, a coinciding overlap head
/// is replaced by the overlap runner-up.
inline SelectionReport topping_pair(const VarietyCorpus& target, const std::vector<const VarietyCorpus*>& candidates,
                                    bool force_distinct = false) {
  if (force_distinct && candidates.size() < 2) {
    throw DataError("force_distinct requires at least two candidates");
  }
  SelectionReport report;
  report.target_id = target.variety_id;
  report.sim_ranking = select_sim(target, candidates);
  report.overlap_ranking = select_overlap(target, candidates);
  report.selected_pair = {report.sim_ranking.front().variety_id, report.overlap_ranking.front().variety_id};
  if (force_distinct && report.selected_pair.first == report.selected_pair.second) {
    report.selected_pair.second = report.overlap_ranking[1].variety_id;
  }
  return report;
}

}  // namespace lgen
