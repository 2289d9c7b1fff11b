#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "lgen/analysis.hpp"
#include "lgen/synth.hpp"
#include "oracles.hpp"

using namespace lgen;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

// Random orthogonal matrix via Gram-Schmidt.
Matrix random_orthogonal(Rng& rng, std::size_t d) {
  Matrix q = random_matrix(rng, d, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < d; ++i) q(i, j) -= dot * q(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += q(i, j) * q(i, j);
    for (std::size_t i = 0; i < d; ++i) q(i, j) /= std::sqrt(norm);
  }
  return q;
}

SynthCorpora small_triple(std::uint64_t seed) {
  SynthConfig c = triple_config(seed);
  c.sentences_per_variety = 60;
  c.dev_sentences = 20;
  c.test_sentences = 40;
  return generate(c);
}

}  // namespace

TEST(LinearCka, SelfSimilarityIsOne) {
  Rng rng(1);
  const Matrix x = random_matrix(rng, 20, 5);
  EXPECT_NEAR(linear_cka(x, x), 1.0, 1e-12);
}

TEST(LinearCka, InvariantToScaleAndOrthogonalMaps) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = random_matrix(rng, 30, 6), y = random_matrix(rng, 30, 4);
    const double base = linear_cka(x, y);
    EXPECT_NEAR(linear_cka(scaled(x, 3.5), y), base, 1e-9);
    EXPECT_NEAR(linear_cka(matmul(x, random_orthogonal(rng, 6)), y), base, 1e-9);
    EXPECT_NEAR(linear_cka(x, matmul(y, random_orthogonal(rng, 4))), base, 1e-9);
    EXPECT_NEAR(linear_cka(y, x), base, 1e-12);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0 + 1e-12);
  }
}

TEST(LinearCka, RotatedFixture) {
  const Matrix x{{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}};
  const double c = std::cos(0.4), s = std::sin(0.4);
  const Matrix rot{{c, -s}, {s, c}};
  EXPECT_NEAR(linear_cka(x, matmul(x, rot)), 1.0, 1e-12);
}

TEST(LinearCka, AgreesWithGramOracle) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.index(25);
    const Matrix x = random_matrix(rng, n, 1 + rng.index(6)), y = random_matrix(rng, n, 1 + rng.index(6));
    EXPECT_NEAR(linear_cka(x, y), oracle::cka_gram(x, y), 1e-9);
  }
}

TEST(LinearCka, RejectsDegenerateInputs) {
  EXPECT_THROW(linear_cka(Matrix(1, 3), Matrix(1, 3)), DataError);
  EXPECT_THROW(linear_cka(Matrix(3, 2), Matrix(4, 2)), DataError);
  Matrix constant(5, 2, 1.0);
  Rng rng(4);
  EXPECT_THROW(linear_cka(constant, random_matrix(rng, 5, 2)), DataError);
}

TEST(CkaReport, SymmetricUnitDiagonalAndDeterministic) {
  const SynthCorpora s = small_triple(1);
  const std::vector<const VarietyCorpus*> cs{&s.test[0], &s.test[1], &s.test[2]};
  const CkaReport a = cka_report(nullptr, cs, 25, 7);
  EXPECT_EQ(a.sample_size, 25u);
  EXPECT_EQ(a.variety_ids, (std::vector<std::string>{"A", "B", "C"}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.matrix(i, i), 1.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a.matrix(i, j), a.matrix(j, i));
  }
  const CkaReport b = cka_report(nullptr, cs, 25, 7);
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_EQ(cka_report(nullptr, {&s.test[0]}, 0, 7).matrix, (Matrix{{1.0}}));
  EXPECT_EQ(cka_report(nullptr, cs, 0, 7).sample_size, 40u);
}

TEST(CkaReport, SharedRowsKeepParallelCorporaAligned) {
  const SynthCorpora s = small_triple(2);
  const CkaReport r = cka_report(nullptr, {&s.test[0], &s.test[1]}, 30, 11);
  // Same index sample: feature row k of both corpora is the same sentence slot.
  for (std::size_t k = 0; k < 30; ++k) {
    std::size_t slot = SIZE_MAX;
    for (std::size_t i = 0; i < s.test[0].size(); ++i) {
      const auto& v = s.test[0].sentences[i].embedding->cls_final;
      if (std::equal(v.begin(), v.end(), r.features[0].row(k).begin())) slot = i;
    }
    ASSERT_NE(slot, SIZE_MAX);
    const auto& w = s.test[1].sentences[slot].embedding->cls_final;
    EXPECT_TRUE(std::equal(w.begin(), w.end(), r.features[1].row(k).begin()));
  }
  VarietyCorpus copy = s.test[0];
  copy.variety_id = "A2";
  const CkaReport same = cka_report(nullptr, {&s.test[0], &copy}, 30, 11);
  EXPECT_NEAR(same.matrix(0, 1), 1.0, 1e-12);
  EXPECT_THROW(cka_report(nullptr, {}, 0, 1), DataError);
  EXPECT_THROW(cka_report(nullptr, {&s.test[0]}, 1, 1), DataError);
}

TEST(CkaReport, TsvHasHeaderAndRows) {
  const SynthCorpora s = small_triple(3);
  const std::string tsv = format_cka_tsv(cka_report(nullptr, {&s.test[0], &s.test[2]}, 10, 7));
  EXPECT_EQ(tsv.rfind("# stage=pretrained n=10\nvariety\tA\tC\nA\t1", 0), 0u);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 4);
}
