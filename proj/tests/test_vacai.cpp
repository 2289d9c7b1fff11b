#include <gtest/gtest.h>

#include <cmath>

#include "lgen/checkpoint.hpp"
#include "lgen/gradcheck.hpp"
#include "lgen/gradcheck_suite.hpp"
#include "lgen/synth.hpp"
#include "lgen/vacai.hpp"

using namespace lgen;

namespace {

LabelSpace toy_labels(std::size_t varieties = 2) {
  LabelSpace l;
  for (std::size_t v = 0; v < varieties; ++v) l.varieties.push_back("v" + std::to_string(v));
  l.tags = LabelVocab::from({"A", "B", "C"});
  l.rels = LabelVocab::from({"x", "y", "z"});
  return l;
}

DualEncoderModel toy_model(Mode mode, double lambda = 1.0, TaskKind task = TaskKind::dep, AblationFlags flags = {}) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.lambda = lambda;
  cfg.ablation = flags;
  cfg.seed = 3;
  return make_model(6, toy_labels(), task, cfg);
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

bool all_zero(const Matrix& m) {
  for (double x : m.data())
    if (x != 0.0) return false;
  return true;
}

bool grads_zero(Mlp2& m) {
  std::vector<ParamRef> p;
  append_params(p, "m", m);
  for (auto& r : p)
    if (!all_zero(r.tensor->grad)) return false;
  return true;
}

// Two small parallel varieties.
SynthCorpora small_pair(std::uint64_t seed) {
  SynthConfig c;
  c.variety_ids = {"p", "q"};
  c.overlap_rate = Matrix{{1.0, 0.5}, {0.5, 1.0}};
  c.distance = Matrix{{0.0, 2.0}, {2.0, 0.0}};
  c.family = {0, 1};
  c.sentences_per_variety = 120;
  c.dev_sentences = 30;
  c.test_sentences = 30;
  c.dim = 8;
  c.seed = seed;
  return generate(c);
}

TrainConfig short_run(Mode mode = Mode::vacai) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.max_steps = 30;
  cfg.eval_every = 10;
  cfg.batch_size = 16;
  cfg.lr = 2e-3;
  return cfg;
}

}  // namespace

TEST(Model, ShapesFollowFeatureWidth) {
  DualEncoderModel m = toy_model(Mode::vacai);
  EXPECT_EQ(m.hidden, 6u);
  EXPECT_EQ(m.f_inv.second.out_dim(), 3u);
  EXPECT_EQ(m.d_spc.second.out_dim(), 2u);
  EXPECT_THROW(make_model(5, toy_labels(), TaskKind::dep, TrainConfig{}), DataError);
  EXPECT_THROW(make_model(0, toy_labels(), TaskKind::dep, TrainConfig{}), DataError);
  EXPECT_THROW(parse_mode("joint"), UsageError);
  EXPECT_THROW(preset_config("roberta"), UsageError);
  EXPECT_EQ(preset_config("xlmr-like").lr, 5e-5);
  EXPECT_EQ(preset_config("mbert-like").lr, 2e-4);
}

TEST(Encode, ZeroWeightsGiveZeroFeatures) {
  DualEncoderModel m = toy_model(Mode::vacai);
  for (auto& p : m.params()) p.tensor->value.fill(0.0);
  Rng rng(1);
  const Encoding e = encode(m, random_matrix(rng, 3, 6));
  EXPECT_EQ(e.h, Matrix(3, 6));
  EXPECT_THROW(encode(m, Matrix(2, 4)), ShapeError);
}

TEST(Encode, HalvesAreTheStandaloneBranches) {
  DualEncoderModel m = toy_model(Mode::vacai);
  Rng rng(2);
  const Matrix x = random_matrix(rng, 5, 6);
  const Encoding e = encode(m, x);
  EXPECT_EQ(e.h.cols(), 6u);
  const auto [l, r] = split_cols(e.h, 3);
  EXPECT_EQ(l, mlp2_forward(m.f_inv, x));
  EXPECT_EQ(r, mlp2_forward(m.f_spc, x));

  DualEncoderModel a = toy_model(Mode::alignment_only);
  const Encoding ea = encode(a, x);
  const auto [al, ar] = split_cols(ea.h, 3);
  EXPECT_EQ(al, ar);
  EXPECT_EQ(al, mlp2_forward(a.f_inv, x));
}

TEST(Encode, RowPermutationCommutes) {
  DualEncoderModel m = toy_model(Mode::vacai);
  Rng rng(3);
  const Matrix x = random_matrix(rng, 4, 6);
  Matrix px(4, 6);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 6; ++c) px(i, c) = x(perm[i], c);
  const Matrix h = encode(m, x).h, ph = encode(m, px).h;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(ph(i, c), h(perm[i], c));
}

TEST(LossInv, LambdaScalesOnlyTheEncoderGradient) {
  Rng rng(4);
  const Matrix cls = random_matrix(rng, 8, 6);
  const std::vector<int> y{0, 1, 0, 1, 1, 0, 0, 1};

  DualEncoderModel zero = toy_model(Mode::vacai, 0.0);
  zero.zero_grad();
  loss_inv(zero, cls, y);
  EXPECT_TRUE(grads_zero(zero.f_inv));
  EXPECT_FALSE(grads_zero(zero.d_inv));

  for (double lambda : {0.5, 1.0}) {
    DualEncoderModel m = toy_model(Mode::vacai, lambda);
    m.zero_grad();
    loss_inv(m, cls, y);
    // Numeric gradient of the unreversed loss with respect to f_inv.
    std::vector<ParamRef> p;
    append_params(p, "f_inv", m.f_inv);
    auto f = [&] { return probe_inv(m, cls, y).loss; };
    for (auto& r : p) {
      const Matrix numeric = numeric_gradient(f, r.tensor->value);
      EXPECT_LT(relative_error(r.tensor->grad.data(), scaled(numeric, -lambda).data()), 1e-6) << r.name;
    }
    std::vector<ParamRef> d;
    append_params(d, "d_inv", m.d_inv);
    EXPECT_LT(grad_check(d, f).max_rel_error, 1e-6);
  }
}

TEST(LossSpc, DegenerateValuesAndGradients) {
  Rng rng(5);
  const Matrix cls = random_matrix(rng, 6, 6);
  TrainConfig cfg;
  DualEncoderModel one = make_model(6, toy_labels(1), TaskKind::dep, cfg);
  EXPECT_EQ(loss_spc(one, cls, std::vector<int>(6, 0)).loss, 0.0);

  DualEncoderModel m = toy_model(Mode::vacai);
  std::vector<ParamRef> d;
  append_params(d, "d_spc", m.d_spc);
  for (auto& r : d) r.tensor->value.fill(0.0);
  const std::vector<int> y{0, 1, 0, 1, 0, 1};
  EXPECT_NEAR(loss_spc(m, cls, y).loss, std::log(2.0), 1e-15);

  DualEncoderModel g = toy_model(Mode::vacai);
  g.zero_grad();
  loss_spc(g, cls, y);
  std::vector<ParamRef> f;
  append_params(f, "f_spc", g.f_spc);
  EXPECT_LT(grad_check(f, [&] { return probe_spc(g, cls, y).loss; }).max_rel_error, 1e-6);
}

TEST(Routing, VarietyLossesTouchOnlyTheirBranch) {
  Rng rng(6);
  const Matrix cls = random_matrix(rng, 8, 6);
  const std::vector<int> y{0, 1, 0, 1, 1, 0, 0, 1};
  DualEncoderModel m = toy_model(Mode::vacai);
  m.zero_grad();
  loss_inv(m, cls, y);
  EXPECT_TRUE(grads_zero(m.f_spc));
  EXPECT_TRUE(grads_zero(m.d_spc));
  m.zero_grad();
  loss_spc(m, cls, y);
  EXPECT_TRUE(grads_zero(m.f_inv));
  EXPECT_TRUE(grads_zero(m.d_inv));
}

TEST(Routing, ModesSilenceInactiveComponents) {
  for (TaskKind task : {TaskKind::dep, TaskKind::pos}) {
    Rng rng(7);
    DualEncoderModel base = toy_model(Mode::baseline, 1.0, task);
    const Batch b = detail::random_batch(rng, base, 5);
    base.zero_grad();
    const LossBreakdown lb = loss_total(base, b);
    EXPECT_TRUE(grads_zero(base.d_inv));
    EXPECT_TRUE(grads_zero(base.d_spc));
    EXPECT_EQ(lb.inv, 0.0);
    EXPECT_EQ(lb.spc, 0.0);
    EXPECT_EQ(lb.total, lb.task);

    DualEncoderModel align = toy_model(Mode::alignment_only, 1.0, task);
    align.zero_grad();
    const LossBreakdown la = loss_total(align, b);
    EXPECT_TRUE(grads_zero(align.f_spc));
    EXPECT_TRUE(grads_zero(align.d_spc));
    EXPECT_FALSE(grads_zero(align.d_inv));
    EXPECT_EQ(la.spc, 0.0);

    DualEncoderModel full = toy_model(Mode::vacai, 1.0, task);
    full.zero_grad();
    const LossBreakdown lf = loss_total(full, b);
    EXPECT_GT(lf.inv, 0.0);
    EXPECT_GT(lf.spc, 0.0);
    EXPECT_NEAR(lf.total, lf.inv + lf.spc + lf.task, 1e-12);

    DualEncoderModel none = toy_model(Mode::vacai, 1.0, task, {false, false});
    none.zero_grad();
    const LossBreakdown ln = loss_total(none, b);
    EXPECT_EQ(ln.total, ln.task);
    EXPECT_EQ(ln.task, lb.task);
  }
}

TEST(Routing, ForwardLossIndependentOfLambda) {
  Rng rng(8);
  DualEncoderModel ref = toy_model(Mode::vacai, 1.0);
  const Batch b = detail::random_batch(rng, ref, 6);
  const double want = loss_total(ref, b).total;
  for (double lambda : {0.0, 0.1, 0.5, 3.0}) {
    DualEncoderModel m = toy_model(Mode::vacai, lambda);
    EXPECT_EQ(loss_total(m, b).total, want);
  }
}

TEST(Train, ZeroStepsReturnsTheInitialModel) {
  const SynthCorpora s = small_pair(1);
  TrainConfig cfg = short_run();
  cfg.max_steps = 0;
  TrainResult r = train(s.train[0], s.train[1], cfg, TaskKind::dep);
  EXPECT_TRUE(r.trace.empty());
  DualEncoderModel init = make_model(8, build_label_space({&s.train[0], &s.train[1]}), TaskKind::dep, cfg);
  EXPECT_EQ(serialize_checkpoint(r.model), serialize_checkpoint(init));
}

TEST(Train, StepBudget) {
  TrainConfig cfg;
  EXPECT_EQ(planned_steps(6400, cfg), 1000);
  EXPECT_EQ(planned_steps(640, cfg), 100);
  EXPECT_EQ(planned_steps(641, cfg), 110);
  cfg.batch_size = 0;
  EXPECT_THROW(planned_steps(10, cfg), UsageError);
}

TEST(Train, DeterministicAndSelectsEarliestBestDevStep) {
  const SynthCorpora s = small_pair(2);
  const std::vector<const VarietyCorpus*> dev{&s.dev[0]};
  TrainResult a = train(s.train[0], s.train[1], short_run(), TaskKind::dep, dev);
  TrainResult b = train(s.train[0], s.train[1], short_run(), TaskKind::dep, dev);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(serialize_checkpoint(a.model), serialize_checkpoint(b.model));
  EXPECT_EQ(a.trace.size(), 30u);

  double best = -1.0;
  int step = 0;
  for (const auto& r : a.trace)
    if (r.dev_metric && *r.dev_metric > best) {
      best = *r.dev_metric;
      step = r.step;
    }
  EXPECT_EQ(a.best_step, step);
  EXPECT_EQ(*a.best_dev_metric, best);
  EXPECT_EQ(evaluate(a.model, dev).metric(), best);
  for (const auto& r : a.trace) {
    EXPECT_NEAR(r.loss.total, r.loss.inv + r.loss.spc + r.loss.task, 1e-12);
    EXPECT_GT(r.var0_fraction, 0.0);
  }
}

TEST(Train, RejectsBadInputs) {
  const SynthCorpora s = small_pair(3);
  const TrainConfig cfg = short_run();
  VarietyCorpus empty{"e", {}, Split::train};
  EXPECT_THROW(train(empty, s.train[1], cfg, TaskKind::dep), DataError);
  VarietyCorpus same = s.train[0];
  EXPECT_THROW(train(s.train[0], same, cfg, TaskKind::dep), DataError);
  VarietyCorpus unlabeled = s.train[1];
  unlabeled.sentences[5].heads.reset();
  EXPECT_THROW(train(s.train[0], unlabeled, cfg, TaskKind::dep), DataError);
  VarietyCorpus bare = s.train[1];
  bare.sentences[0].embedding.reset();
  EXPECT_THROW(train(s.train[0], bare, cfg, TaskKind::dep), DataError);
  TrainConfig neg = cfg;
  neg.lambda = -1.0;
  EXPECT_THROW(train(s.train[0], s.train[1], neg, TaskKind::dep), UsageError);
}

TEST(Harness, SweepRowsMatchDirectRuns) {
  const SynthCorpora s = small_pair(4);
  const std::vector<const VarietyCorpus*> dev{&s.dev[0]};
  TrainConfig cfg = short_run();
  const auto rows = lambda_sweep(s.train[0], s.train[1], cfg, TaskKind::dep, dev);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    TrainConfig c = cfg;
    c.lambda = cfg.lambda_grid[i];
    const TrainResult r = train(s.train[0], s.train[1], c, TaskKind::dep, dev);
    EXPECT_EQ(rows[i].lambda, c.lambda);
    EXPECT_EQ(rows[i].dev_metric, *r.best_dev_metric);
    EXPECT_EQ(rows[i].best_step, r.best_step);
  }
  EXPECT_EQ(lambda_sweep(s.train[0], s.train[1], cfg, TaskKind::dep, dev), rows);
  EXPECT_THROW(lambda_sweep(s.train[0], s.train[1], cfg, TaskKind::dep, {}), UsageError);
}

TEST(Harness, AblationWithoutBothLossesIsTheBaseline) {
  const SynthCorpora s = small_pair(5);
  const std::vector<const VarietyCorpus*> dev{&s.dev[0]}, eval{&s.test[0], &s.test[1]};
  const auto rows = ablation_suite(s.train[0], s.train[1], short_run(), TaskKind::dep, dev, eval);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].label, "w/o both");
  EXPECT_EQ(rows[3].label, "full");
  EXPECT_EQ(rows[3].flags, (AblationFlags{true, true}));
  TrainResult base = train(s.train[0], s.train[1], short_run(Mode::baseline), TaskKind::dep, dev);
  for (std::size_t e = 0; e < eval.size(); ++e) EXPECT_EQ(rows[0].metrics[e], evaluate(base.model, *eval[e]).metric());
}

TEST(Harness, DiscriminatorAccuracyNeedsTrainingVarieties) {
  const SynthCorpora s = small_pair(6);
  TrainResult r = train(s.train[0], s.train[1], short_run(), TaskKind::dep);
  const VarietyAccuracy acc = discriminator_accuracy(r.model, {&s.test[0], &s.test[1]});
  EXPECT_EQ(acc.sentences, 60u);
  EXPECT_GE(acc.spc, 0.0);
  VarietyCorpus other = s.test[0];
  other.variety_id = "zz";
  EXPECT_THROW(discriminator_accuracy(r.model, {&other}), DataError);
}

TEST(Checkpoint, RoundTripPreservesParametersAndPredictions) {
  const SynthCorpora s = small_pair(7);
  for (TaskKind task : {TaskKind::dep, TaskKind::pos}) {
    for (Mode mode : {Mode::baseline, Mode::alignment_only, Mode::vacai}) {
      TrainResult r = train(s.train[0], s.train[1], short_run(mode), task);
      const std::string bytes = serialize_checkpoint(r.model);
      DualEncoderModel back = deserialize_checkpoint(bytes);
      EXPECT_EQ(serialize_checkpoint(back), bytes);
      EXPECT_EQ(back.mode, mode);
      EXPECT_EQ(evaluate(back, s.test[0]).per_sentence, evaluate(r.model, s.test[0]).per_sentence);
    }
  }
}

TEST(Checkpoint, CorruptInputIsADataError) {
  const SynthCorpora s = small_pair(8);
  TrainConfig cfg = short_run();
  cfg.max_steps = 1;
  TrainResult r = train(s.train[0], s.train[1], cfg, TaskKind::dep);
  const std::string bytes = serialize_checkpoint(r.model);
  EXPECT_THROW(deserialize_checkpoint("VEMB" + bytes.substr(4)), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, 20)), DataError);
}
