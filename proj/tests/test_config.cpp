#include <gtest/gtest.h>

#include "lgen/config.hpp"

using namespace lgen;

TEST(Config, DefaultsResolveToThemselves) {
  const Json doc = resolve_config(Json(), Json());
  EXPECT_EQ(doc, default_config("mbert-like"));
  EXPECT_EQ(resolve_config(doc, Json()), doc);
  const TrainConfig t = train_config(doc);
  EXPECT_EQ(t.lr, 2e-4);
  EXPECT_EQ(t.batch_size, 64);
  EXPECT_EQ(t.max_steps, 1000);
  EXPECT_EQ(t.lambda_grid, (std::vector<double>{0.1, 0.5, 1.0}));
  EXPECT_EQ(config_task(doc), TaskKind::dep);
}

TEST(Config, UnknownKeysAndKindMismatchesAreUsageErrors) {
  EXPECT_THROW(resolve_config(Json{{"trian", {{"lr", 1e-3}}}}, Json()), UsageError);
  EXPECT_THROW(resolve_config(Json{{"train", {{"learning_rate", 1e-3}}}}, Json()), UsageError);
  EXPECT_THROW(resolve_config(Json{{"train", {{"lr", "fast"}}}}, Json()), UsageError);
  EXPECT_THROW(resolve_config(Json{{"train", {{"max_steps", 2.5}}}}, Json()), UsageError);
  EXPECT_THROW(resolve_config(Json{{"train", 3}}, Json()), UsageError);
  EXPECT_THROW(resolve_config(Json{{"preset", "roberta"}}, Json()), UsageError);
  EXPECT_THROW(parse_config_text("{\"train\": ", "inline"), UsageError);
  // Integers are accepted where a float is expected.
  EXPECT_EQ(train_config(resolve_config(Json{{"train", {{"lambda", 2}}}}, Json())).lambda, 2.0);
}

TEST(Config, PrecedenceIsPresetThenFileThenOverrides) {
  const Json file{{"preset", "xlmr-like"}, {"train", {{"batch_size", 8}, {"max_steps", 10}}}};
  const Json over{{"train", {{"max_steps", 20}}}};
  const Json doc = resolve_config(file, over);
  const TrainConfig t = train_config(doc);
  EXPECT_EQ(t.lr, 5e-5);
  EXPECT_EQ(t.batch_size, 8);
  EXPECT_EQ(t.max_steps, 20);
  EXPECT_EQ(doc["preset"], "xlmr-like");

  const Json explicit_lr = resolve_config(Json{{"preset", "xlmr-like"}, {"train", {{"lr", 1e-3}}}}, Json());
  EXPECT_EQ(train_config(explicit_lr).lr, 1e-3);
  EXPECT_EQ(resolve_config(file, Json{{"preset", "mbert-like"}})["train"]["lr"], 2e-4);
}

TEST(Config, SynthSectionRoundTrips) {
  const Json doc = resolve_config(Json{{"seed", 4}}, Json());
  const SynthConfig s = synth_config(doc);
  const SynthConfig t = triple_config(4);
  EXPECT_EQ(s.variety_ids, t.variety_ids);
  EXPECT_EQ(s.overlap_rate, t.overlap_rate);
  EXPECT_EQ(s.distance, t.distance);
  EXPECT_EQ(s.sentences_per_variety, t.sentences_per_variety);
  EXPECT_EQ(s.cls_noise, t.cls_noise);
  EXPECT_EQ(s.seed, 4u);
  EXPECT_THROW(resolve_config(Json{{"synth", {{"overlap_rate", "high"}}}}, Json()), UsageError);
}

TEST(Config, ValuesOutsideTheirDomainAreRejected) {
  EXPECT_THROW(train_config(resolve_config(Json{{"train", {{"lr", 0.0}}}}, Json())), UsageError);
  EXPECT_THROW(train_config(resolve_config(Json{{"train", {{"nonlinearity", "gelu"}}}}, Json())), UsageError);
  EXPECT_THROW(train_config(resolve_config(Json{{"train", {{"mode", "joint"}}}}, Json())), UsageError);
}

TEST(CorpusSpec, Forms) {
  const CorpusSpec two = parse_corpus_spec("sme:data/sme.conllu");
  EXPECT_EQ(two.id, "sme");
  EXPECT_EQ(two.conllu, "data/sme.conllu");
  EXPECT_TRUE(two.vemb.empty());
  const CorpusSpec four = parse_corpus_spec("a:x.conllu:x.vemb:x.tok");
  EXPECT_EQ(four.vemb, "x.vemb");
  EXPECT_EQ(four.tokens, "x.tok");
  EXPECT_THROW(parse_corpus_spec("justone"), UsageError);
  EXPECT_THROW(parse_corpus_spec(":x.conllu"), UsageError);
  EXPECT_THROW(parse_corpus_spec("a:b:c:d:e"), UsageError);
}
