#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ggsa/ggsa.hpp"

using namespace ggsa;

namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec s;
  s.vocab_size = 60;
  s.topics = 4;
  s.topic_block = 3;
  s.question_min_len = 3;
  s.question_max_len = 5;
  s.answer_min_len = 4;
  s.answer_max_len = 6;
  s.question_topic_tokens = 1;
  s.answer_topic_tokens = 2;
  s.train_questions = 64;
  s.dev_questions = 32;
  s.test_questions = 32;
  s.seed = 5;
  return s;
}

ModelConfig tiny_model(Variant v = Variant::kGgsa) {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.heads = 2;
  cfg.group_size = 2;
  cfg.vocab_size = 60;
  cfg.max_question_len = 5;
  cfg.max_answer_len = 6;
  cfg.variant = v;
  cfg.seed = 2;
  return cfg;
}

TrainConfig tiny_train(std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 8;
  tc.optimizer.learning_rate = 2e-3;
  tc.seed = 9;
  return tc;
}

}  // namespace

TEST(Train, LossDecreasesOverFirstThreeEpochs) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model();
  auto params = EncoderParams<float>::init(cfg);
  const TrainResult r = train(cfg, params, tiny_train(3), data);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_FALSE(r.diverged);
  EXPECT_LT(r.log[2].train_loss, r.log[0].train_loss);
  EXPECT_GE(r.best_epoch, 1u);
}

TEST(Train, PointwiseLossDecreases) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model(Variant::kIggsa);
  auto params = EncoderParams<float>::init(cfg);
  auto tc = tiny_train(3);
  tc.loss = LossKind::kPointwise;
  const TrainResult r = train(cfg, params, tc, data);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_LT(r.log[2].train_loss, r.log[0].train_loss);
}

TEST(Train, FixedSeedReproducesLossSequence) {
  const Dataset data = generate_dataset(tiny_spec());
  auto cfg = tiny_model(Variant::kIggsa);
  cfg.composition = Composition::kAttention;
  auto run = [&] {
    auto params = EncoderParams<float>::init(cfg);
    std::vector<double> losses;
    for (const EpochLog& e : train(cfg, params, tiny_train(2), data).log) losses.push_back(e.train_loss);
    return losses;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
}

TEST(Train, ZeroLearningRateKeepsDevMetricsConstant) {
  const Dataset data = generate_dataset(tiny_spec());
  auto cfg = tiny_model();
  cfg.keep_prob = 1.0;
  auto params = EncoderParams<float>::init(cfg);
  auto tc = tiny_train(3);
  tc.optimizer.learning_rate = 0.0;
  const TrainResult r = train(cfg, params, tc, data);
  ASSERT_EQ(r.log.size(), 3u);
  for (const EpochLog& e : r.log) {
    EXPECT_EQ(e.dev_p_at_1, r.log[0].dev_p_at_1);
    EXPECT_EQ(e.dev_mrr, r.log[0].dev_mrr);
  }
}

TEST(Train, BestDevSnapshotIsRestored) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model();
  auto params = EncoderParams<float>::init(cfg);
  const TrainResult r = train(cfg, params, tiny_train(4), data);
  const RankMetrics dev = evaluate(cfg, params, data.dev, Scoring::kCosine);
  EXPECT_EQ(dev.p_at_1, r.best_dev_p_at_1);
  EXPECT_EQ(dev.p_at_1, r.log[r.best_epoch - 1].dev_p_at_1);
}

TEST(Train, TargetStopsEarly) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model();
  auto params = EncoderParams<float>::init(cfg);
  auto tc = tiny_train(5);
  tc.target_dev_p_at_1 = 0.0;
  EXPECT_EQ(train(cfg, params, tc, data).log.size(), 1u);
}

TEST(Train, NonFiniteParameterReportsDivergence) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model();
  auto params = EncoderParams<float>::init(cfg);
  params.blocks[0].ffn.b2.value[0] = std::numeric_limits<float>::infinity();
  const TrainResult r = train(cfg, params, tiny_train(2), data);
  EXPECT_TRUE(r.diverged);
  EXPECT_TRUE(r.log.empty());
  EXPECT_NE(r.divergence.find("non-finite"), std::string::npos);
}

TEST(Train, RejectsDataOutsideTheModel) {
  const Dataset data = generate_dataset(tiny_spec());
  auto cfg = tiny_model();
  cfg.vocab_size = 40;
  auto params = EncoderParams<float>::init(cfg);
  EXPECT_THROW(train(cfg, params, tiny_train(1), data), InputError);
}

TEST(Evaluate, DeterministicAndInvariantToDuplication) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model(Variant::kIggsa);
  auto params = EncoderParams<float>::init(cfg);
  const RankMetrics a = evaluate(cfg, params, data.dev, Scoring::kCosine);
  const RankMetrics b = evaluate(cfg, params, data.dev, Scoring::kCosine);
  EXPECT_EQ(a.p_at_1, b.p_at_1);
  EXPECT_EQ(a.mrr, b.mrr);
  std::vector<QAExample> twice = data.dev;
  twice.insert(twice.end(), data.dev.begin(), data.dev.end());
  const RankMetrics c = evaluate(cfg, params, twice, Scoring::kCosine);
  EXPECT_EQ(c.p_at_1, a.p_at_1);
  EXPECT_NEAR(c.mrr, a.mrr, 1e-15);
  EXPECT_EQ(c.questions, 2 * a.questions);
  EXPECT_THROW(evaluate(cfg, params, std::span<const QAExample>(), Scoring::kCosine), DataError);
}

TEST(Evaluate, UntrainedModelIsNearRandomGuess) {
  auto spec = tiny_spec();
  spec.test_questions = 1200;
  const Dataset data = generate_dataset(spec);
  for (Scoring s : {Scoring::kCosine, Scoring::kPointwise}) {
    const auto cfg = tiny_model();
    auto params = EncoderParams<float>::init(cfg);
    const RankMetrics m = evaluate(cfg, params, data.test, s);
    EXPECT_EQ(m.questions, 1200u);
    // Three standard errors of a 0.2 Bernoulli mean over 1200 questions.
    EXPECT_NEAR(m.p_at_1, 0.2, 0.035);
  }
}

TEST(Evaluate, ScoresFollowScoringKind) {
  const Dataset data = generate_dataset(tiny_spec());
  const auto cfg = tiny_model();
  auto params = EncoderParams<float>::init(cfg);
  for (double s : score_candidates(cfg, params, data.dev[0], Scoring::kCosine)) {
    EXPECT_GE(s, -1.0 - 1e-6);
    EXPECT_LE(s, 1.0 + 1e-6);
  }
  for (double s : score_candidates(cfg, params, data.dev[0], Scoring::kPointwise)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_EQ(scoring_for(LossKind::kPairwise), Scoring::kCosine);
  EXPECT_EQ(scoring_for(LossKind::kPointwise), Scoring::kPointwise);
  EXPECT_EQ(parse_loss("pointwise"), LossKind::kPointwise);
  EXPECT_THROW(parse_loss("listwise"), ConfigError);
}
