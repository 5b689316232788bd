#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ggsa/ggsa.hpp"
#include "oracle.hpp"

using namespace ggsa;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec(TaskKind task = TaskKind::kTopic) {
  SyntheticSpec s = task == TaskKind::kTopic ? SyntheticSpec::topic_default() : SyntheticSpec::polysemy_default();
  s.train_questions = 300;
  s.dev_questions = 60;
  s.test_questions = 60;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ggsa_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Generate, SameSeedGivesByteIdenticalFiles) {
  const auto spec = small_spec();
  const fs::path a = scratch("a"), b = scratch("b");
  write_dataset(a, generate_dataset(spec));
  write_dataset(b, generate_dataset(spec));
  for (const char* f : {"train.tsv", "dev.tsv", "test.tsv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  auto other = spec;
  other.seed += 1;
  EXPECT_NE(generate_dataset(other).train, generate_dataset(spec).train);
}

TEST(Generate, ExactlyOnePositiveAmongFiveCandidates) {
  for (TaskKind task : {TaskKind::kTopic, TaskKind::kPolysemy}) {
    const auto spec = small_spec(task);
    const Dataset ds = generate_dataset(spec);
    EXPECT_EQ(ds.train.size(), 300u);
    for (const auto* split : {&ds.train, &ds.dev, &ds.test})
      for (const QAExample& ex : *split) {
        ASSERT_EQ(ex.candidates.size(), 5u);
        ASSERT_EQ(ex.positives.size(), 1u);
        EXPECT_LT(ex.positives[0], 5u);
        EXPECT_GE(ex.question.size(), spec.question_min_len);
        EXPECT_LE(ex.question.size(), spec.question_max_len);
        for (const auto& c : ex.candidates) {
          EXPECT_GE(c.size(), spec.answer_min_len);
          EXPECT_LE(c.size(), spec.answer_max_len);
        }
      }
    EXPECT_NO_THROW(check_examples(ds.train, spec.vocab_size, spec.question_max_len, spec.answer_max_len));
  }
}

TEST(Generate, CountingOracleTopicTokensAppearAtConfiguredRate) {
  const auto spec = small_spec();
  const Dataset ds = generate_dataset(spec);
  std::vector<std::size_t> per_topic(spec.topics, 0);
  for (const QAExample& ex : ds.train) {
    std::map<int, std::size_t> q_topics;
    for (auto t : ex.question)
      if (spec.topic_of(t) >= 0) ++q_topics[spec.topic_of(t)];
    ASSERT_EQ(q_topics.size(), 1u);
    const auto [topic, q_count] = *q_topics.begin();
    EXPECT_EQ(q_count, spec.question_topic_tokens);
    ++per_topic[static_cast<std::size_t>(topic)];
    for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
      std::size_t same = 0, other = 0;
      std::set<int> other_topics;
      for (auto t : ex.candidates[c]) {
        const int k = spec.topic_of(t);
        if (k == topic) ++same;
        else if (k >= 0) {
          ++other;
          other_topics.insert(k);
        }
      }
      if (ex.is_positive(c)) {
        EXPECT_EQ(same, spec.answer_topic_tokens);
        EXPECT_EQ(other, 0u);
      } else {
        EXPECT_EQ(same, 0u);
        EXPECT_EQ(other, spec.answer_topic_tokens);
        EXPECT_EQ(other_topics.size(), 1u);
      }
    }
  }
  for (std::size_t n : per_topic) EXPECT_EQ(n, 300 / spec.topics);
}

TEST(Generate, PolysemyAnswersUseRelevanceTable) {
  const auto spec = small_spec(TaskKind::kPolysemy);
  const Dataset ds = generate_dataset(spec);
  ASSERT_EQ(ds.relevance.size(), spec.topics * spec.ambiguous_tokens);
  for (std::size_t t = 0; t < spec.topics; ++t) {
    std::size_t relevant = 0;
    for (std::size_t k = 0; k < spec.ambiguous_tokens; ++k) relevant += ds.relevance[t * spec.ambiguous_tokens + k];
    EXPECT_EQ(relevant, spec.ambiguous_tokens / 2);
  }
  for (std::size_t k = 0; k < spec.ambiguous_tokens; ++k) {
    std::size_t relevant = 0;
    for (std::size_t t = 0; t < spec.topics; ++t) relevant += ds.relevance[t * spec.ambiguous_tokens + k];
    EXPECT_EQ(relevant, spec.topics / 2);
  }
  const auto first_amb = static_cast<std::int32_t>(spec.topics * spec.topic_block);
  for (const QAExample& ex : ds.train) {
    int topic = -1;
    for (auto t : ex.question)
      if (spec.topic_of(t) >= 0) topic = spec.topic_of(t);
    ASSERT_GE(topic, 0);
    for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
      std::size_t amb = 0;
      for (auto t : ex.candidates[c]) {
        EXPECT_LT(spec.topic_of(t), 0);
        if (t >= first_amb && t < first_amb + static_cast<std::int32_t>(spec.ambiguous_tokens)) {
          ++amb;
          const std::size_t k = static_cast<std::size_t>(t - first_amb);
          EXPECT_EQ(ds.relevance[static_cast<std::size_t>(topic) * spec.ambiguous_tokens + k] != 0, ex.is_positive(c));
        }
      }
      EXPECT_EQ(amb, spec.answer_topic_tokens);
    }
  }
}

TEST(Generate, PolysemyTableIsNotTheStartingCheckerboard) {
  const auto spec = small_spec(TaskKind::kPolysemy);
  const Dataset ds = generate_dataset(spec);
  std::size_t differ = 0;
  for (std::size_t t = 0; t < spec.topics; ++t)
    for (std::size_t k = 0; k < spec.ambiguous_tokens; ++k)
      differ += ds.relevance[t * spec.ambiguous_tokens + k] != ((t + k) % 2 == 0 ? 1 : 0);
  EXPECT_GT(differ, spec.topics * spec.ambiguous_tokens / 4);
}

TEST(Generate, QuestionBlindRankerIsNearChanceOnPolysemy) {
  auto spec = SyntheticSpec::polysemy_default();
  spec.train_questions = 4000;
  spec.test_questions = 4000;
  const Dataset ds = generate_dataset(spec);
  const RankMetrics m = oracle::question_blind_ranker(ds.train, ds.test);
  EXPECT_NEAR(m.p_at_1, 1.0 / static_cast<double>(spec.candidates), 3.0 * std::sqrt(0.2 * 0.8 / 4000.0));
}

TEST(Generate, PolysemyCandidatesOfOneQuestionUseDistinctAmbiguousTokens) {
  const auto spec = small_spec(TaskKind::kPolysemy);
  const Dataset ds = generate_dataset(spec);
  const auto first = static_cast<std::int32_t>(spec.topics * spec.topic_block);
  for (const QAExample& ex : ds.train) {
    std::set<std::int32_t> seen;
    std::size_t count = 0;
    for (const auto& c : ex.candidates)
      for (auto t : c)
        if (t >= first && t < first + static_cast<std::int32_t>(spec.ambiguous_tokens)) {
          seen.insert(t);
          ++count;
        }
    EXPECT_EQ(seen.size(), count);
  }
}

TEST(BlindCeiling, TwoTopicComplementTableIsAHalf) {
  SyntheticSpec spec = SyntheticSpec::polysemy_default();
  spec.topics = 2;
  spec.ambiguous_tokens = 2;
  spec.candidates = 2;
  spec.train_questions = 20;
  const Dataset ds = generate_dataset(spec);
  // Either token can be the positive: one topic explains each assignment.
  EXPECT_DOUBLE_EQ(question_blind_ceiling(spec, ds, ds.train), 0.5);
}

TEST(BlindCeiling, MatchesEnumerationOracleAndBounds) {
  const auto spec = small_spec(TaskKind::kPolysemy);
  const Dataset ds = generate_dataset(spec);
  const auto first = static_cast<std::int32_t>(spec.topics * spec.topic_block);
  double expect = 0.0;
  for (const QAExample& ex : ds.test) {
    std::vector<std::size_t> amb;
    for (const auto& c : ex.candidates)
      for (auto t : c)
        if (t >= first && t < first + static_cast<std::int32_t>(spec.ambiguous_tokens))
          amb.push_back(static_cast<std::size_t>(t - first));
    std::map<std::size_t, double> hits;
    double total = 0;
    for (std::size_t topic = 0; topic < spec.topics; ++topic) {
      std::size_t relevant = 0, which = 0;
      for (std::size_t c = 0; c < amb.size(); ++c)
        if (ds.relevance[topic * spec.ambiguous_tokens + amb[c]]) {
          ++relevant;
          which = c;
        }
      if (relevant == 1) {
        hits[which] += 1;
        total += 1;
      }
    }
    double best = 0;
    for (const auto& [c, h] : hits) best = std::max(best, h);
    expect += best / total;
  }
  expect /= static_cast<double>(ds.test.size());
  const double got = question_blind_ceiling(spec, ds, ds.test);
  EXPECT_NEAR(got, expect, 1e-12);
  EXPECT_GE(got, 1.0 / static_cast<double>(spec.candidates));
  EXPECT_LE(got, 1.0);
  EXPECT_THROW(question_blind_ceiling(small_spec(), ds, ds.test), ConfigError);
}

TEST(Generate, InconsistentSpecsAreConfigErrors) {
  auto s = small_spec();
  s.topics = 200;
  EXPECT_THROW(generate_dataset(s), ConfigError);
  s = small_spec();
  s.positives = 5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.question_min_len = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(TaskKind::kPolysemy);
  s.ambiguous_tokens = 15;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(TaskKind::kPolysemy);
  s.ambiguous_tokens = 6;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(TaskKind::kPolysemy);
  s.topics = 15;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  EXPECT_THROW(set_spec_value(s, "colour", "3"), ConfigError);
  EXPECT_THROW(set_spec_value(s, "topics", "x"), ConfigError);
  set_spec_value(s, "task", "polysemy");
  EXPECT_EQ(s.task, TaskKind::kPolysemy);
}

TEST(Tsv, RoundTripsExamples) {
  const Dataset ds = generate_dataset(small_spec());
  std::stringstream ss;
  write_examples(ss, ds.dev);
  EXPECT_EQ(read_examples(ss), ds.dev);
  const fs::path dir = scratch("rt");
  write_dataset(dir, ds);
  const Dataset back = read_dataset(dir);
  EXPECT_EQ(back.train, ds.train);
  EXPECT_EQ(back.test, ds.test);
}

TEST(Tsv, FormatIsStable) {
  QAExample ex{{1, 2}, {{3, 4}, {5}}, {1}};
  EXPECT_EQ(format_example(ex), "1 2\t3,4|5\t1");
  EXPECT_EQ(parse_example("1 2\t3,4|5\t1"), ex);
}

TEST(Tsv, MalformedLinesAreDataErrorsWithLineNumbers) {
  EXPECT_THROW(parse_example("1 2\t3,4|5"), DataError);
  EXPECT_THROW(parse_example("1 x\t3,4|5\t1"), DataError);
  EXPECT_THROW(parse_example("1 2\t3,4|5\t2"), DataError);
  EXPECT_THROW(parse_example("1 2\t3,4|5\t"), DataError);
  std::stringstream ss("1\t2|3\t0\n1 2\tbad\t0\n");
  try {
    read_examples(ss);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_dataset(fs::temp_directory_path() / "ggsa_test_data_missing"), DataError);
}

TEST(CheckExamples, RejectsOutOfVocabularyAndOverlongSequences) {
  QAExample ex{{1, 2}, {{3, 4}, {5}}, {0}};
  std::vector<QAExample> v{ex};
  EXPECT_NO_THROW(check_examples(v, 6, 2, 2));
  EXPECT_THROW(check_examples(v, 5, 2, 2), InputError);
  EXPECT_THROW(check_examples(v, 6, 1, 2), InputError);
  EXPECT_THROW(check_examples(v, 6, 2, 1), InputError);
}
