#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ggsa {

struct QAExample {
  std::vector<std::int32_t> question;
  std::vector<std::vector<std::int32_t>> candidates;
  std::vector<std::size_t> positives;

  bool is_positive(std::size_t candidate) const;
  bool operator==(const QAExample&) const = default;
};

enum class TaskKind { kTopic, kPolysemy };

std::string to_string(TaskKind k);
TaskKind parse_task(std::string_view s);

// Token layout: [0, topics * topic_block) holds one block of topic tokens per
// topic, the next `ambiguous_tokens` ids are the polysemous tokens and every
// remaining id up to vocab_size is a filler.
//
// Topic task: a question carries `question_topic_tokens` tokens of its topic;
// the positive answer carries `answer_topic_tokens` tokens of the same topic
// and each negative the same number from one other topic.
//
// Polysemy task: a hidden relevance table marks, for every topic, exactly half
// of the ambiguous tokens as relevant and every ambiguous token is relevant to
// exactly half of the topics. Questions are built as above; the
// positive answer carries `answer_topic_tokens` ambiguous tokens relevant to
// the question topic and each negative the same number of irrelevant ones.
// An answer alone does not reveal which topics it serves.
struct SyntheticSpec {
  TaskKind task = TaskKind::kTopic;
  std::size_t vocab_size = 300;
  std::size_t topics = 20;
  std::size_t topic_block = 10;
  std::size_t ambiguous_tokens = 0;
  std::size_t question_min_len = 4;
  std::size_t question_max_len = 8;
  std::size_t answer_min_len = 6;
  std::size_t answer_max_len = 12;
  std::size_t question_topic_tokens = 2;
  std::size_t answer_topic_tokens = 3;
  std::size_t candidates = 5;
  std::size_t positives = 1;
  std::size_t train_questions = 2000;
  std::size_t dev_questions = 200;
  std::size_t test_questions = 200;
  std::uint64_t seed = 7;

  static SyntheticSpec topic_default() { return {}; }
  static SyntheticSpec polysemy_default();

  // Throws ConfigError when the layout does not fit or lengths are inconsistent.
  void validate() const;

  std::int32_t topic_token(std::size_t topic, std::size_t k) const;
  std::int32_t ambiguous_token(std::size_t k) const;
  std::size_t first_filler() const { return topics * topic_block + ambiguous_tokens; }
  // Topic owning a token, or -1 for ambiguous and filler tokens.
  int topic_of(std::int32_t token) const;
};

// Sets one SyntheticSpec field by name (e.g. "topics", "answer_max_len",
// "task"); unknown keys and malformed values raise ConfigError.
void set_spec_value(SyntheticSpec& spec, std::string_view key, std::string_view value);

struct Dataset {
  std::vector<QAExample> train, dev, test;
  // Polysemy relevance table, topics x ambiguous_tokens row-major; empty for
  // the topic task.
  std::vector<std::uint8_t> relevance;
};

// Deterministic in spec (including seed). Questions cycle through topics so
// every split is topic-balanced.
Dataset generate_dataset(const SyntheticSpec& spec);

// Expected P@1 of the Bayes-optimal ranker that sees a polysemy question's
// candidates but not the question: the mean over `examples` of the largest
// posterior probability of being the positive, with topics uniform a priori.
// Throws ConfigError for the topic task or a table that does not match `spec`.
double question_blind_ceiling(const SyntheticSpec& spec, const Dataset& ds, std::span<const QAExample> examples);

// One record per line: question ids (space separated) TAB candidates
// (comma-separated ids, '|' between candidates) TAB positive indices
// (comma separated).
std::string format_example(const QAExample& ex);
QAExample parse_example(std::string_view line);

void write_examples(std::ostream& out, std::span<const QAExample> examples);
std::vector<QAExample> read_examples(std::istream& in);

// train.tsv, dev.tsv and test.tsv inside `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

// Checks ids against a vocabulary and lengths against maxima; throws InputError.
void check_examples(std::span<const QAExample> examples, std::size_t vocab_size, std::size_t max_question_len,
                    std::size_t max_answer_len);

}  // namespace ggsa
