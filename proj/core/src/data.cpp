#include "ggsa/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "ggsa/error.hpp"
#include "ggsa/random.hpp"

namespace ggsa {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

template <typename Int>
Int parse_number(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("malformed integer '" + std::string(s) + "'");
  return v;
}

template <typename Int>
std::vector<Int> parse_list(std::string_view s, char sep) {
  std::vector<Int> out;
  if (s.empty()) return out;
  for (std::string_view part : split(s, sep)) out.push_back(parse_number<Int>(part));
  return out;
}

template <typename Int>
void join(std::string& out, const std::vector<Int>& values, char sep) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(values[i]);
  }
}

std::size_t draw_length(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

std::vector<std::int32_t> fill_sequence(Rng& rng, const SyntheticSpec& spec, std::vector<std::int32_t> content,
                                        std::size_t length) {
  const std::size_t fillers = spec.vocab_size - spec.first_filler();
  while (content.size() < length)
    content.push_back(static_cast<std::int32_t>(spec.first_filler() + uniform_index(rng, fillers)));
  shuffle(content.begin(), content.end(), rng);
  return content;
}

}  // namespace

bool QAExample::is_positive(std::size_t candidate) const {
  return std::find(positives.begin(), positives.end(), candidate) != positives.end();
}

std::string to_string(TaskKind k) { return k == TaskKind::kTopic ? "topic" : "polysemy"; }

TaskKind parse_task(std::string_view s) {
  if (s == "topic") return TaskKind::kTopic;
  if (s == "polysemy") return TaskKind::kPolysemy;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected topic or polysemy)");
}

SyntheticSpec SyntheticSpec::polysemy_default() {
  SyntheticSpec s;
  s.task = TaskKind::kPolysemy;
  s.topics = 16;
  s.topic_block = 4;
  s.ambiguous_tokens = 16;
  s.vocab_size = 100;
  s.question_min_len = 1;
  s.question_max_len = 2;
  s.answer_min_len = 2;
  s.answer_max_len = 4;
  s.question_topic_tokens = 1;
  s.answer_topic_tokens = 1;
  return s;
}

void SyntheticSpec::validate() const {
  if (topics < 2) throw ConfigError("synthetic data needs at least 2 topics");
  if (topic_block == 0) throw ConfigError("topic_block must be positive");
  if (first_filler() >= vocab_size)
    throw ConfigError(std::to_string(topics) + " topics of " + std::to_string(topic_block) + " tokens plus " +
                      std::to_string(ambiguous_tokens) + " ambiguous tokens leave no filler in a vocabulary of " +
                      std::to_string(vocab_size));
  if (task == TaskKind::kPolysemy && (ambiguous_tokens < 2 || ambiguous_tokens % 2 != 0))
    throw ConfigError("the polysemy task needs an even number (>= 2) of ambiguous tokens");
  if (task == TaskKind::kPolysemy && topics % 2 != 0)
    throw ConfigError("the polysemy task needs an even number of topics");
  if (question_topic_tokens == 0 || question_min_len < question_topic_tokens || question_max_len < question_min_len)
    throw ConfigError("question length range must hold the topic tokens");
  if (answer_topic_tokens == 0 || answer_min_len < answer_topic_tokens || answer_max_len < answer_min_len)
    throw ConfigError("answer length range must hold the content tokens");
  if (candidates < 2) throw ConfigError("at least 2 candidates per question are required");
  if (positives == 0 || positives >= candidates) throw ConfigError("positives must lie in [1, candidates)");
  if (train_questions == 0) throw ConfigError("train split must not be empty");
  if (task == TaskKind::kPolysemy && std::max(positives, candidates - positives) * answer_topic_tokens > ambiguous_tokens / 2)
    throw ConfigError("the polysemy task needs ambiguous_tokens / 2 distinct tokens for each side of a question");
}

std::int32_t SyntheticSpec::topic_token(std::size_t topic, std::size_t k) const {
  return static_cast<std::int32_t>(topic * topic_block + k);
}

std::int32_t SyntheticSpec::ambiguous_token(std::size_t k) const {
  return static_cast<std::int32_t>(topics * topic_block + k);
}

int SyntheticSpec::topic_of(std::int32_t token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= topics * topic_block) return -1;
  return static_cast<int>(static_cast<std::size_t>(token) / topic_block);
}

void set_spec_value(SyntheticSpec& spec, std::string_view key, std::string_view value) {
  if (key == "task") {
    spec.task = parse_task(value);
    return;
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("data spec: '" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
  const std::pair<const char*, std::size_t*> fields[] = {
      {"vocab_size", &spec.vocab_size},
      {"topics", &spec.topics},
      {"topic_block", &spec.topic_block},
      {"ambiguous_tokens", &spec.ambiguous_tokens},
      {"question_min_len", &spec.question_min_len},
      {"question_max_len", &spec.question_max_len},
      {"answer_min_len", &spec.answer_min_len},
      {"answer_max_len", &spec.answer_max_len},
      {"question_topic_tokens", &spec.question_topic_tokens},
      {"answer_topic_tokens", &spec.answer_topic_tokens},
      {"candidates", &spec.candidates},
      {"positives", &spec.positives},
      {"train_questions", &spec.train_questions},
      {"dev_questions", &spec.dev_questions},
      {"test_questions", &spec.test_questions},
  };
  if (key == "seed") {
    spec.seed = v;
    return;
  }
  for (const auto& [name, field] : fields)
    if (key == name) {
      *field = static_cast<std::size_t>(v);
      return;
    }
  throw ConfigError("data spec: unknown key '" + std::string(key) + "'");
}

Dataset generate_dataset(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset ds;
  std::vector<std::vector<std::int32_t>> relevant(spec.topics), irrelevant(spec.topics);
  if (spec.task == TaskKind::kPolysemy) {
    // Start from a checkerboard (every row and column half relevant) and mix it
    // with 2x2 swaps, which keep all row and column sums.
    const std::size_t a = spec.ambiguous_tokens;
    std::vector<std::uint8_t>& r = ds.relevance;
    r.assign(spec.topics * a, 0);
    for (std::size_t t = 0; t < spec.topics; ++t)
      for (std::size_t k = 0; k < a; ++k) r[t * a + k] = (t + k) % 2 == 0 ? 1 : 0;
    const std::size_t swaps = 50 * spec.topics * a;
    for (std::size_t i = 0; i < swaps; ++i) {
      const std::size_t t1 = uniform_index(rng, spec.topics), t2 = uniform_index(rng, spec.topics);
      const std::size_t k1 = uniform_index(rng, a), k2 = uniform_index(rng, a);
      if (r[t1 * a + k1] && r[t2 * a + k2] && !r[t1 * a + k2] && !r[t2 * a + k1]) {
        r[t1 * a + k1] = r[t2 * a + k2] = 0;
        r[t1 * a + k2] = r[t2 * a + k1] = 1;
      }
    }
    for (std::size_t t = 0; t < spec.topics; ++t)
      for (std::size_t k = 0; k < a; ++k) (r[t * a + k] ? relevant : irrelevant)[t].push_back(spec.ambiguous_token(k));
  }

  auto topic_content = [&](std::size_t topic, std::size_t count) {
    std::vector<std::int32_t> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(spec.topic_token(topic, uniform_index(rng, spec.topic_block)));
    return out;
  };
  auto answer = [&](std::vector<std::int32_t> content) {
    return fill_sequence(rng, spec, std::move(content), draw_length(rng, spec.answer_min_len, spec.answer_max_len));
  };

  auto make_split = [&](std::size_t count) {
    std::vector<QAExample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t topic = i % spec.topics;
      QAExample ex;
      ex.question = fill_sequence(rng, spec, topic_content(topic, spec.question_topic_tokens),
                                  draw_length(rng, spec.question_min_len, spec.question_max_len));
      std::vector<std::pair<std::vector<std::int32_t>, bool>> cands;
      // Ambiguous tokens are drawn without replacement within a question so
      // repeated negatives cannot hint at the positive.
      std::vector<std::int32_t> pools[2];
      if (spec.task == TaskKind::kPolysemy) {
        pools[0] = irrelevant[topic];
        pools[1] = relevant[topic];
        shuffle(pools[0].begin(), pools[0].end(), rng);
        shuffle(pools[1].begin(), pools[1].end(), rng);
      }
      for (std::size_t c = 0; c < spec.candidates; ++c) {
        const bool pos = c < spec.positives;
        std::vector<std::int32_t> content;
        if (spec.task == TaskKind::kTopic) {
          std::size_t t = topic;
          if (!pos) {
            t = uniform_index(rng, spec.topics - 1);
            if (t >= topic) ++t;
          }
          content = topic_content(t, spec.answer_topic_tokens);
        } else {
          std::vector<std::int32_t>& pool = pools[pos ? 1 : 0];
          content.assign(pool.end() - static_cast<std::ptrdiff_t>(spec.answer_topic_tokens), pool.end());
          pool.resize(pool.size() - spec.answer_topic_tokens);
        }
        cands.emplace_back(answer(std::move(content)), pos);
      }
      shuffle(cands.begin(), cands.end(), rng);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (cands[c].second) ex.positives.push_back(c);
        ex.candidates.push_back(std::move(cands[c].first));
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  ds.train = make_split(spec.train_questions);
  ds.dev = make_split(spec.dev_questions);
  ds.test = make_split(spec.test_questions);
  return ds;
}

double question_blind_ceiling(const SyntheticSpec& spec, const Dataset& ds, std::span<const QAExample> examples) {
  const std::size_t a = spec.ambiguous_tokens;
  if (spec.task != TaskKind::kPolysemy || ds.relevance.size() != spec.topics * a)
    throw ConfigError("question_blind_ceiling needs a polysemy dataset and its spec");
  if (examples.empty()) throw DataError("question_blind_ceiling: no examples");
  const auto first = static_cast<std::int64_t>(spec.ambiguous_token(0));
  // Every topic has the same number of relevant and irrelevant tokens, so all
  // consistent (topic, positive) assignments are equally likely.
  auto consistent = [&](const std::vector<std::int32_t>& answer, std::size_t topic, bool positive) {
    for (std::int32_t t : answer) {
      const std::int64_t k = static_cast<std::int64_t>(t) - first;
      if (k >= 0 && k < static_cast<std::int64_t>(a) &&
          (ds.relevance[topic * a + static_cast<std::size_t>(k)] != 0) != positive)
        return false;
    }
    return true;
  };
  double total = 0.0;
  for (const QAExample& ex : examples) {
    std::vector<double> weight(ex.candidates.size(), 0.0);
    double sum = 0.0;
    for (std::size_t topic = 0; topic < spec.topics; ++topic)
      for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
        bool ok = consistent(ex.candidates[c], topic, true);
        for (std::size_t o = 0; ok && o < ex.candidates.size(); ++o)
          if (o != c) ok = consistent(ex.candidates[o], topic, false);
        if (ok) {
          weight[c] += 1.0;
          sum += 1.0;
        }
      }
    if (sum == 0.0) throw DataError("question_blind_ceiling: example inconsistent with the relevance table");
    total += *std::max_element(weight.begin(), weight.end()) / sum;
  }
  return total / static_cast<double>(examples.size());
}

std::string format_example(const QAExample& ex) {
  std::string out;
  join(out, ex.question, ' ');
  out += '\t';
  for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
    if (c) out += '|';
    join(out, ex.candidates[c], ',');
  }
  out += '\t';
  join(out, ex.positives, ',');
  return out;
}

QAExample parse_example(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split(line, '\t');
  if (fields.size() != 3)
    throw DataError("expected 3 tab-separated fields, found " + std::to_string(fields.size()));
  QAExample ex;
  ex.question = parse_list<std::int32_t>(fields[0], ' ');
  if (ex.question.empty()) throw DataError("empty question");
  if (fields[1].empty()) throw DataError("question has no candidates");
  for (std::string_view cand : split(fields[1], '|')) {
    ex.candidates.push_back(parse_list<std::int32_t>(cand, ','));
    if (ex.candidates.back().empty()) throw DataError("empty candidate answer");
  }
  ex.positives = parse_list<std::size_t>(fields[2], ',');
  if (ex.positives.empty()) throw DataError("question has no positive candidate");
  for (std::size_t p : ex.positives)
    if (p >= ex.candidates.size())
      throw DataError("positive index " + std::to_string(p) + " out of range for " +
                      std::to_string(ex.candidates.size()) + " candidates");
  return ex;
}

void write_examples(std::ostream& out, std::span<const QAExample> examples) {
  for (const QAExample& ex : examples) out << format_example(ex) << '\n';
}

std::vector<QAExample> read_examples(std::istream& in) {
  std::vector<QAExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_example(line));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, std::span<const QAExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_examples(out, examples);
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<QAExample> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_examples(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_file(dir / "train.tsv", ds.train);
  write_file(dir / "dev.tsv", ds.dev);
  write_file(dir / "test.tsv", ds.test);
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.train = read_file(dir / "train.tsv");
  ds.dev = read_file(dir / "dev.tsv");
  ds.test = read_file(dir / "test.tsv");
  return ds;
}

void check_examples(std::span<const QAExample> examples, std::size_t vocab_size, std::size_t max_question_len,
                    std::size_t max_answer_len) {
  auto check_ids = [&](const std::vector<std::int32_t>& seq, std::size_t max_len, const char* what, std::size_t q) {
    if (seq.size() > max_len)
      throw InputError(std::string(what) + " of question " + std::to_string(q) + " has " +
                       std::to_string(seq.size()) + " tokens, maximum is " + std::to_string(max_len));
    for (std::int32_t id : seq)
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
        throw InputError("token id " + std::to_string(id) + " in question " + std::to_string(q) +
                         " is outside the vocabulary of " + std::to_string(vocab_size));
  };
  for (std::size_t q = 0; q < examples.size(); ++q) {
    check_ids(examples[q].question, max_question_len, "question", q);
    for (const auto& c : examples[q].candidates) check_ids(c, max_answer_len, "answer", q);
  }
}

}  // namespace ggsa
