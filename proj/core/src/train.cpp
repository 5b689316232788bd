#include "ggsa/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ggsa/error.hpp"
#include "ggsa/random.hpp"

namespace ggsa {

std::string to_string(LossKind k) { return k == LossKind::kPairwise ? "pairwise" : "pointwise"; }

LossKind parse_loss(std::string_view s) {
  if (s == "pairwise") return LossKind::kPairwise;
  if (s == "pointwise") return LossKind::kPointwise;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected pairwise or pointwise)");
}

Scoring scoring_for(LossKind k) { return k == LossKind::kPairwise ? Scoring::kCosine : Scoring::kPointwise; }

namespace {

template <typename T>
struct Composed {
  Var<T> vq;
  EncodedSequence<T> q;
};

template <typename T>
Composed<T> compose_question(Tape<T>& tape, const ModelConfig& cfg, EncoderParams<T>& params,
                             std::span<const std::int32_t> tokens, bool training, Rng* rng) {
  EncodedSequence<T> q = encode_question(tape, tokens, cfg, params, training, rng);
  Var<T> vq = compose(q, Composition::kMaxPool, params.composition, static_cast<const Var<T>*>(nullptr));
  return {vq, std::move(q)};
}

template <typename T>
Var<T> compose_answer(Tape<T>& tape, const ModelConfig& cfg, EncoderParams<T>& params, const Composed<T>& q,
                      std::span<const std::int32_t> tokens, bool training, Rng* rng) {
  EncodedSequence<T> a = encode_answer(tape, tokens, cfg, params, training, rng, &q.q);
  return compose(a, cfg.composition, params.composition,
                 cfg.composition == Composition::kAttention ? &q.vq : static_cast<const Var<T>*>(nullptr));
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(t[i])) return false;
  return true;
}

// Loss of one training question, backpropagated into the parameter grads.
template <typename T>
double train_question(const ModelConfig& cfg, EncoderParams<T>& params, const TrainConfig& tc, const QAExample& ex,
                      Rng& rng) {
  Tape<T> tape;
  Composed<T> q = compose_question(tape, cfg, params, ex.question, true, &rng);
  std::vector<Var<T>> losses;
  if (tc.loss == LossKind::kPairwise) {
    const std::size_t pos = ex.positives[uniform_index(rng, ex.positives.size())];
    std::vector<std::size_t> pool;
    for (std::size_t c = 0; c < ex.candidates.size(); ++c)
      if (!ex.is_positive(c)) pool.push_back(c);
    if (pool.empty()) throw DataError("pairwise training needs a negative candidate for every question");
    Var<T> vpos = compose_answer(tape, cfg, params, q, ex.candidates[pos], true, &rng);
    for (std::size_t k = 0; k < tc.negatives; ++k) {
      const std::size_t neg = pool[uniform_index(rng, pool.size())];
      Var<T> vneg = compose_answer(tape, cfg, params, q, ex.candidates[neg], true, &rng);
      losses.push_back(pairwise_hinge_loss(q.vq, vpos, vneg, static_cast<T>(tc.margin)));
    }
  } else {
    for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
      Var<T> va = compose_answer(tape, cfg, params, q, ex.candidates[c], true, &rng);
      losses.push_back(pointwise_loss(q.vq, va, ex.is_positive(c), params.scorer).loss);
    }
  }
  Var<T> total = losses.size() == 1 ? losses.front() : sum(concat_rows(std::span<const Var<T>>(losses)));
  const double value = static_cast<double>(total.value()[0]);
  if (!std::isfinite(value)) return value;
  tape.backward(total);
  return value;
}

template <typename T>
std::vector<Tensor<T>> snapshot(EncoderParams<T>& params) {
  std::vector<Tensor<T>> out;
  for (Parameter<T>* p : params.all()) out.push_back(p->value);
  return out;
}

template <typename T>
void restore(EncoderParams<T>& params, const std::vector<Tensor<T>>& values) {
  auto all = params.all();
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = values[i];
}

}  // namespace

template <typename T>
std::vector<double> score_candidates(const ModelConfig& cfg, EncoderParams<T>& params, const QAExample& ex,
                                     Scoring scoring) {
  Tape<T> tape;
  Composed<T> q = compose_question(tape, cfg, params, ex.question, false, nullptr);
  std::vector<double> scores;
  for (const auto& cand : ex.candidates) {
    Var<T> va = compose_answer(tape, cfg, params, q, cand, false, nullptr);
    if (scoring == Scoring::kCosine) {
      scores.push_back(static_cast<double>(cosine(q.vq, va).value()[0]));
    } else {
      const Tensor<T>& z = scorer_logits(q.vq, va, params.scorer).value();
      scores.push_back(1.0 / (1.0 + std::exp(static_cast<double>(z[0]) - static_cast<double>(z[1]))));
    }
  }
  return scores;
}

template <typename T>
RankMetrics evaluate(const ModelConfig& cfg, EncoderParams<T>& params, std::span<const QAExample> examples,
                     Scoring scoring) {
  if (examples.empty()) throw DataError("evaluate: empty dataset");
  std::vector<std::vector<std::pair<double, bool>>> ranked;
  ranked.reserve(examples.size());
  for (const QAExample& ex : examples) {
    const std::vector<double> scores = score_candidates(cfg, params, ex, scoring);
    std::vector<std::pair<double, bool>> q;
    for (std::size_t c = 0; c < scores.size(); ++c) q.emplace_back(scores[c], ex.is_positive(c));
    ranked.push_back(std::move(q));
  }
  return rank_metrics(ranked);
}

template <typename T>
TrainResult train(const ModelConfig& cfg, EncoderParams<T>& params, const TrainConfig& tc, const Dataset& data) {
  cfg.validate();
  if (data.train.empty()) throw DataError("train: empty training split");
  if (tc.batch_size == 0 || tc.negatives == 0) throw ConfigError("batch_size and negatives must be positive");
  check_examples(data.train, cfg.vocab_size, cfg.max_question_len, cfg.max_answer_len);
  check_examples(data.dev, cfg.vocab_size, cfg.max_question_len, cfg.max_answer_len);

  params.embedding.trainable = !tc.freeze_embeddings;
  auto all = params.all();
  RmsPropMomentum<T> optimizer(tc.optimizer);
  Rng rng(tc.seed);
  const Scoring scoring = scoring_for(tc.loss);
  TrainResult result;
  std::vector<Tensor<T>> best = snapshot(params);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  params.zero_grad();

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    try {
      for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
        const std::size_t end = std::min(order.size(), b + tc.batch_size);
        for (std::size_t i = b; i < end; ++i) {
          const double loss = train_question(cfg, params, tc, data.train[order[i]], rng);
          if (!std::isfinite(loss))
            throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                                        std::to_string(order[i]));
          loss_sum += loss;
        }
        optimizer.step(all);
        params.zero_grad();
        for (Parameter<T>* p : all)
          if (!all_finite(p->value)) throw TrainingDivergedError("non-finite value in parameter '" + p->name + "'");
      }
    } catch (const TrainingDivergedError& e) {
      result.diverged = true;
      result.divergence = e.what();
      params.zero_grad();
      restore(params, best);
      return result;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    if (!data.dev.empty()) {
      const RankMetrics dev = evaluate(cfg, params, data.dev, scoring);
      log.dev_p_at_1 = dev.p_at_1;
      log.dev_mrr = dev.mrr;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(log);
    if (tc.on_epoch) tc.on_epoch(log);
    if (log.dev_p_at_1 > result.best_dev_p_at_1 || data.dev.empty()) {
      result.best_dev_p_at_1 = log.dev_p_at_1;
      result.best_epoch = epoch;
      best = snapshot(params);
    }
    if (log.dev_p_at_1 >= tc.target_dev_p_at_1) break;
  }
  restore(params, best);
  return result;
}

#define GGSA_INSTANTIATE_TRAIN(T)                                                                              \
  template TrainResult train<T>(const ModelConfig&, EncoderParams<T>&, const TrainConfig&, const Dataset&);    \
  template std::vector<double> score_candidates<T>(const ModelConfig&, EncoderParams<T>&, const QAExample&,    \
                                                   Scoring);                                                   \
  template RankMetrics evaluate<T>(const ModelConfig&, EncoderParams<T>&, std::span<const QAExample>, Scoring);

GGSA_INSTANTIATE_TRAIN(float)
GGSA_INSTANTIATE_TRAIN(double)

}  // namespace ggsa
