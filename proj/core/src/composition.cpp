#include "ggsa/composition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace ggsa {

template <typename T>
Var<T> question_attention_weights(const EncodedSequence<T>& e, CompositionParams<T>& p, Var<T> context) {
  Tape<T>& tape = e.h.tape();
  const std::size_t length = e.h.value().cols();
  Var<T> hidden = tanh(add_col(matmul(tape.param(p.w_h), e.h), matmul(tape.param(p.w_q), context)));
  Var<T> scores = matmul_tn(hidden, reshape(tape.param(p.w), Shape{p.w.value.size(), 1}));  // L x 1
  AttentionMask mask(length, 1, false);
  for (std::size_t i = 0; i < length; ++i) mask.set(i, 0, e.valid[i]);
  return reshape(softmax_columns(scores, &mask), Shape{length});
}

template <typename T>
Var<T> compose(const EncodedSequence<T>& e, Composition kind, CompositionParams<T>& p,
               const std::type_identity_t<Var<T>>* context) {
  if (kind == Composition::kMaxPool) {
    if (context) throw ContractError("compose: max-pooling takes no question context");
    return max_pool_columns(e.h, e.valid);
  }
  if (e.role != Role::kAnswer) throw ContractError("compose: question attention applies to answers only");
  if (!context) throw ContractError("compose: question attention needs the composed question vector");
  return matmul(e.h, question_attention_weights(e, p, *context));
}

template <typename T>
Var<T> pairwise_hinge_loss(Var<T> q, Var<T> pos, Var<T> neg, T margin) {
  return relu(add_constant(sub(cosine(q, neg), cosine(q, pos)), margin));
}

template <typename T>
Var<T> scorer_logits(Var<T> q, Var<T> a, ScorerParams<T>& p) {
  Tape<T>& tape = q.tape();
  const std::array<Var<T>, 2> parts{q, a};
  Var<T> joint = concat_rows(std::span<const Var<T>>(parts));
  Var<T> hidden = tanh(add(matmul(tape.param(p.w1), joint), tape.param(p.b1)));
  return add(matmul(tape.param(p.w2), hidden), tape.param(p.b2));
}

template <typename T>
PointwiseOutput<T> pointwise_loss(Var<T> q, Var<T> a, bool positive, ScorerParams<T>& p) {
  Var<T> logits = scorer_logits(q, a, p);
  const Tensor<T>& z = logits.value();
  const T s = T{1} / (T{1} + std::exp(z[0] - z[1]));
  // Two-way softmax cross-entropy on the label equals binary cross-entropy on p1.
  return {softmax_cross_entropy(logits, positive ? 1 : 0), s};
}

double binary_cross_entropy(double s, bool positive) { return positive ? -std::log(s) : -std::log(1.0 - s); }

std::size_t best_positive_rank(std::span<const std::pair<double, bool>> candidates) {
  if (candidates.empty()) throw DataError("rank_metrics: question has no candidates");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].first > candidates[b].first; });
  for (std::size_t r = 0; r < order.size(); ++r)
    if (candidates[order[r]].second) return r + 1;
  throw DataError("rank_metrics: question has no positive candidate");
}

RankMetrics rank_metrics(const std::vector<std::vector<std::pair<double, bool>>>& questions) {
  if (questions.empty()) throw DataError("rank_metrics: no questions");
  RankMetrics m;
  for (const auto& q : questions) {
    const std::size_t rank = best_positive_rank(q);
    m.p_at_1 += rank == 1 ? 1.0 : 0.0;
    m.mrr += 1.0 / static_cast<double>(rank);
  }
  m.questions = questions.size();
  m.p_at_1 /= static_cast<double>(m.questions);
  m.mrr /= static_cast<double>(m.questions);
  return m;
}

#define GGSA_INSTANTIATE_COMPOSITION(T)                                                                        \
  template Var<T> compose<T>(const EncodedSequence<T>&, Composition, CompositionParams<T>&, const Var<T>*);    \
  template Var<T> question_attention_weights<T>(const EncodedSequence<T>&, CompositionParams<T>&, Var<T>);     \
  template Var<T> pairwise_hinge_loss<T>(Var<T>, Var<T>, Var<T>, T);                                           \
  template Var<T> scorer_logits<T>(Var<T>, Var<T>, ScorerParams<T>&);                                          \
  template PointwiseOutput<T> pointwise_loss<T>(Var<T>, Var<T>, bool, ScorerParams<T>&);

GGSA_INSTANTIATE_COMPOSITION(float)
GGSA_INSTANTIATE_COMPOSITION(double)

}  // namespace ggsa
