#pragma once

#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "ggsa/config.hpp"
#include "ggsa/encoder.hpp"

namespace ggsa {

inline constexpr double kDefaultMargin = 0.1;

// Reduces an encoded sequence to a D-vector. Max-pooling needs no context;
// question attention is answer-only and needs the composed question vector.
template <typename T>
Var<T> compose(const EncodedSequence<T>& e, Composition kind, CompositionParams<T>& p,
               const std::type_identity_t<Var<T>>* context);

// Position weights of question attention: softmax over valid i of
// w . tanh(Wh . h_i + Wq . v_q). Returns an L-vector; padding gets 0.
template <typename T>
Var<T> question_attention_weights(const EncodedSequence<T>& e, CompositionParams<T>& p, Var<T> context);

// max(0, margin - cos(q, a+) + cos(q, a-))
template <typename T>
Var<T> pairwise_hinge_loss(Var<T> q, Var<T> pos, Var<T> neg, T margin = T(kDefaultMargin));

// Two logits from W2 . tanh(W1 . [q; a] + b1) + b2.
template <typename T>
Var<T> scorer_logits(Var<T> q, Var<T> a, ScorerParams<T>& p);

template <typename T>
struct PointwiseOutput {
  Var<T> loss;  // -[y log s + (1 - y) log(1 - s)]
  T s;          // p1 of the softmax over the two logits
};

template <typename T>
PointwiseOutput<T> pointwise_loss(Var<T> q, Var<T> a, bool positive, ScorerParams<T>& p);

// Binary cross-entropy on a probability; the scalar reference for pointwise_loss.
double binary_cross_entropy(double s, bool positive);

struct RankMetrics {
  double p_at_1 = 0.0;
  double mrr = 0.0;
  std::size_t questions = 0;
};

// One (score, is_positive) list per question. Candidates are ordered by
// descending score with ties broken by lower candidate index. Both metrics use
// the best-ranked positive. A question without a positive raises DataError.
RankMetrics rank_metrics(const std::vector<std::vector<std::pair<double, bool>>>& questions);

// 1-based rank of the best positive under the same ordering.
std::size_t best_positive_rank(std::span<const std::pair<double, bool>> candidates);

}  // namespace ggsa
