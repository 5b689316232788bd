#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ggsa/attention.hpp"
#include "ggsa/config.hpp"
#include "ggsa/random.hpp"
#include "ggsa/tape.hpp"

namespace ggsa {

// Two-layer position-wise network: W2 . relu(W1 . x + b1) + b2.
template <typename T>
struct FeedForwardParams {
  Parameter<T> w1, b1, w2, b2;

  static FeedForwardParams xavier(std::size_t dim, std::size_t hidden, Rng& rng, const std::string& prefix);
};

template <typename T>
struct NormParams {
  Parameter<T> gain, bias;

  static NormParams identity(std::size_t dim, const std::string& prefix);
};

template <typename T>
struct BlockParams {
  AttentionParams<T> attention;
  GateParams<T> gate;
  FeedForwardParams<T> ffn;
  NormParams<T> norm1;
  NormParams<T> norm2;  // final norm of the global block only
  FeedForwardParams<T> interaction;
  NormParams<T> interaction_norm;
};

// Additive question-guided attention over answer positions:
// score_i = w . tanh(Wh . h_i + Wq . v_q)
template <typename T>
struct CompositionParams {
  Parameter<T> w;    // A
  Parameter<T> w_h;  // A x D
  Parameter<T> w_q;  // A x D
};

// MLP over [v_q; v_a] producing two logits.
template <typename T>
struct ScorerParams {
  Parameter<T> w1, b1;  // S x 2D, S
  Parameter<T> w2, b2;  // 2 x S, 2
};

// Every learnable array of a question/answer encoder stack plus the
// composition and scoring heads. Question and answer share the stack.
template <typename T>
struct EncoderParams {
  Parameter<T> embedding;  // D x V
  std::vector<BlockParams<T>> blocks;
  CompositionParams<T> composition;
  ScorerParams<T> scorer;

  // Glorot-uniform weights, zero biases, unit norm gains; draws come from
  // cfg.seed in a fixed order.
  static EncoderParams init(const ModelConfig& cfg);

  // Stable order; names are unique.
  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;

  void zero_grad();
};

}  // namespace ggsa
