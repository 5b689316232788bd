#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>

#include "ggsa/config.hpp"
#include "ggsa/params.hpp"
#include "ggsa/random.hpp"

namespace ggsa {

enum class Role { kQuestion, kAnswer };

template <typename T>
struct EncodedSequence {
  Var<T> h;  // D x L
  ValidMask valid;
  Role role = Role::kQuestion;
};

// Sinusoidal table, D x L. Feature j of position i is sin (even j) or cos
// (odd j) of i / 10000^(2*floor(j/2)/D), so each sin/cos pair shares a
// frequency.
template <typename T>
Tensor<T> positional_encoding(std::size_t length, std::size_t dim);

template <typename T>
struct Embedded {
  Var<T> x;  // D x pad_to
  ValidMask valid;
};

// Lookup, then inverted dropout at cfg.keep_prob when training, then the
// positional encoding. The sequence is right-padded to `pad_to`; padded
// columns stay zero. `rng` is only read when dropout is active.
template <typename T>
Embedded<T> embed(Tape<T>& tape, std::span<const std::int32_t> tokens, Parameter<T>& table, const ModelConfig& cfg,
                  std::size_t pad_to, bool training, Rng* rng);

template <typename T>
Var<T> feed_forward(Var<T> x, FeedForwardParams<T>& f);

template <typename T>
Var<T> apply_norm(Var<T> x, NormParams<T>& n);

// C = MultiHead(X); Y = LN1(X + C); H = LN2(Y + FFN(Y))
template <typename T>
Var<T> global_block_forward(Var<T> x, BlockParams<T>& p, const ModelConfig& cfg, const ValidMask& valid);

template <typename T>
struct GgsaBlockOutput {
  Var<T> y;  // LN1(X + C), the intermediate the answer interaction consumes
  Var<T> h;  // Y + FFN(Y)
};

// G from the global information gate (all ones when cfg.gate is off);
// C = GroupMultiHead(X (.) G); Y = LN1(X + C); H = Y + FFN(Y).
template <typename T>
GgsaBlockOutput<T> ggsa_block_forward(Var<T> x, BlockParams<T>& p, const ModelConfig& cfg, const ValidMask& valid);

// Question-aware answer path given the answer intermediate Y^a:
// c = mean(H^q); R~ = FFN_i(Y^a (.) c); Y~ = LN_i(Y^a + R~); H^a = Y~ + FFN(Y~)
template <typename T>
Var<T> iggsa_answer_forward(Var<T> y_answer, const EncodedSequence<T>& question, BlockParams<T>& p);

// Question path: N blocks of the configured variant (iGGSA questions use the
// plain GGSA block).
template <typename T>
EncodedSequence<T> encode_question(Tape<T>& tape, std::span<const std::int32_t> tokens, const ModelConfig& cfg,
                                   EncoderParams<T>& params, bool training, Rng* rng);

// Answer path; under iGGSA every block applies the interaction with the
// encoded question, which is then required.
template <typename T>
EncodedSequence<T> encode_answer(Tape<T>& tape, std::span<const std::int32_t> tokens, const ModelConfig& cfg,
                                 EncoderParams<T>& params, bool training, Rng* rng,
                                 const std::type_identity_t<EncodedSequence<T>>* question);

template <typename T>
std::pair<EncodedSequence<T>, EncodedSequence<T>> encode(Tape<T>& tape, std::span<const std::int32_t> question,
                                                         std::span<const std::int32_t> answer, const ModelConfig& cfg,
                                                         EncoderParams<T>& params, bool training, Rng* rng);

}  // namespace ggsa
