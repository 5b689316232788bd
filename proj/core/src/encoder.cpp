#include "ggsa/encoder.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ggsa {

template <typename T>
Tensor<T> positional_encoding(std::size_t length, std::size_t dim) {
  Tensor<T> pe(Shape{dim, length});
  for (std::size_t j = 0; j < dim; ++j) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * (j / 2)) / static_cast<double>(dim));
    for (std::size_t i = 0; i < length; ++i) {
      const double angle = static_cast<double>(i) / freq;
      pe(j, i) = static_cast<T>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Embedded<T> embed(Tape<T>& tape, std::span<const std::int32_t> tokens, Parameter<T>& table, const ModelConfig& cfg,
                  std::size_t pad_to, bool training, Rng* rng) {
  if (tokens.size() > pad_to)
    throw InputError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds maximum length " +
                     std::to_string(pad_to));
  const std::size_t dim = table.value.rows();
  std::vector<std::int32_t> ids(pad_to, 0);
  ValidMask valid(pad_to, false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ids[i] = tokens[i];
    valid[i] = true;
  }
  Var<T> x = gather_columns(tape.param(table), std::span<const std::int32_t>(ids), valid);

  if (training && cfg.keep_prob < 1.0) {
    if (!rng) throw ContractError("embed: dropout needs a random engine");
    Tensor<T> keep(Shape{dim, pad_to});
    const T kept = static_cast<T>(1.0 / cfg.keep_prob);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = uniform01(*rng) < cfg.keep_prob ? kept : T{0};
    x = hadamard(x, tape.constant(std::move(keep)));
  }

  Tensor<T> pe = positional_encoding<T>(pad_to, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < pad_to; ++c)
      if (!valid[c]) pe(r, c) = T{0};
  return {add(x, tape.constant(std::move(pe))), std::move(valid)};
}

template <typename T>
Var<T> feed_forward(Var<T> x, FeedForwardParams<T>& f) {
  Tape<T>& tape = x.tape();
  Var<T> hidden = relu(add_col(matmul(tape.param(f.w1), x), tape.param(f.b1)));
  return add_col(matmul(tape.param(f.w2), hidden), tape.param(f.b2));
}

template <typename T>
Var<T> apply_norm(Var<T> x, NormParams<T>& n) {
  Tape<T>& tape = x.tape();
  return layer_norm(x, tape.param(n.gain), tape.param(n.bias));
}

template <typename T>
Var<T> global_block_forward(Var<T> x, BlockParams<T>& p, const ModelConfig& cfg, const ValidMask& valid) {
  const T scale = static_cast<T>(attention_scale(cfg.embed_dim, cfg.heads, cfg.scale));
  Var<T> c = multi_head_attention(x, p.attention, valid, scale).output;
  Var<T> y = apply_norm(add(x, c), p.norm1);
  Var<T> r = feed_forward(y, p.ffn);
  return apply_norm(add(y, r), p.norm2);
}

template <typename T>
GgsaBlockOutput<T> ggsa_block_forward(Var<T> x, BlockParams<T>& p, const ModelConfig& cfg, const ValidMask& valid) {
  const T scale = static_cast<T>(attention_scale(cfg.embed_dim, cfg.heads, cfg.scale));
  Var<T> gated = cfg.gate ? global_info_gate(x, p.gate, valid).gated : x;
  Var<T> c = group_multi_head_attention(gated, p.attention, cfg.group_size, valid, scale);
  Var<T> y = apply_norm(add(x, c), p.norm1);
  Var<T> r = feed_forward(y, p.ffn);
  return {y, add(y, r)};
}

template <typename T>
Var<T> iggsa_answer_forward(Var<T> y_answer, const EncodedSequence<T>& question, BlockParams<T>& p) {
  Var<T> context = mean_pool_columns(question.h, question.valid);
  Var<T> residual = feed_forward(broadcast_col(context, y_answer), p.interaction);
  Var<T> y_tilde = apply_norm(add(y_answer, residual), p.interaction_norm);
  return add(y_tilde, feed_forward(y_tilde, p.ffn));
}

template <typename T>
EncodedSequence<T> encode_question(Tape<T>& tape, std::span<const std::int32_t> tokens, const ModelConfig& cfg,
                                   EncoderParams<T>& params, bool training, Rng* rng) {
  Embedded<T> e = embed(tape, tokens, params.embedding, cfg, cfg.max_question_len, training, rng);
  Var<T> h = e.x;
  for (BlockParams<T>& block : params.blocks)
    h = cfg.variant == Variant::kGlobal ? global_block_forward(h, block, cfg, e.valid)
                                        : ggsa_block_forward(h, block, cfg, e.valid).h;
  return {h, std::move(e.valid), Role::kQuestion};
}

template <typename T>
EncodedSequence<T> encode_answer(Tape<T>& tape, std::span<const std::int32_t> tokens, const ModelConfig& cfg,
                                 EncoderParams<T>& params, bool training, Rng* rng,
                                 const std::type_identity_t<EncodedSequence<T>>* question) {
  if (cfg.variant == Variant::kIggsa && !question)
    throw ContractError("encode_answer: the iGGSA answer path needs the encoded question");
  Embedded<T> e = embed(tape, tokens, params.embedding, cfg, cfg.max_answer_len, training, rng);
  Var<T> h = e.x;
  for (BlockParams<T>& block : params.blocks) {
    switch (cfg.variant) {
      case Variant::kGlobal: h = global_block_forward(h, block, cfg, e.valid); break;
      case Variant::kGgsa: h = ggsa_block_forward(h, block, cfg, e.valid).h; break;
      case Variant::kIggsa: h = iggsa_answer_forward(ggsa_block_forward(h, block, cfg, e.valid).y, *question, block); break;
    }
  }
  return {h, std::move(e.valid), Role::kAnswer};
}

template <typename T>
std::pair<EncodedSequence<T>, EncodedSequence<T>> encode(Tape<T>& tape, std::span<const std::int32_t> question,
                                                         std::span<const std::int32_t> answer, const ModelConfig& cfg,
                                                         EncoderParams<T>& params, bool training, Rng* rng) {
  EncodedSequence<T> q = encode_question(tape, question, cfg, params, training, rng);
  EncodedSequence<T> a = encode_answer(tape, answer, cfg, params, training, rng, &q);
  return {std::move(q), std::move(a)};
}

#define GGSA_INSTANTIATE_ENCODER(T)                                                                               \
  template Tensor<T> positional_encoding<T>(std::size_t, std::size_t);                                            \
  template Embedded<T> embed<T>(Tape<T>&, std::span<const std::int32_t>, Parameter<T>&, const ModelConfig&,       \
                                std::size_t, bool, Rng*);                                                         \
  template Var<T> feed_forward<T>(Var<T>, FeedForwardParams<T>&);                                                 \
  template Var<T> apply_norm<T>(Var<T>, NormParams<T>&);                                                          \
  template Var<T> global_block_forward<T>(Var<T>, BlockParams<T>&, const ModelConfig&, const ValidMask&);         \
  template GgsaBlockOutput<T> ggsa_block_forward<T>(Var<T>, BlockParams<T>&, const ModelConfig&,                  \
                                                    const ValidMask&);                                            \
  template Var<T> iggsa_answer_forward<T>(Var<T>, const EncodedSequence<T>&, BlockParams<T>&);                    \
  template EncodedSequence<T> encode_question<T>(Tape<T>&, std::span<const std::int32_t>, const ModelConfig&,     \
                                                 EncoderParams<T>&, bool, Rng*);                                  \
  template EncodedSequence<T> encode_answer<T>(Tape<T>&, std::span<const std::int32_t>, const ModelConfig&,       \
                                               EncoderParams<T>&, bool, Rng*, const EncodedSequence<T>*);         \
  template std::pair<EncodedSequence<T>, EncodedSequence<T>> encode<T>(                                           \
      Tape<T>&, std::span<const std::int32_t>, std::span<const std::int32_t>, const ModelConfig&,                 \
      EncoderParams<T>&, bool, Rng*);

GGSA_INSTANTIATE_ENCODER(float)
GGSA_INSTANTIATE_ENCODER(double)

}  // namespace ggsa
