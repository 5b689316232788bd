#include "ggsa/params.hpp"

namespace ggsa {

template <typename T>
FeedForwardParams<T> FeedForwardParams<T>::xavier(std::size_t dim, std::size_t hidden, Rng& rng,
                                                  const std::string& prefix) {
  FeedForwardParams<T> f;
  f.w1 = Parameter<T>(prefix + "w1", xavier_uniform<T>(hidden, dim, rng));
  f.b1 = Parameter<T>(prefix + "b1", Tensor<T>(Shape{hidden}));
  f.w2 = Parameter<T>(prefix + "w2", xavier_uniform<T>(dim, hidden, rng));
  f.b2 = Parameter<T>(prefix + "b2", Tensor<T>(Shape{dim}));
  return f;
}

template <typename T>
NormParams<T> NormParams<T>::identity(std::size_t dim, const std::string& prefix) {
  return {Parameter<T>(prefix + "gain", Tensor<T>(Shape{dim}, T{1})), Parameter<T>(prefix + "bias", Tensor<T>(Shape{dim}))};
}

template <typename T>
EncoderParams<T> EncoderParams<T>::init(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t d = cfg.embed_dim;
  EncoderParams<T> p;
  p.embedding = Parameter<T>("embedding", xavier_uniform<T>(d, cfg.vocab_size, rng));
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    BlockParams<T> block;
    block.attention = AttentionParams<T>::xavier(d, cfg.heads, cfg.resolved_offsets(), rng, prefix + "attention.");
    block.gate = GateParams<T>::xavier(d, rng, prefix + "gate.");
    block.ffn = FeedForwardParams<T>::xavier(d, cfg.resolved_ffn_width(), rng, prefix + "ffn.");
    block.norm1 = NormParams<T>::identity(d, prefix + "norm1.");
    block.norm2 = NormParams<T>::identity(d, prefix + "norm2.");
    block.interaction = FeedForwardParams<T>::xavier(d, cfg.resolved_ffn_width(), rng, prefix + "interaction.");
    block.interaction_norm = NormParams<T>::identity(d, prefix + "interaction_norm.");
    p.blocks.push_back(std::move(block));
  }
  const std::size_t a = cfg.resolved_attention_width();
  const double wb = std::sqrt(6.0 / static_cast<double>(a + 1));
  p.composition.w = Parameter<T>("composition.w", uniform_tensor<T>(Shape{a}, -wb, wb, rng));
  p.composition.w_h = Parameter<T>("composition.w_h", xavier_uniform<T>(a, d, rng));
  p.composition.w_q = Parameter<T>("composition.w_q", xavier_uniform<T>(a, d, rng));
  const std::size_t s = cfg.resolved_scorer_width();
  p.scorer.w1 = Parameter<T>("scorer.w1", xavier_uniform<T>(s, 2 * d, rng));
  p.scorer.b1 = Parameter<T>("scorer.b1", Tensor<T>(Shape{s}));
  p.scorer.w2 = Parameter<T>("scorer.w2", xavier_uniform<T>(2, s, rng));
  p.scorer.b2 = Parameter<T>("scorer.b2", Tensor<T>(Shape{2}));
  return p;
}

template <typename T>
std::vector<Parameter<T>*> EncoderParams<T>::all() {
  std::vector<Parameter<T>*> out{&embedding};
  for (BlockParams<T>& b : blocks) {
    for (Parameter<T>* p : {&b.attention.wq, &b.attention.wk, &b.attention.wv, &b.attention.wo, &b.gate.w, &b.gate.b,
                            &b.ffn.w1, &b.ffn.b1, &b.ffn.w2, &b.ffn.b2, &b.norm1.gain, &b.norm1.bias, &b.norm2.gain,
                            &b.norm2.bias, &b.interaction.w1, &b.interaction.b1, &b.interaction.w2,
                            &b.interaction.b2, &b.interaction_norm.gain, &b.interaction_norm.bias})
      out.push_back(p);
  }
  for (Parameter<T>* p : {&composition.w, &composition.w_h, &composition.w_q, &scorer.w1, &scorer.b1, &scorer.w2,
                          &scorer.b2})
    out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> EncoderParams<T>::all() const {
  auto mut = const_cast<EncoderParams<T>*>(this)->all();
  return {mut.begin(), mut.end()};
}

template <typename T>
void EncoderParams<T>::zero_grad() {
  for (Parameter<T>* p : all()) p->zero_grad();
}

template struct FeedForwardParams<float>;
template struct FeedForwardParams<double>;
template struct NormParams<float>;
template struct NormParams<double>;
template struct EncoderParams<float>;
template struct EncoderParams<double>;

}  // namespace ggsa
