#include "ggsa/attention.hpp"

#include <cmath>
#include <string>

namespace ggsa {
namespace {

thread_local FlopTally* g_tally = nullptr;

void tally_core(std::uint64_t macs) {
  if (g_tally) g_tally->core += macs;
}

void tally_projection(std::uint64_t macs) {
  if (g_tally) g_tally->projection += macs;
}

template <typename T>
void check_params(const Var<T>& x, const AttentionParams<T>& p) {
  const std::size_t dim = p.dim();
  if (p.heads == 0 || dim % p.heads != 0)
    throw ConfigError("attention: dimension " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(p.heads) + " heads");
  if (x.value().rank() != 2 || x.value().rows() != dim)
    throw DimensionError("attention: input " + x.value().shape().str() + " does not have " + std::to_string(dim) +
                         " feature rows");
}

template <typename T>
struct Projected {
  Var<T> q, k, v;
};

template <typename T>
Projected<T> project(Var<T> x, AttentionParams<T>& p) {
  Tape<T>& tape = x.tape();
  const std::uint64_t d = p.dim(), len = x.value().cols();
  tally_projection(3 * d * d * len);
  return {matmul(tape.param(p.wq), x), matmul(tape.param(p.wk), x), matmul(tape.param(p.wv), x)};
}

template <typename T>
Var<T> output_projection(std::vector<Var<T>>& heads, AttentionParams<T>& p) {
  Tape<T>& tape = heads.front().tape();
  Var<T> concat = heads.size() == 1 ? heads.front() : concat_rows<T>(heads);
  const std::uint64_t d = p.dim(), len = concat.value().cols();
  tally_projection(d * d * len);
  return matmul(tape.param(p.wo), concat);
}

// Runs every head as full-length attention under its own mask.
template <typename T, typename MaskFor>
MultiHeadOutput<T> masked_heads(Var<T> x, AttentionParams<T>& p, MaskFor&& mask_for, T scale, EmptyColumns empty) {
  check_params(x, p);
  const std::size_t d = p.head_dim(), len = x.value().cols();
  Projected<T> qkv = project(x, p);
  MultiHeadOutput<T> out;
  std::vector<Var<T>> heads;
  for (std::size_t h = 0; h < p.heads; ++h) {
    const AttentionMask* mask = mask_for(h);
    AttentionOutput<T> a =
        scaled_dot_attention(slice(qkv.q, h * d, (h + 1) * d, 0, len), slice(qkv.k, h * d, (h + 1) * d, 0, len),
                             slice(qkv.v, h * d, (h + 1) * d, 0, len), scale, mask, empty);
    heads.push_back(a.output);
    out.head_weights.push_back(a.weights);
  }
  out.output = output_projection(heads, p);
  return out;
}

bool all_true(const ValidMask& valid) { return count_valid(valid) == valid.size(); }

AttentionMask key_mask(const ValidMask& valid) {
  AttentionMask m(valid.size(), valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i)
    for (std::size_t j = 0; j < valid.size(); ++j) m.set(i, j, valid[i]);
  return m;
}

}  // namespace

template <typename T>
AttentionParams<T> AttentionParams<T>::xavier(std::size_t dim, std::size_t heads, std::vector<std::size_t> offsets,
                                              Rng& rng, const std::string& prefix) {
  if (heads == 0 || dim % heads != 0)
    throw ConfigError("attention: " + std::to_string(heads) + " heads do not divide width " + std::to_string(dim));
  if (!offsets.empty() && offsets.size() != heads) throw ConfigError("attention: need one group offset per head");
  AttentionParams<T> p;
  p.wq = Parameter<T>(prefix + "wq", xavier_uniform<T>(dim, dim, rng));
  p.wk = Parameter<T>(prefix + "wk", xavier_uniform<T>(dim, dim, rng));
  p.wv = Parameter<T>(prefix + "wv", xavier_uniform<T>(dim, dim, rng));
  p.wo = Parameter<T>(prefix + "wo", xavier_uniform<T>(dim, dim, rng));
  p.heads = heads;
  p.offsets = offsets.empty() ? std::vector<std::size_t>(heads, 0) : std::move(offsets);
  return p;
}

template <typename T>
GateParams<T> GateParams<T>::xavier(std::size_t dim, Rng& rng, const std::string& prefix) {
  GateParams<T> g;
  g.w = Parameter<T>(prefix + "w", xavier_uniform<T>(dim, dim, rng));
  g.b = Parameter<T>(prefix + "b", Tensor<T>(Shape{dim}));
  return g;
}

std::size_t GroupLayout::group_of(std::size_t token) const {
  for (std::size_t g = 0; g < ranges.size(); ++g)
    if (token >= ranges[g].first && token < ranges[g].second) return g;
  throw DimensionError("group_of: token " + std::to_string(token) + " outside sequence of length " +
                       std::to_string(length));
}

GroupLayout group_layout(std::size_t length, std::size_t group_size, std::size_t offset) {
  if (length == 0) throw ConfigError("group_layout: sequence length must be positive");
  if (group_size == 0) throw ConfigError("group_layout: group size must be positive");
  if (offset >= group_size)
    throw ConfigError("group_layout: offset " + std::to_string(offset) + " must be below group size " +
                      std::to_string(group_size));
  GroupLayout layout{length, group_size, offset, {}};
  std::size_t start = 0;
  if (offset > 0) {
    layout.ranges.emplace_back(0, std::min(offset, length));
    start = offset;
  }
  for (; start < length; start += group_size) layout.ranges.emplace_back(start, std::min(start + group_size, length));
  return layout;
}

ScopedFlopTally::ScopedFlopTally(FlopTally& tally) : previous_(g_tally) { g_tally = &tally; }
ScopedFlopTally::~ScopedFlopTally() { g_tally = previous_; }
FlopTally* ScopedFlopTally::current() { return g_tally; }

double attention_scale(std::size_t dim, std::size_t heads, std::optional<double> override_scale) {
  if (override_scale) {
    if (!(*override_scale > 0)) throw ConfigError("attention scale must be positive");
    return *override_scale;
  }
  if (heads == 0 || dim % heads != 0) throw ConfigError("attention: dimension not divisible by head count");
  return std::sqrt(static_cast<double>(dim / heads));
}

template <typename T>
AttentionOutput<T> scaled_dot_attention(Var<T> q, Var<T> k, Var<T> v, T scale, const AttentionMask* mask,
                                        EmptyColumns empty) {
  if (!(scale > 0)) throw ConfigError("scaled_dot_attention: scale must be positive");
  const Shape& qs = q.value().shape();
  if (!(qs == k.value().shape()) || !(qs == v.value().shape()))
    throw DimensionError("scaled_dot_attention: Q " + qs.str() + ", K " + k.value().shape().str() + ", V " +
                         v.value().shape().str() + " disagree");
  const std::uint64_t d = q.value().rows(), len = q.value().cols();
  tally_core(2 * d * len * len);
  Var<T> weights = softmax_columns(matmul_tn(k, q, T{1} / scale), mask, empty);
  return {matmul(v, weights), weights};
}

template <typename T>
MultiHeadOutput<T> multi_head_attention(Var<T> x, AttentionParams<T>& p, const ValidMask& valid, T scale) {
  if (valid.size() != x.value().cols()) throw DimensionError("multi_head_attention: mask length mismatch");
  std::optional<AttentionMask> mask;
  if (!all_true(valid)) mask = key_mask(valid);
  const AttentionMask* m = mask ? &*mask : nullptr;
  return masked_heads(x, p, [m](std::size_t) { return m; }, scale, EmptyColumns::kError);
}

template <typename T>
Var<T> group_multi_head_attention(Var<T> x, AttentionParams<T>& p, std::size_t group_size, const ValidMask& valid,
                                  T scale) {
  check_params(x, p);
  const std::size_t d = p.head_dim(), len = x.value().cols();
  if (valid.size() != len) throw DimensionError("group_multi_head_attention: mask length mismatch");
  if (p.offsets.size() != p.heads) throw ConfigError("group_multi_head_attention: need one offset per head");
  Tape<T>& tape = x.tape();
  Projected<T> qkv = project(x, p);

  std::vector<Var<T>> heads;
  for (std::size_t h = 0; h < p.heads; ++h) {
    const GroupLayout layout = group_layout(len, group_size, p.offsets[h]);
    std::vector<Var<T>> groups;
    for (auto [begin, end] : layout.ranges) {
      const std::size_t size = end - begin;
      ValidMask inside(valid.begin() + static_cast<std::ptrdiff_t>(begin),
                       valid.begin() + static_cast<std::ptrdiff_t>(end));
      const std::size_t n_valid = count_valid(inside);
      if (n_valid == 0) {
        groups.push_back(tape.constant(Tensor<T>(Shape{d, size})));
        continue;
      }
      std::optional<AttentionMask> mask;
      if (n_valid != size) mask = key_mask(inside);
      const std::size_t r0 = h * d, r1 = (h + 1) * d;
      AttentionOutput<T> a = scaled_dot_attention(slice(qkv.q, r0, r1, begin, end), slice(qkv.k, r0, r1, begin, end),
                                                  slice(qkv.v, r0, r1, begin, end), scale,
                                                  mask ? &*mask : nullptr);
      groups.push_back(a.output);
    }
    heads.push_back(groups.size() == 1 ? groups.front() : concat_cols<T>(groups));
  }
  return output_projection(heads, p);
}

template <typename T>
MultiHeadOutput<T> group_multi_head_attention_masked(Var<T> x, AttentionParams<T>& p, std::size_t group_size,
                                                     const ValidMask& valid, T scale) {
  const std::size_t len = x.value().cols();
  if (valid.size() != len) throw DimensionError("group_multi_head_attention_masked: mask length mismatch");
  if (p.offsets.size() != p.heads) throw ConfigError("group_multi_head_attention_masked: need one offset per head");
  std::vector<AttentionMask> masks;
  for (std::size_t h = 0; h < p.heads; ++h) {
    const GroupLayout layout = group_layout(len, group_size, p.offsets[h]);
    AttentionMask m(len, len);
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; j < len; ++j) m.set(i, j, valid[i] && layout.same_group(i, j));
    masks.push_back(std::move(m));
  }
  return masked_heads(x, p, [&masks](std::size_t h) { return &masks[h]; }, scale, EmptyColumns::kZero);
}

template <typename T>
MultiHeadOutput<T> local_window_attention(Var<T> x, AttentionParams<T>& p, std::size_t window, const ValidMask& valid,
                                          T scale) {
  if (window == 0 || window % 2 == 0)
    throw ConfigError("local_window_attention: window must be a positive odd number, got " + std::to_string(window));
  const std::size_t len = x.value().cols();
  if (valid.size() != len) throw DimensionError("local_window_attention: mask length mismatch");
  const std::size_t half = (window - 1) / 2;
  AttentionMask m(len, len, false);
  for (std::size_t j = 0; j < len; ++j) {
    const std::size_t lo = j >= half ? j - half : 0;
    const std::size_t hi = std::min(len, j + half + 1);
    for (std::size_t i = lo; i < hi; ++i) m.set(i, j, valid[i]);
  }
  return masked_heads(x, p, [&m](std::size_t) { return &m; }, scale, EmptyColumns::kZero);
}

template <typename T>
GateOutput<T> global_info_gate(Var<T> x, GateParams<T>& g, const ValidMask& valid) {
  Tape<T>& tape = x.tape();
  Var<T> mean = mean_pool_columns(x, valid);
  Var<T> mixed = broadcast_col(mean, x);
  Var<T> gate = sigmoid(add_col(matmul(tape.param(g.w), mixed), tape.param(g.b)));
  return {hadamard(x, gate), gate};
}

#define GGSA_INSTANTIATE_ATTENTION(T)                                                                            \
  template struct AttentionParams<T>;                                                                            \
  template struct GateParams<T>;                                                                                 \
  template AttentionOutput<T> scaled_dot_attention<T>(Var<T>, Var<T>, Var<T>, T, const AttentionMask*,           \
                                                      EmptyColumns);                                             \
  template MultiHeadOutput<T> multi_head_attention<T>(Var<T>, AttentionParams<T>&, const ValidMask&, T);         \
  template Var<T> group_multi_head_attention<T>(Var<T>, AttentionParams<T>&, std::size_t, const ValidMask&, T);  \
  template MultiHeadOutput<T> group_multi_head_attention_masked<T>(Var<T>, AttentionParams<T>&, std::size_t,     \
                                                                   const ValidMask&, T);                         \
  template MultiHeadOutput<T> local_window_attention<T>(Var<T>, AttentionParams<T>&, std::size_t,                \
                                                        const ValidMask&, T);                                    \
  template GateOutput<T> global_info_gate<T>(Var<T>, GateParams<T>&, const ValidMask&);

GGSA_INSTANTIATE_ATTENTION(float)
GGSA_INSTANTIATE_ATTENTION(double)

}  // namespace ggsa
