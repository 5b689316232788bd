#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggsa/ops.hpp"
#include "ggsa/random.hpp"
#include "ggsa/tape.hpp"

namespace ggsa {

template <typename T>
struct AttentionParams {
  Parameter<T> wq, wk, wv, wo;
  std::size_t heads = 1;
  // Group-boundary shift for each head; only the group kernels read it.
  std::vector<std::size_t> offsets;

  std::size_t dim() const { return wq.value.rows(); }
  std::size_t head_dim() const { return dim() / heads; }

  static AttentionParams xavier(std::size_t dim, std::size_t heads, std::vector<std::size_t> offsets, Rng& rng,
                                const std::string& prefix);
};

template <typename T>
struct GateParams {
  Parameter<T> w;  // D x D
  Parameter<T> b;  // D

  static GateParams xavier(std::size_t dim, Rng& rng, const std::string& prefix);
};

// Partition of [0, length) into consecutive half-open ranges. With offset o > 0
// the first range is the short prefix [0, o); interior ranges have exactly
// group_size tokens and the trailing one may be shorter.
struct GroupLayout {
  std::size_t length = 0;
  std::size_t group_size = 0;
  std::size_t offset = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  std::size_t group_of(std::size_t token) const;
  bool same_group(std::size_t a, std::size_t b) const { return group_of(a) == group_of(b); }
};

GroupLayout group_layout(std::size_t length, std::size_t group_size, std::size_t offset);

// Multiply-add counts of the attention core (Q^T.K and V.weights) and of the
// four D x D projections. Kernels add to the tally installed on the current
// thread by ScopedFlopTally.
struct FlopTally {
  std::uint64_t core = 0;
  std::uint64_t projection = 0;
};

class ScopedFlopTally {
 public:
  explicit ScopedFlopTally(FlopTally& tally);
  ~ScopedFlopTally();
  ScopedFlopTally(const ScopedFlopTally&) = delete;
  ScopedFlopTally& operator=(const ScopedFlopTally&) = delete;

  static FlopTally* current();

 private:
  FlopTally* previous_;
};

// sqrt(D / n) unless overridden.
double attention_scale(std::size_t dim, std::size_t heads, std::optional<double> override_scale = std::nullopt);

template <typename T>
struct AttentionOutput {
  Var<T> output;   // d x L
  Var<T> weights;  // L x L; column j holds the weights output j puts on each position
};

// weights = softmax_columns(Q^T.K / scale, mask); output = V . weights
template <typename T>
AttentionOutput<T> scaled_dot_attention(Var<T> q, Var<T> k, Var<T> v, T scale, const AttentionMask* mask = nullptr,
                                        EmptyColumns empty = EmptyColumns::kError);

template <typename T>
struct MultiHeadOutput {
  Var<T> output;                     // D x L after Wo
  std::vector<Var<T>> head_weights;  // one L x L matrix per head
};

// Global multi-head attention; padded positions are masked out as keys.
template <typename T>
MultiHeadOutput<T> multi_head_attention(Var<T> x, AttentionParams<T>& p, const ValidMask& valid, T scale);

// Group multi-head attention computed with one dense kernel per (head, group).
// Each head partitions the sequence with its own offset. A group holding only
// padding yields zero columns.
template <typename T>
Var<T> group_multi_head_attention(Var<T> x, AttentionParams<T>& p, std::size_t group_size, const ValidMask& valid,
                                  T scale);

// Same function as group_multi_head_attention, evaluated as full L x L
// attention under a block-diagonal mask. Used to cross-check the dense path
// and to inspect the per-head weights.
template <typename T>
MultiHeadOutput<T> group_multi_head_attention_masked(Var<T> x, AttentionParams<T>& p, std::size_t group_size,
                                                     const ValidMask& valid, T scale);

// Sliding-window attention by direct masking: position j sees
// [j - (w-1)/2, j + (w-1)/2] clipped to the sequence. Window must be odd.
template <typename T>
MultiHeadOutput<T> local_window_attention(Var<T> x, AttentionParams<T>& p, std::size_t window, const ValidMask& valid,
                                          T scale);

template <typename T>
struct GateOutput {
  Var<T> gated;  // X (.) G
  Var<T> gate;   // G, every entry in (0, 1)
};

// x_bar = mean of valid columns; g_i = sigmoid(W.(x_i (.) x_bar) + b).
template <typename T>
GateOutput<T> global_info_gate(Var<T> x, GateParams<T>& g, const ValidMask& valid);

}  // namespace ggsa
