#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "ggsa/tape.hpp"
#include "ggsa/tensor.hpp"

// Differentiable kernels. Every function evaluates its forward value eagerly
// and records the matching backward rule on the inputs' tape. Matrices follow
// the D x L column-per-token layout; rank-1 tensors act as column vectors.
namespace ggsa {

inline constexpr double kLayerNormEps = 1e-6;
inline constexpr double kMaskedLogit = -1e9;
inline constexpr double kCosineEps = 1e-12;

// a[p x q] . b[q x r]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// alpha * a^T . b, for a[q x p], b[q x r]
template <typename T>
Var<T> matmul_tn(Var<T> a, Var<T> b, T alpha = T{1});

template <typename T>
Var<T> transpose(Var<T> a);

template <typename T>
Var<T> reshape(Var<T> a, Shape shape);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> sub(Var<T> a, Var<T> b);

template <typename T>
Var<T> hadamard(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T factor);

template <typename T>
Var<T> add_constant(Var<T> a, T c);

template <typename T>
Var<T> sigmoid(Var<T> a);

template <typename T>
Var<T> relu(Var<T> a);

template <typename T>
Var<T> tanh(Var<T> a);

// x[D x L] with every column multiplied element-wise by c[D].
template <typename T>
Var<T> broadcast_col(Var<T> c, Var<T> x);

// x[D x L] with b[D] added to every column.
template <typename T>
Var<T> add_col(Var<T> x, Var<T> b);

enum class EmptyColumns { kError, kZero };

// Column-wise softmax. Disallowed entries get an additive kMaskedLogit before
// exponentiation and are written as exact zeros. A column with no allowed
// entry raises DegenerateMaskError, or becomes all zeros under kZero.
template <typename T>
Var<T> softmax_columns(Var<T> a, const AttentionMask* mask = nullptr,
                       EmptyColumns empty = EmptyColumns::kError);

// Per-column normalisation over the feature axis, then gain/bias.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = T(kLayerNormEps));

// Mean / maximum over the valid columns of x[D x L]; returns a D-vector.
template <typename T>
Var<T> mean_pool_columns(Var<T> x, const ValidMask& valid);

template <typename T>
Var<T> max_pool_columns(Var<T> x, const ValidMask& valid);

// Rectangular block [r0, r1) x [c0, c1).
template <typename T>
Var<T> slice(Var<T> x, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);

template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t r0, std::size_t r1) {
  return slice(x, r0, r1, 0, x.value().cols());
}

// Stack along rows; all-vector inputs give a vector.
template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts);

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts);

template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> dot(Var<T> u, Var<T> v);

// u.v / (|u||v|); exactly 0 with zero gradient when |u||v| < kCosineEps.
template <typename T>
Var<T> cosine(Var<T> u, Var<T> v);

// -log softmax(logits)[label] for a rank-1 logit vector.
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::size_t label);

// Column j = table[:, ids[j]] for valid j, zeros for padding. Ids of padded
// positions are ignored.
template <typename T>
Var<T> gather_columns(Var<T> table, std::span<const std::int32_t> ids, const ValidMask& valid);

}  // namespace ggsa
