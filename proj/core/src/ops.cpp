#include "ggsa/ops.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gemm.hpp"

namespace ggsa {
namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!(a.shape() == b.shape()))
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() > 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + a.shape().str());
}

template <typename T>
void accumulate(Tensor<T>* sink, const Tensor<T>& g) {
  if (!sink) return;
  T* d = sink->data().data();
  const T* s = g.data().data();
  for (std::size_t i = 0, n = g.size(); i < n; ++i) d[i] += s[i];
}

template <typename T>
const T* ptr(const Tensor<T>& t) {
  return t.data().data();
}

template <typename T>
T* ptr(Tensor<T>& t) {
  return t.data().data();
}

template <typename T>
Var<T> unary(Var<T> a, Tensor<T> out, std::function<T(T x, T y)> derivative) {
  Tape<T>& tape = a.tape();
  return tape.record(std::move(out), {a},
                     [ia = a.id(), self = tape.size(), derivative](Tape<T>& t, const Tensor<T>& g) {
                       Tensor<T>* ga = t.grad_sink(ia);
                       if (!ga) return;
                       const Tensor<T>& x = t.value(ia);
                       const Tensor<T>& y = t.value(self);
                       for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * derivative(x[i], y[i]);
                     });
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  if (A.cols() != B.rows())
    throw DimensionError("matmul: inner extents differ for " + A.shape().str() + " . " + B.shape().str());
  const std::size_t p = A.rows(), q = A.cols(), r = B.cols();
  Tensor<T> C(B.rank() == 1 ? Shape{p} : Shape{p, r});
  gemm_nn(p, q, r, T{1}, ptr(A), ptr(B), ptr(C));
  return a.tape().record(std::move(C), {a, b},
                         [ia = a.id(), ib = b.id(), p, q, r](Tape<T>& t, const Tensor<T>& g) {
                           if (Tensor<T>* ga = t.grad_sink(ia))
                             gemm_nt(p, r, q, T{1}, ptr(g), ptr(t.value(ib)), ptr(*ga));
                           if (Tensor<T>* gb = t.grad_sink(ib))
                             gemm_tn(q, p, r, T{1}, ptr(t.value(ia)), ptr(g), ptr(*gb));
                         });
}

template <typename T>
Var<T> matmul_tn(Var<T> a, Var<T> b, T alpha) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  require_matrix(A, "matmul_tn");
  require_matrix(B, "matmul_tn");
  if (A.rows() != B.rows())
    throw DimensionError("matmul_tn: inner extents differ for " + A.shape().str() + "^T . " +
                         B.shape().str());
  const std::size_t q = A.rows(), p = A.cols(), r = B.cols();
  Tensor<T> C(Shape{p, r});
  gemm_tn(p, q, r, alpha, ptr(A), ptr(B), ptr(C));
  return a.tape().record(std::move(C), {a, b},
                         [ia = a.id(), ib = b.id(), p, q, r, alpha](Tape<T>& t, const Tensor<T>& g) {
                           // dA[q x p] = alpha * B . g^T ; dB[q x r] = alpha * A . g
                           if (Tensor<T>* ga = t.grad_sink(ia))
                             gemm_nt(q, r, p, alpha, ptr(t.value(ib)), ptr(g), ptr(*ga));
                           if (Tensor<T>* gb = t.grad_sink(ib))
                             gemm_nn(q, p, r, alpha, ptr(t.value(ia)), ptr(g), ptr(*gb));
                         });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  const Tensor<T>& A = a.value();
  require_matrix(A, "transpose");
  const std::size_t rows = A.rows(), cols = A.cols();
  Tensor<T> out(Shape{cols, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(j, i) = A(i, j);
  return a.tape().record(std::move(out), {a}, [ia = a.id(), rows, cols](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) (*ga)[i * cols + j] += g(j, i);
  });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  const Tensor<T>& A = a.value();
  if (shape.size() != A.size())
    throw DimensionError("reshape: cannot view " + A.shape().str() + " as " + shape.str());
  Tensor<T> out(shape, std::vector<T>(A.data().begin(), A.data().end()));
  return a.tape().record(std::move(out), {a}, [ia = a.id()](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  require_same_shape(A, B, "add");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
  return a.tape().record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape<T>& t, const Tensor<T>& g) {
    accumulate(t.grad_sink(ia), g);
    accumulate(t.grad_sink(ib), g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  require_same_shape(A, B, "sub");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
  return a.tape().record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape<T>& t, const Tensor<T>& g) {
    accumulate(t.grad_sink(ia), g);
    if (Tensor<T>* gb = t.grad_sink(ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

template <typename T>
Var<T> hadamard(Var<T> a, Var<T> b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  require_same_shape(A, B, "hadamard");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  return a.tape().record(std::move(out), {a, b}, [ia = a.id(), ib = b.id()](Tape<T>& t, const Tensor<T>& g) {
    if (Tensor<T>* ga = t.grad_sink(ia)) {
      const Tensor<T>& B = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B[i];
    }
    if (Tensor<T>* gb = t.grad_sink(ib)) {
      const Tensor<T>& A = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  const Tensor<T>& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * factor;
  return a.tape().record(std::move(out), {a}, [ia = a.id(), factor](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> add_constant(Var<T> a, T c) {
  const Tensor<T>& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + c;
  return a.tape().record(std::move(out), {a}, [ia = a.id()](Tape<T>& t, const Tensor<T>& g) {
    accumulate(t.grad_sink(ia), g);
  });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  const Tensor<T>& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    const T x = A[i];
    // Branches keep exp() from overflowing for large |x|.
    out[i] = x >= 0 ? T{1} / (T{1} + std::exp(-x)) : std::exp(x) / (T{1} + std::exp(x));
  }
  return unary<T>(a, std::move(out), [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> relu(Var<T> a) {
  const Tensor<T>& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] > 0 ? A[i] : T{0};
  return unary<T>(a, std::move(out), [](T x, T) { return x > 0 ? T{1} : T{0}; });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  const Tensor<T>& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::tanh(A[i]);
  return unary<T>(a, std::move(out), [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> broadcast_col(Var<T> c, Var<T> x) {
  const Tensor<T>& C = c.value();
  const Tensor<T>& X = x.value();
  require_matrix(X, "broadcast_col");
  if (C.rank() != 1 || C.size() != X.rows())
    throw DimensionError("broadcast_col: vector " + C.shape().str() + " does not match rows of " +
                         X.shape().str());
  const std::size_t rows = X.rows(), cols = X.cols();
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = X(i, j) * C[i];
  return c.tape().record(std::move(out), {c, x},
                         [ic = c.id(), ix = x.id(), rows, cols](Tape<T>& t, const Tensor<T>& g) {
                           const Tensor<T>& C = t.value(ic);
                           const Tensor<T>& X = t.value(ix);
                           if (Tensor<T>* gc = t.grad_sink(ic))
                             for (std::size_t i = 0; i < rows; ++i)
                               for (std::size_t j = 0; j < cols; ++j) (*gc)[i] += g(i, j) * X(i, j);
                           if (Tensor<T>* gx = t.grad_sink(ix))
                             for (std::size_t i = 0; i < rows; ++i)
                               for (std::size_t j = 0; j < cols; ++j) (*gx)(i, j) += g(i, j) * C[i];
                         });
}

template <typename T>
Var<T> add_col(Var<T> x, Var<T> b) {
  const Tensor<T>& X = x.value();
  const Tensor<T>& B = b.value();
  require_matrix(X, "add_col");
  if (B.rank() != 1 || B.size() != X.rows())
    throw DimensionError("add_col: bias " + B.shape().str() + " does not match rows of " + X.shape().str());
  const std::size_t rows = X.rows(), cols = X.cols();
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = X(i, j) + B[i];
  return x.tape().record(std::move(out), {x, b},
                         [ix = x.id(), ib = b.id(), rows, cols](Tape<T>& t, const Tensor<T>& g) {
                           accumulate(t.grad_sink(ix), g);
                           if (Tensor<T>* gb = t.grad_sink(ib))
                             for (std::size_t i = 0; i < rows; ++i)
                               for (std::size_t j = 0; j < cols; ++j) (*gb)[i] += g(i, j);
                         });
}

template <typename T>
Var<T> softmax_columns(Var<T> a, const AttentionMask* mask, EmptyColumns empty) {
  const Tensor<T>& A = a.value();
  require_matrix(A, "softmax_columns");
  const std::size_t rows = A.rows(), cols = A.cols();
  if (mask && (mask->rows() != rows || mask->cols() != cols))
    throw DimensionError("softmax_columns: mask [" + std::to_string(mask->rows()) + "x" +
                         std::to_string(mask->cols()) + "] does not match " + A.shape().str());
  Tensor<T> out(A.shape());
  std::vector<T> logits(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    // The column maximum is taken over allowed entries, so the additive
    // penalty drives every disallowed exp() to exactly zero.
    T top = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < rows; ++i) {
      const bool allowed = !mask || (*mask)(i, j);
      logits[i] = allowed ? A(i, j) : A(i, j) + T(kMaskedLogit);
      if (allowed) {
        any = true;
        top = std::max(top, logits[i]);
      }
    }
    if (!any) {
      if (empty == EmptyColumns::kZero) continue;
      throw DegenerateMaskError("softmax_columns: column " + std::to_string(j) + " is fully masked");
    }
    T total = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      const bool allowed = !mask || (*mask)(i, j);
      const T e = allowed ? std::exp(logits[i] - top) : T{0};
      out(i, j) = e;
      total += e;
    }
    for (std::size_t i = 0; i < rows; ++i) out(i, j) /= total;
  }
  return a.tape().record(std::move(out), {a},
                         [ia = a.id(), self = a.tape().size(), rows, cols](Tape<T>& t, const Tensor<T>& g) {
                           Tensor<T>* ga = t.grad_sink(ia);
                           const Tensor<T>& y = t.value(self);
                           for (std::size_t j = 0; j < cols; ++j) {
                             T inner = 0;
                             for (std::size_t i = 0; i < rows; ++i) inner += y(i, j) * g(i, j);
                             for (std::size_t i = 0; i < rows; ++i) (*ga)(i, j) += y(i, j) * (g(i, j) - inner);
                           }
                         });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const Tensor<T>& X = x.value();
  const Tensor<T>& G = gain.value();
  const Tensor<T>& B = bias.value();
  require_matrix(X, "layer_norm");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (G.size() != rows || B.size() != rows)
    throw DimensionError("layer_norm: gain/bias " + G.shape().str() + "/" + B.shape().str() +
                         " do not match feature axis of " + X.shape().str());
  Tensor<T> normed(X.shape());
  std::vector<T> inv_std(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    T mean = 0;
    for (std::size_t i = 0; i < rows; ++i) mean += X(i, j);
    mean /= T(rows);
    T var = 0;
    for (std::size_t i = 0; i < rows; ++i) var += (X(i, j) - mean) * (X(i, j) - mean);
    var /= T(rows);
    inv_std[j] = T{1} / std::sqrt(var + eps);
    for (std::size_t i = 0; i < rows; ++i) normed(i, j) = (X(i, j) - mean) * inv_std[j];
  }
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = G[i] * normed(i, j) + B[i];

  return x.tape().record(
      std::move(out), {x, gain, bias},
      [ix = x.id(), ig = gain.id(), ib = bias.id(), normed = std::move(normed), inv_std = std::move(inv_std),
       rows, cols](Tape<T>& t, const Tensor<T>& g) {
        const Tensor<T>& G = t.value(ig);
        if (Tensor<T>* gg = t.grad_sink(ig))
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) (*gg)[i] += g(i, j) * normed(i, j);
        if (Tensor<T>* gb = t.grad_sink(ib))
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) (*gb)[i] += g(i, j);
        if (Tensor<T>* gx = t.grad_sink(ix)) {
          std::vector<T> dn(rows);
          for (std::size_t j = 0; j < cols; ++j) {
            T mean_dn = 0, mean_dn_n = 0;
            for (std::size_t i = 0; i < rows; ++i) {
              dn[i] = g(i, j) * G[i];
              mean_dn += dn[i];
              mean_dn_n += dn[i] * normed(i, j);
            }
            mean_dn /= T(rows);
            mean_dn_n /= T(rows);
            for (std::size_t i = 0; i < rows; ++i)
              (*gx)(i, j) += inv_std[j] * (dn[i] - mean_dn - normed(i, j) * mean_dn_n);
          }
        }
      });
}

template <typename T>
Var<T> mean_pool_columns(Var<T> x, const ValidMask& valid) {
  const Tensor<T>& X = x.value();
  require_matrix(X, "mean_pool_columns");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (valid.size() != cols)
    throw DimensionError("mean_pool_columns: mask length " + std::to_string(valid.size()) +
                         " for " + X.shape().str());
  const std::size_t n = count_valid(valid);
  if (n == 0) throw DegenerateMaskError("mean_pool_columns: no valid columns");
  Tensor<T> out(Shape{rows});
  for (std::size_t i = 0; i < rows; ++i) {
    T s = 0;
    for (std::size_t j = 0; j < cols; ++j)
      if (valid[j]) s += X(i, j);
    out[i] = s / T(n);
  }
  return x.tape().record(std::move(out), {x}, [ix = x.id(), valid, rows, cols, n](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* gx = t.grad_sink(ix);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (valid[j]) (*gx)(i, j) += g[i] / T(n);
  });
}

template <typename T>
Var<T> max_pool_columns(Var<T> x, const ValidMask& valid) {
  const Tensor<T>& X = x.value();
  require_matrix(X, "max_pool_columns");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (valid.size() != cols)
    throw DimensionError("max_pool_columns: mask length " + std::to_string(valid.size()) +
                         " for " + X.shape().str());
  if (count_valid(valid) == 0) throw DegenerateMaskError("max_pool_columns: no valid columns");
  Tensor<T> out(Shape{rows});
  std::vector<std::size_t> argmax(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    bool first = true;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!valid[j]) continue;
      if (first || X(i, j) > out[i]) {
        out[i] = X(i, j);
        argmax[i] = j;
        first = false;
      }
    }
  }
  return x.tape().record(std::move(out), {x}, [ix = x.id(), argmax = std::move(argmax)](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* gx = t.grad_sink(ix);
    for (std::size_t i = 0; i < argmax.size(); ++i) (*gx)(i, argmax[i]) += g[i];
  });
}

template <typename T>
Var<T> slice(Var<T> x, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  const Tensor<T>& X = x.value();
  require_matrix(X, "slice");
  if (r0 >= r1 || r1 > X.rows() || c0 >= c1 || c1 > X.cols())
    throw DimensionError("slice: block [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
                         std::to_string(c0) + "," + std::to_string(c1) + ") outside " + X.shape().str());
  const std::size_t rows = r1 - r0, cols = c1 - c0;
  Tensor<T> out(X.rank() == 1 ? Shape{rows} : Shape{rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = X(r0 + i, c0 + j);
  return x.tape().record(std::move(out), {x}, [ix = x.id(), r0, c0, rows, cols](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* gx = t.grad_sink(ix);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) (*gx)(r0 + i, c0 + j) += g(i, j);
  });
}

template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t cols = parts[0].value().cols();
  bool vectors = true;
  std::size_t rows = 0;
  for (const Var<T>& p : parts) {
    require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != cols)
      throw DimensionError("concat_rows: column count " + p.value().shape().str() + " vs " + std::to_string(cols));
    vectors = vectors && p.value().rank() == 1;
    rows += p.value().rows();
  }
  Tensor<T> out(vectors ? Shape{rows} : Shape{rows, cols});
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const Var<T>& p : parts) {
    offsets.push_back(at);
    const Tensor<T>& v = p.value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(at * cols));
    at += v.rows();
  }
  std::vector<std::size_t> ids;
  for (const Var<T>& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(std::move(out), parts,
                                [ids = std::move(ids), offsets = std::move(offsets), cols](Tape<T>& t, const Tensor<T>& g) {
                                  for (std::size_t k = 0; k < ids.size(); ++k) {
                                    Tensor<T>* gp = t.grad_sink(ids[k]);
                                    if (!gp) continue;
                                    const T* src = g.data().data() + offsets[k] * cols;
                                    for (std::size_t i = 0; i < gp->size(); ++i) (*gp)[i] += src[i];
                                  }
                                });
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (const Var<T>& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != rows)
      throw DimensionError("concat_cols: row count " + p.value().shape().str() + " vs " + std::to_string(rows));
    cols += p.value().cols();
  }
  Tensor<T> out(Shape{rows, cols});
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const Var<T>& p : parts) {
    offsets.push_back(at);
    const Tensor<T>& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, at + j) = v(i, j);
    at += v.cols();
  }
  std::vector<std::size_t> ids;
  for (const Var<T>& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(std::move(out), parts,
                                [ids = std::move(ids), offsets = std::move(offsets), rows](Tape<T>& t, const Tensor<T>& g) {
                                  for (std::size_t k = 0; k < ids.size(); ++k) {
                                    Tensor<T>* gp = t.grad_sink(ids[k]);
                                    if (!gp) continue;
                                    const std::size_t w = gp->cols();
                                    for (std::size_t i = 0; i < rows; ++i)
                                      for (std::size_t j = 0; j < w; ++j) (*gp)(i, j) += g(i, offsets[k] + j);
                                  }
                                });
}

template <typename T>
Var<T> sum(Var<T> x) {
  const Tensor<T>& X = x.value();
  T s = 0;
  for (T v : X.data()) s += v;
  return x.tape().record(Tensor<T>(Shape{1}, s), {x}, [ix = x.id()](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>* gx = t.grad_sink(ix);
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g[0];
  });
}

template <typename T>
Var<T> dot(Var<T> u, Var<T> v) {
  const Tensor<T>& U = u.value();
  const Tensor<T>& V = v.value();
  require_same_shape(U, V, "dot");
  T s = 0;
  for (std::size_t i = 0; i < U.size(); ++i) s += U[i] * V[i];
  return u.tape().record(Tensor<T>(Shape{1}, s), {u, v}, [iu = u.id(), iv = v.id()](Tape<T>& t, const Tensor<T>& g) {
    if (Tensor<T>* gu = t.grad_sink(iu)) {
      const Tensor<T>& V = t.value(iv);
      for (std::size_t i = 0; i < V.size(); ++i) (*gu)[i] += g[0] * V[i];
    }
    if (Tensor<T>* gv = t.grad_sink(iv)) {
      const Tensor<T>& U = t.value(iu);
      for (std::size_t i = 0; i < U.size(); ++i) (*gv)[i] += g[0] * U[i];
    }
  });
}

template <typename T>
Var<T> cosine(Var<T> u, Var<T> v) {
  const Tensor<T>& U = u.value();
  const Tensor<T>& V = v.value();
  require_same_shape(U, V, "cosine");
  T uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    uv += U[i] * V[i];
    uu += U[i] * U[i];
    vv += V[i] * V[i];
  }
  const T nu = std::sqrt(uu), nv = std::sqrt(vv);
  const T denom = nu * nv;
  const bool degenerate = !(denom >= T(kCosineEps));
  const T c = degenerate ? T{0} : uv / denom;
  return u.tape().record(
      Tensor<T>(Shape{1}, c), {u, v},
      [iu = u.id(), iv = v.id(), c, uu, vv, denom, degenerate](Tape<T>& t, const Tensor<T>& g) {
        if (degenerate) return;
        const Tensor<T>& U = t.value(iu);
        const Tensor<T>& V = t.value(iv);
        if (Tensor<T>* gu = t.grad_sink(iu))
          for (std::size_t i = 0; i < U.size(); ++i) (*gu)[i] += g[0] * (V[i] / denom - c * U[i] / uu);
        if (Tensor<T>* gv = t.grad_sink(iv))
          for (std::size_t i = 0; i < V.size(); ++i) (*gv)[i] += g[0] * (U[i] / denom - c * V[i] / vv);
      });
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::size_t label) {
  const Tensor<T>& Z = logits.value();
  if (Z.rank() != 1) throw DimensionError("softmax_cross_entropy: logits must be a vector, got " + Z.shape().str());
  if (label >= Z.size()) throw DimensionError("softmax_cross_entropy: label out of range");
  T top = Z[0];
  for (T z : Z.data()) top = std::max(top, z);
  T total = 0;
  for (T z : Z.data()) total += std::exp(z - top);
  const T lse = top + std::log(total);
  std::vector<T> probs(Z.size());
  for (std::size_t k = 0; k < Z.size(); ++k) probs[k] = std::exp(Z[k] - lse);
  return logits.tape().record(Tensor<T>(Shape{1}, lse - Z[label]), {logits},
                              [iz = logits.id(), probs = std::move(probs), label](Tape<T>& t, const Tensor<T>& g) {
                                Tensor<T>* gz = t.grad_sink(iz);
                                for (std::size_t k = 0; k < probs.size(); ++k)
                                  (*gz)[k] += g[0] * (probs[k] - (k == label ? T{1} : T{0}));
                              });
}

template <typename T>
Var<T> gather_columns(Var<T> table, std::span<const std::int32_t> ids, const ValidMask& valid) {
  const Tensor<T>& W = table.value();
  require_matrix(W, "gather_columns");
  if (ids.size() != valid.size())
    throw DimensionError("gather_columns: " + std::to_string(ids.size()) + " ids for mask of length " +
                         std::to_string(valid.size()));
  const std::size_t rows = W.rows(), vocab = W.cols(), len = ids.size();
  std::vector<std::int32_t> picked(ids.begin(), ids.end());
  for (std::size_t j = 0; j < len; ++j)
    if (valid[j] && (picked[j] < 0 || static_cast<std::size_t>(picked[j]) >= vocab))
      throw InputError("token id " + std::to_string(picked[j]) + " outside vocabulary of " + std::to_string(vocab));
  Tensor<T> out(Shape{rows, len});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < len; ++j)
      if (valid[j]) out(i, j) = W(i, static_cast<std::size_t>(picked[j]));
  return table.tape().record(std::move(out), {table},
                             [it = table.id(), picked = std::move(picked), valid, rows](Tape<T>& t, const Tensor<T>& g) {
                               Tensor<T>* gw = t.grad_sink(it);
                               for (std::size_t i = 0; i < rows; ++i)
                                 for (std::size_t j = 0; j < picked.size(); ++j)
                                   if (valid[j]) (*gw)(i, static_cast<std::size_t>(picked[j])) += g(i, j);
                             });
}

#define GGSA_INSTANTIATE_OPS(T)                                                              \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                 \
  template Var<T> matmul_tn<T>(Var<T>, Var<T>, T);                                           \
  template Var<T> transpose<T>(Var<T>);                                                      \
  template Var<T> reshape<T>(Var<T>, Shape);                                                 \
  template Var<T> add<T>(Var<T>, Var<T>);                                                    \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                    \
  template Var<T> hadamard<T>(Var<T>, Var<T>);                                               \
  template Var<T> scale<T>(Var<T>, T);                                                       \
  template Var<T> add_constant<T>(Var<T>, T);                                                \
  template Var<T> sigmoid<T>(Var<T>);                                                        \
  template Var<T> relu<T>(Var<T>);                                                           \
  template Var<T> tanh<T>(Var<T>);                                                           \
  template Var<T> broadcast_col<T>(Var<T>, Var<T>);                                          \
  template Var<T> add_col<T>(Var<T>, Var<T>);                                                \
  template Var<T> softmax_columns<T>(Var<T>, const AttentionMask*, EmptyColumns);            \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                  \
  template Var<T> mean_pool_columns<T>(Var<T>, const ValidMask&);                            \
  template Var<T> max_pool_columns<T>(Var<T>, const ValidMask&);                             \
  template Var<T> slice<T>(Var<T>, std::size_t, std::size_t, std::size_t, std::size_t);      \
  template Var<T> concat_rows<T>(std::span<const Var<T>>);                                   \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                                   \
  template Var<T> sum<T>(Var<T>);                                                            \
  template Var<T> dot<T>(Var<T>, Var<T>);                                                    \
  template Var<T> cosine<T>(Var<T>, Var<T>);                                                 \
  template Var<T> softmax_cross_entropy<T>(Var<T>, std::size_t);                             \
  template Var<T> gather_columns<T>(Var<T>, std::span<const std::int32_t>, const ValidMask&);

GGSA_INSTANTIATE_OPS(float)
GGSA_INSTANTIATE_OPS(double)

}  // namespace ggsa
