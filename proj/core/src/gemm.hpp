#pragma once

#include <cstddef>

// Accumulating row-major GEMM kernels: C[m x n] += alpha * op(A) * op(B).
// Loop orders keep the innermost access contiguous so the compiler can
// vectorise it.
namespace ggsa {

// A[m x k], B[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, T alpha, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = alpha * a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// A stored [k x m], B[k x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, T alpha, const T* a, const T* b, T* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T s = alpha * arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// A[m x k], B stored [n x k]
template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, T alpha, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += alpha * acc;
    }
  }
}

}  // namespace ggsa
