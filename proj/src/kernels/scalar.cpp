// Reference kernels. Plain loops, single accumulation order; the vector
// variants are validated against these in tests/test_kernels.cpp.

#include "grainnet/kernels.hpp"

namespace grainnet::kernels {
namespace {

template <typename T>
void gemm_nn_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                 T* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    if (!accumulate)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                 T* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * ldb;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

template <typename T>
void gemm_tn_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                 T* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    if (!accumulate)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::size_t>(p) * lda + i];
      const T* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale_ref(std::size_t n, T alpha, T* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <typename T>
void relu_ref(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd_ref(std::size_t n, const T* x, const T* dy, T* dx) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > T(0)) dx[i] += dy[i];
}

template <typename T>
void sgd_ref(std::size_t n, T* w, const T* g, T* v, T lr, T momentum, T wd) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table t{
      "scalar",
      &gemm_nn_ref<float>,  &gemm_nt_ref<float>,  &gemm_tn_ref<float>,
      &gemm_nn_ref<double>, &gemm_nt_ref<double>, &gemm_tn_ref<double>,
      &axpy_ref<float>,     &axpy_ref<double>,
      &scale_ref<float>,    &scale_ref<double>,
      &relu_ref<float>,     &relu_ref<double>,
      &relu_bwd_ref<float>, &relu_bwd_ref<double>,
      &sgd_ref<float>,      &sgd_ref<double>,
  };
  return t;
}

}  // namespace grainnet::kernels
