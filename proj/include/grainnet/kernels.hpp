#pragma once

#include <cstddef>
#include <string>

namespace grainnet::kernels {

// Instruction set of a kernel table. Scalar is the reference implementation;
// vector variants must agree with it within floating-point reassociation
// tolerance (see tests/test_kernels.cpp).
enum class Isa { Scalar, Avx2 };

// All matrices are dense row-major with explicit leading dimensions.
//   gemm_nn: C(m,n) = A(m,k)  * B(k,n)
//   gemm_nt: C(m,n) = A(m,k)  * B(n,k)^T
//   gemm_tn: C(m,n) = A(k,m)^T * B(k,n)
// With accumulate=true the product is added onto C instead of overwriting it.
struct Table {
  const char* name;

  void (*gemm_nn_f32)(int m, int n, int k, const float* a, int lda,
                      const float* b, int ldb, float* c, int ldc, bool accumulate);
  void (*gemm_nt_f32)(int m, int n, int k, const float* a, int lda,
                      const float* b, int ldb, float* c, int ldc, bool accumulate);
  void (*gemm_tn_f32)(int m, int n, int k, const float* a, int lda,
                      const float* b, int ldb, float* c, int ldc, bool accumulate);
  void (*gemm_nn_f64)(int m, int n, int k, const double* a, int lda,
                      const double* b, int ldb, double* c, int ldc, bool accumulate);
  void (*gemm_nt_f64)(int m, int n, int k, const double* a, int lda,
                      const double* b, int ldb, double* c, int ldc, bool accumulate);
  void (*gemm_tn_f64)(int m, int n, int k, const double* a, int lda,
                      const double* b, int ldb, double* c, int ldc, bool accumulate);

  // y[i] += alpha * x[i]
  void (*axpy_f32)(std::size_t n, float alpha, const float* x, float* y);
  void (*axpy_f64)(std::size_t n, double alpha, const double* x, double* y);

  // x[i] *= alpha
  void (*scale_f32)(std::size_t n, float alpha, float* x);
  void (*scale_f64)(std::size_t n, double alpha, double* x);

  // y[i] = max(x[i], 0)
  void (*relu_f32)(std::size_t n, const float* x, float* y);
  void (*relu_f64)(std::size_t n, const double* x, double* y);

  // dx[i] += dy[i] where x[i] > 0 (subgradient at 0 is 0)
  void (*relu_bwd_f32)(std::size_t n, const float* x, const float* dy, float* dx);
  void (*relu_bwd_f64)(std::size_t n, const double* x, const double* dy, double* dx);

  // Classical SGD with momentum and coupled weight decay:
  //   v <- momentum * v + g + wd * w;  w <- w - lr * v
  void (*sgd_f32)(std::size_t n, float* w, const float* g, float* v,
                  float lr, float momentum, float wd);
  void (*sgd_f64)(std::size_t n, double* w, const double* g, double* v,
                  double lr, double momentum, double wd);
};

// Highest ISA this CPU supports (cpuid probe on x86-64, Scalar elsewhere).
Isa detect_best();
bool isa_supported(Isa isa);

// Table lookup; table(Isa::Avx2) throws if the build or CPU lacks AVX2.
const Table& table(Isa isa);

// Process-wide active table. Defaults to detect_best(), overridable by the
// GRAINNET_ISA environment variable ("scalar" / "avx2") or set_active().
const Table& active();
Isa active_isa();
void set_active(Isa isa);

// Parses "auto" / "scalar" / "avx2"; throws on anything else.
Isa parse_isa(const std::string& name);
const char* isa_name(Isa isa);

// Type-dispatched wrappers over the active table.
template <typename T>
inline void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                    T* c, int ldc, bool accumulate = false) {
  if constexpr (sizeof(T) == 4)
    active().gemm_nn_f32(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  else
    active().gemm_nn_f64(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
inline void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                    T* c, int ldc, bool accumulate = false) {
  if constexpr (sizeof(T) == 4)
    active().gemm_nt_f32(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  else
    active().gemm_nt_f64(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
inline void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                    T* c, int ldc, bool accumulate = false) {
  if constexpr (sizeof(T) == 4)
    active().gemm_tn_f32(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  else
    active().gemm_tn_f64(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  if constexpr (sizeof(T) == 4)
    active().axpy_f32(n, alpha, x, y);
  else
    active().axpy_f64(n, alpha, x, y);
}

template <typename T>
inline void scale(std::size_t n, T alpha, T* x) {
  if constexpr (sizeof(T) == 4)
    active().scale_f32(n, alpha, x);
  else
    active().scale_f64(n, alpha, x);
}

template <typename T>
inline void relu(std::size_t n, const T* x, T* y) {
  if constexpr (sizeof(T) == 4)
    active().relu_f32(n, x, y);
  else
    active().relu_f64(n, x, y);
}

template <typename T>
inline void relu_bwd(std::size_t n, const T* x, const T* dy, T* dx) {
  if constexpr (sizeof(T) == 4)
    active().relu_bwd_f32(n, x, dy, dx);
  else
    active().relu_bwd_f64(n, x, dy, dx);
}

template <typename T>
inline void sgd_step(std::size_t n, T* w, const T* g, T* v, T lr, T momentum, T wd) {
  if constexpr (sizeof(T) == 4)
    active().sgd_f32(n, w, g, v, lr, momentum, wd);
  else
    active().sgd_f64(n, w, g, v, lr, momentum, wd);
}

}  // namespace grainnet::kernels
