// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma on
// x86-64 and must only be entered through the dispatch table after a cpuid
// check. Accumulation order differs from the scalar reference (8/4-wide
// partial sums), so comparisons against it need a small tolerance.

#include "grainnet/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace grainnet::kernels {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, lo);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  lo = _mm_add_sd(lo, sh);
  return _mm_cvtsd_f64(lo);
}

// ---------------------------------------------------------------------------
// f32 GEMM
// ---------------------------------------------------------------------------

void gemm_nn_f32(int m, int n, int k, const float* a, int lda, const float* b,
                 int ldb, float* c, int ldc, bool accumulate) {
  int i = 0;
  for (; i + 2 <= m; i += 2) {
    const float* a0 = a + static_cast<std::size_t>(i) * lda;
    const float* a1 = a0 + lda;
    float* c0 = c + static_cast<std::size_t>(i) * ldc;
    float* c1 = c0 + ldc;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256 acc00, acc01, acc10, acc11;
      if (accumulate) {
        acc00 = _mm256_loadu_ps(c0 + j);
        acc01 = _mm256_loadu_ps(c0 + j + 8);
        acc10 = _mm256_loadu_ps(c1 + j);
        acc11 = _mm256_loadu_ps(c1 + j + 8);
      } else {
        acc00 = acc01 = acc10 = acc11 = _mm256_setzero_ps();
      }
      for (int p = 0; p < k; ++p) {
        const float* brow = b + static_cast<std::size_t>(p) * ldb + j;
        const __m256 b0 = _mm256_loadu_ps(brow);
        const __m256 b1 = _mm256_loadu_ps(brow + 8);
        const __m256 va0 = _mm256_set1_ps(a0[p]);
        const __m256 va1 = _mm256_set1_ps(a1[p]);
        acc00 = _mm256_fmadd_ps(va0, b0, acc00);
        acc01 = _mm256_fmadd_ps(va0, b1, acc01);
        acc10 = _mm256_fmadd_ps(va1, b0, acc10);
        acc11 = _mm256_fmadd_ps(va1, b1, acc11);
      }
      _mm256_storeu_ps(c0 + j, acc00);
      _mm256_storeu_ps(c0 + j + 8, acc01);
      _mm256_storeu_ps(c1 + j, acc10);
      _mm256_storeu_ps(c1 + j + 8, acc11);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 acc0 = accumulate ? _mm256_loadu_ps(c0 + j) : _mm256_setzero_ps();
      __m256 acc1 = accumulate ? _mm256_loadu_ps(c1 + j) : _mm256_setzero_ps();
      for (int p = 0; p < k; ++p) {
        const __m256 bv = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + j);
        acc0 = _mm256_fmadd_ps(_mm256_set1_ps(a0[p]), bv, acc0);
        acc1 = _mm256_fmadd_ps(_mm256_set1_ps(a1[p]), bv, acc1);
      }
      _mm256_storeu_ps(c0 + j, acc0);
      _mm256_storeu_ps(c1 + j, acc1);
    }
    for (; j < n; ++j) {
      float s0 = accumulate ? c0[j] : 0.0f;
      float s1 = accumulate ? c1[j] : 0.0f;
      for (int p = 0; p < k; ++p) {
        const float bv = b[static_cast<std::size_t>(p) * ldb + j];
        s0 += a0[p] * bv;
        s1 += a1[p] * bv;
      }
      c0[j] = s0;
      c1[j] = s1;
    }
  }
  for (; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256 acc = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
      for (int p = 0; p < k; ++p)
        acc = _mm256_fmadd_ps(_mm256_set1_ps(arow[p]),
                              _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + j), acc);
      _mm256_storeu_ps(crow + j, acc);
    }
    for (; j < n; ++j) {
      float s = accumulate ? crow[j] : 0.0f;
      for (int p = 0; p < k; ++p) s += arow[p] * b[static_cast<std::size_t>(p) * ldb + j];
      crow[j] = s;
    }
  }
}

void gemm_nt_f32(int m, int n, int k, const float* a, int lda, const float* b,
                 int ldb, float* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + static_cast<std::size_t>(j) * ldb;
      const float* b1 = b0 + ldb;
      const float* b2 = b1 + ldb;
      const float* b3 = b2 + ldb;
      __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
      __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), acc0);
        acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), acc1);
        acc2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), acc2);
        acc3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), acc3);
      }
      float s0 = hsum8(acc0), s1 = hsum8(acc1), s2 = hsum8(acc2), s3 = hsum8(acc3);
      for (; p < k; ++p) {
        const float av = arow[p];
        s0 += av * b0[p];
        s1 += av * b1[p];
        s2 += av * b2[p];
        s3 += av * b3[p];
      }
      if (accumulate) {
        crow[j] += s0;
        crow[j + 1] += s1;
        crow[j + 2] += s2;
        crow[j + 3] += s3;
      } else {
        crow[j] = s0;
        crow[j + 1] = s1;
        crow[j + 2] = s2;
        crow[j + 3] = s3;
      }
    }
    for (; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * ldb;
      __m256 acc = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), acc);
      float s = hsum8(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

void gemm_tn_f32(int m, int n, int k, const float* a, int lda, const float* b,
                 int ldb, float* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256 acc = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
      for (int p = 0; p < k; ++p)
        acc = _mm256_fmadd_ps(_mm256_set1_ps(a[static_cast<std::size_t>(p) * lda + i]),
                              _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + j), acc);
      _mm256_storeu_ps(crow + j, acc);
    }
    for (; j < n; ++j) {
      float s = accumulate ? crow[j] : 0.0f;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<std::size_t>(p) * lda + i] * b[static_cast<std::size_t>(p) * ldb + j];
      crow[j] = s;
    }
  }
}

// ---------------------------------------------------------------------------
// f64 GEMM
// ---------------------------------------------------------------------------

void gemm_nn_f64(int m, int n, int k, const double* a, int lda, const double* b,
                 int ldb, double* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * lda;
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d acc0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
      __m256d acc1 = accumulate ? _mm256_loadu_pd(crow + j + 4) : _mm256_setzero_pd();
      for (int p = 0; p < k; ++p) {
        const double* brow = b + static_cast<std::size_t>(p) * ldb + j;
        const __m256d av = _mm256_set1_pd(arow[p]);
        acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), acc0);
        acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), acc1);
      }
      _mm256_storeu_pd(crow + j, acc0);
      _mm256_storeu_pd(crow + j + 4, acc1);
    }
    for (; j < n; ++j) {
      double s = accumulate ? crow[j] : 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * b[static_cast<std::size_t>(p) * ldb + j];
      crow[j] = s;
    }
  }
}

void gemm_nt_f64(int m, int n, int k, const double* a, int lda, const double* b,
                 int ldb, double* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * lda;
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * ldb;
      __m256d acc = _mm256_setzero_pd();
      int p = 0;
      for (; p + 4 <= k; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p), _mm256_loadu_pd(brow + p), acc);
      double s = hsum4(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

void gemm_tn_f64(int m, int n, int k, const double* a, int lda, const double* b,
                 int ldb, double* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d acc = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
      for (int p = 0; p < k; ++p)
        acc = _mm256_fmadd_pd(_mm256_set1_pd(a[static_cast<std::size_t>(p) * lda + i]),
                              _mm256_loadu_pd(b + static_cast<std::size_t>(p) * ldb + j), acc);
      _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < n; ++j) {
      double s = accumulate ? crow[j] : 0.0;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<std::size_t>(p) * lda + i] * b[static_cast<std::size_t>(p) * ldb + j];
      crow[j] = s;
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

void axpy_f32(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f32(std::size_t n, float alpha, float* x) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void scale_f64(std::size_t n, double alpha, double* x) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void relu_f32(std::size_t n, const float* x, float* y) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_f64(std::size_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_f32(std::size_t n, const float* x, const float* dy, float* dx) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 gated = _mm256_and_ps(mask, _mm256_loadu_ps(dy + i));
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), gated));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) dx[i] += dy[i];
}

void relu_bwd_f64(std::size_t n, const double* x, const double* dy, double* dx) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

void sgd_f32(std::size_t n, float* w, const float* g, float* v, float lr,
             float momentum, float wd) {
  const __m256 vm = _mm256_set1_ps(momentum);
  const __m256 vwd = _mm256_set1_ps(wd);
  const __m256 vlr = _mm256_set1_ps(-lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 wv = _mm256_loadu_ps(w + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    vv = _mm256_fmadd_ps(vm, vv, _mm256_fmadd_ps(vwd, wv, _mm256_loadu_ps(g + i)));
    _mm256_storeu_ps(v + i, vv);
    _mm256_storeu_ps(w + i, _mm256_fmadd_ps(vlr, vv, wv));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

void sgd_f64(std::size_t n, double* w, const double* g, double* v, double lr,
             double momentum, double wd) {
  const __m256d vm = _mm256_set1_pd(momentum);
  const __m256d vwd = _mm256_set1_pd(wd);
  const __m256d vlr = _mm256_set1_pd(-lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wv = _mm256_loadu_pd(w + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vv = _mm256_fmadd_pd(vm, vv, _mm256_fmadd_pd(vwd, wv, _mm256_loadu_pd(g + i)));
    _mm256_storeu_pd(v + i, vv);
    _mm256_storeu_pd(w + i, _mm256_fmadd_pd(vlr, vv, wv));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace

const Table* avx2_table() {
  static const Table t{
      "avx2",
      &gemm_nn_f32, &gemm_nt_f32, &gemm_tn_f32,
      &gemm_nn_f64, &gemm_nt_f64, &gemm_tn_f64,
      &axpy_f32,    &axpy_f64,
      &scale_f32,   &scale_f64,
      &relu_f32,    &relu_f64,
      &relu_bwd_f32, &relu_bwd_f64,
      &sgd_f32,     &sgd_f64,
  };
  return &t;
}

}  // namespace grainnet::kernels

#else  // no AVX2 at build time

namespace grainnet::kernels {
const Table* avx2_table() { return nullptr; }
}  // namespace grainnet::kernels

#endif
