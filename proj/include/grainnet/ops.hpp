#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "grainnet/autodiff.hpp"
#include "grainnet/kernels.hpp"
#include "grainnet/runtime.hpp"
#include "grainnet/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace grainnet {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

// Static sample partition: thread t owns a contiguous index range, so the
// result is identical for a fixed thread count.
template <typename F>
void for_samples(int n, int nt, const F& fn) {
  nt = std::min(nt, n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(0, i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const int chunk = (n + nt - 1) / nt;
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    for (int i = lo; i < hi; ++i) fn(t, i);
  }
#else
  for (int i = 0; i < n; ++i) fn(0, i);
#endif
}

template <typename T>
void im2col(const T* x, int c, int h, int w, int kh, int kw, int stride, int pad, T* col) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  T* out = col;
  for (int ic = 0; ic < c; ++ic) {
    const T* plane = x + static_cast<std::size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) *out++ = T(0);
            continue;
          }
          const T* row = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            *out++ = (ix >= 0 && ix < w) ? row[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int c, int h, int w, int kh, int kw, int stride, int pad, T* x) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  const T* in = col;
  for (int ic = 0; ic < c; ++ic) {
    T* plane = x + static_cast<std::size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            in += ow;
            continue;
          }
          T* row = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) row[ix] += *in;
            ++in;
          }
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: NCHW x (OC,IC,KH,KW) -> NCHW, im2col + per-sample GEMM.
// The direct quadruple-loop formulation lives in the test suite as the
// independent oracle for this path.
// ---------------------------------------------------------------------------
template <typename T>
Var<T> conv2d(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b, int stride, int padding) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& wv = t.val(w);
  const Tensor<T>& bv = t.val(b);
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1)
    throw std::invalid_argument("conv2d expects x NCHW " + xv.shape_str() + ", w (OC,IC,KH,KW) " +
                                wv.shape_str() + ", b (OC) " + bv.shape_str());
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), iw = xv.dim(3);
  const int oc = wv.dim(0), ic = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
  if (kh < 1 || kw < 1) throw std::invalid_argument("conv2d kernel dims must be >= 1");
  if (stride < 1) throw std::invalid_argument("conv2d stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv2d padding must be >= 0");
  if (c != ic)
    throw std::invalid_argument("conv2d channel mismatch: input has " + std::to_string(c) +
                                " channels, weights expect " + std::to_string(ic));
  if (bv.dim(0) != oc)
    throw std::invalid_argument("conv2d bias length " + std::to_string(bv.dim(0)) +
                                " does not match " + std::to_string(oc) + " output channels");
  if (h + 2 * padding < kh || iw + 2 * padding < kw)
    throw std::runtime_error("conv2d configuration error: padded input " +
                             std::to_string(h + 2 * padding) + "x" + std::to_string(iw + 2 * padding) +
                             " smaller than kernel " + std::to_string(kh) + "x" + std::to_string(kw));
  const int oh = conv_out_dim(h, kh, stride, padding);
  const int ow = conv_out_dim(iw, kw, stride, padding);
  if (oh < 1 || ow < 1)
    throw std::runtime_error("conv2d configuration error: zero-size output for input " +
                             xv.shape_str());

  const int kdim = ic * kh * kw;
  const int pdim = oh * ow;
  Tensor<T> out({n, oc, oh, ow});
  const int nt = runtime_threads();
  std::vector<std::vector<T>> cols(static_cast<std::size_t>(std::min(nt, std::max(n, 1))));
  for (auto& cb : cols) cb.resize(static_cast<std::size_t>(kdim) * pdim);

  detail::for_samples(n, nt, [&](int tid, int s) {
    T* col = cols[static_cast<std::size_t>(tid)].data();
    detail::im2col(xv.data() + static_cast<std::size_t>(s) * c * h * iw, c, h, iw, kh, kw, stride,
                   padding, col);
    T* dst = out.data() + static_cast<std::size_t>(s) * oc * pdim;
    kernels::gemm_nn<T>(oc, pdim, kdim, wv.data(), kdim, col, pdim, dst, pdim);
    for (int j = 0; j < oc; ++j) {
      const T bias = bv[static_cast<std::size_t>(j)];
      T* row = dst + static_cast<std::size_t>(j) * pdim;
      for (int p = 0; p < pdim; ++p) row[p] += bias;
    }
  });
  debug_check_finite(out, "conv2d output");

  const bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  Var<T> out_var = t.alloc(std::move(out), rg);
  t.set_backward(out_var, [=](Tape<T>& tp) {
    const Tensor<T>& dy = tp.grad(out_var);
    const Tensor<T>& xval = tp.val(x);
    const Tensor<T>& wval = tp.val(w);
    const int threads = std::min(runtime_threads(), std::max(n, 1));
    std::vector<std::vector<T>> colbufs(static_cast<std::size_t>(threads));

    if (tp.requires_grad(w) || tp.requires_grad(b)) {
      std::vector<Tensor<T>> dw_part(static_cast<std::size_t>(threads),
                                     Tensor<T>({oc, kdim}));
      std::vector<Tensor<T>> db_part(static_cast<std::size_t>(threads), Tensor<T>({oc}));
      for (auto& cb : colbufs) cb.resize(static_cast<std::size_t>(kdim) * pdim);
      detail::for_samples(n, threads, [&](int tid, int s) {
        T* col = colbufs[static_cast<std::size_t>(tid)].data();
        detail::im2col(xval.data() + static_cast<std::size_t>(s) * c * h * iw, c, h, iw, kh, kw,
                       stride, padding, col);
        const T* dys = dy.data() + static_cast<std::size_t>(s) * oc * pdim;
        kernels::gemm_nt<T>(oc, kdim, pdim, dys, pdim, col, pdim,
                            dw_part[static_cast<std::size_t>(tid)].data(), kdim, true);
        T* dbp = db_part[static_cast<std::size_t>(tid)].data();
        for (int j = 0; j < oc; ++j) {
          T acc = T(0);
          const T* row = dys + static_cast<std::size_t>(j) * pdim;
          for (int p = 0; p < pdim; ++p) acc += row[p];
          dbp[j] += acc;
        }
      });
      if (tp.requires_grad(w)) {
        Tensor<T>& dw = tp.grad(w);
        for (int tid = 0; tid < threads; ++tid)
          kernels::axpy<T>(dw.size(), T(1), dw_part[static_cast<std::size_t>(tid)].data(),
                           dw.data());
      }
      if (tp.requires_grad(b)) {
        Tensor<T>& db = tp.grad(b);
        for (int tid = 0; tid < threads; ++tid)
          kernels::axpy<T>(db.size(), T(1), db_part[static_cast<std::size_t>(tid)].data(),
                           db.data());
      }
    }

    if (tp.requires_grad(x)) {
      Tensor<T>& dx = tp.grad(x);
      for (auto& cb : colbufs) cb.resize(static_cast<std::size_t>(kdim) * pdim);
      detail::for_samples(n, threads, [&](int tid, int s) {
        T* dcol = colbufs[static_cast<std::size_t>(tid)].data();
        const T* dys = dy.data() + static_cast<std::size_t>(s) * oc * pdim;
        kernels::gemm_tn<T>(kdim, pdim, oc, wval.data(), kdim, dys, pdim, dcol, pdim);
        detail::col2im_add(dcol, c, h, iw, kh, kw, stride, padding,
                           dx.data() + static_cast<std::size_t>(s) * c * h * iw);
      });
    }
  });
  return out_var;
}

// ---------------------------------------------------------------------------
// batch_norm
// ---------------------------------------------------------------------------
enum class BNMode { Training, Inference };

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;  // (C)
  Tensor<T> running_var;   // (C)
  T epsilon = T(1e-5);
  T momentum = T(0.1);  // weight of the fresh batch statistic in the EMA
  BNMode mode = BNMode::Training;

  explicit BatchNormState(int channels = 0)
      : running_mean(Tensor<T>({channels})), running_var(Tensor<T>({channels}, T(1))) {}

  void validate() const {
    if (!(epsilon > T(0))) throw std::runtime_error("batch_norm epsilon must be > 0");
    if (!(momentum > T(0) && momentum < T(1)))
      throw std::runtime_error("batch_norm momentum must be in (0,1)");
    for (std::size_t i = 0; i < running_var.size(); ++i)
      if (running_var[i] < T(0)) throw std::runtime_error("batch_norm running_var went negative");
  }
};

template <typename T>
Var<T> batch_norm(Tape<T>& t, Var<T> x, Var<T> gamma, Var<T> beta, BatchNormState<T>& state) {
  const Tensor<T>& xv = t.val(x);
  if (xv.rank() != 4)
    throw std::invalid_argument("batch_norm expects NCHW input, got " + xv.shape_str());
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (t.val(gamma).dim(0) != c || t.val(beta).dim(0) != c || state.running_mean.dim(0) != c)
    throw std::invalid_argument("batch_norm channel mismatch: input has " + std::to_string(c) +
                                " channels, parameters have " +
                                std::to_string(t.val(gamma).dim(0)));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t per_channel = static_cast<std::size_t>(n) * plane;
  const Tensor<T>& gv = t.val(gamma);
  const Tensor<T>& bv = t.val(beta);

  Tensor<T> out(xv.shape());
  Tensor<T> xhat(xv.shape());
  Tensor<T> inv_std({c});
  const bool training = state.mode == BNMode::Training;

  for (int ch = 0; ch < c; ++ch) {
    T mean, var;
    if (training) {
      double sum = 0.0;
      for (int s = 0; s < n; ++s) {
        const T* p = xv.data() + (static_cast<std::size_t>(s) * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(p[i]);
      }
      const double mu = sum / static_cast<double>(per_channel);
      double sq = 0.0;
      for (int s = 0; s < n; ++s) {
        const T* p = xv.data() + (static_cast<std::size_t>(s) * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - mu;
          sq += d * d;
        }
      }
      mean = static_cast<T>(mu);
      var = static_cast<T>(sq / static_cast<double>(per_channel));
      state.running_mean[ch] =
          (T(1) - state.momentum) * state.running_mean[ch] + state.momentum * mean;
      state.running_var[ch] =
          (T(1) - state.momentum) * state.running_var[ch] + state.momentum * var;
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const T istd = T(1) / std::sqrt(var + state.epsilon);
    inv_std[ch] = istd;
    const T g = gv[ch], bt = bv[ch];
    for (int s = 0; s < n; ++s) {
      const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * plane;
      const T* src = xv.data() + off;
      T* xh = xhat.data() + off;
      T* dst = out.data() + off;
      for (std::size_t i = 0; i < plane; ++i) {
        const T z = (src[i] - mean) * istd;
        xh[i] = z;
        dst[i] = g * z + bt;
      }
    }
  }
  debug_check_finite(out, "batch_norm output");

  const bool rg = t.requires_grad(x) || t.requires_grad(gamma) || t.requires_grad(beta);
  Var<T> out_var = t.alloc(std::move(out), rg);
  t.set_backward(out_var, [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& tp) {
    const Tensor<T>& dy = tp.grad(out_var);
    const Tensor<T>& g = tp.val(gamma);
    for (int ch = 0; ch < c; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int s = 0; s < n; ++s) {
        const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * plane;
        const T* dyp = dy.data() + off;
        const T* xh = xhat.data() + off;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += static_cast<double>(dyp[i]);
          sum_dy_xhat += static_cast<double>(dyp[i]) * static_cast<double>(xh[i]);
        }
      }
      if (tp.requires_grad(gamma)) tp.grad(gamma)[ch] += static_cast<T>(sum_dy_xhat);
      if (tp.requires_grad(beta)) tp.grad(beta)[ch] += static_cast<T>(sum_dy);
      if (tp.requires_grad(x)) {
        Tensor<T>& dx = tp.grad(x);
        const T scale = g[ch] * inv_std[ch];
        if (training) {
          const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(per_channel));
          const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(per_channel));
          for (int s = 0; s < n; ++s) {
            const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * plane;
            const T* dyp = dy.data() + off;
            const T* xh = xhat.data() + off;
            T* dxp = dx.data() + off;
            for (std::size_t i = 0; i < plane; ++i)
              dxp[i] += scale * (dyp[i] - mean_dy - xh[i] * mean_dy_xhat);
          }
        } else {
          for (int s = 0; s < n; ++s) {
            const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * plane;
            const T* dyp = dy.data() + off;
            T* dxp = dx.data() + off;
            for (std::size_t i = 0; i < plane; ++i) dxp[i] += scale * dyp[i];
          }
        }
      }
    }
  });
  return out_var;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------
template <typename T>
Var<T> relu(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  Tensor<T> out(xv.shape());
  kernels::relu<T>(xv.size(), xv.data(), out.data());
  Var<T> out_var = t.alloc(std::move(out), t.requires_grad(x));
  t.set_backward(out_var, [=](Tape<T>& tp) {
    const Tensor<T>& dy = tp.grad(out_var);
    const Tensor<T>& xval = tp.val(x);
    kernels::relu_bwd<T>(xval.size(), xval.data(), dy.data(), tp.grad(x).data());
  });
  return out_var;
}

// ---------------------------------------------------------------------------
// linear: y = x W^T + b
// ---------------------------------------------------------------------------
template <typename T>
Var<T> linear(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& wv = t.val(w);
  const Tensor<T>& bv = t.val(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1)
    throw std::invalid_argument("linear expects x (batch,in), w (out,in), b (out)");
  const int n = xv.dim(0), in = xv.dim(1), out_dim = wv.dim(0);
  if (wv.dim(1) != in)
    throw std::invalid_argument("linear dimension mismatch: input width " + std::to_string(in) +
                                " vs weight width " + std::to_string(wv.dim(1)));
  if (bv.dim(0) != out_dim)
    throw std::invalid_argument("linear bias length " + std::to_string(bv.dim(0)) +
                                " does not match output width " + std::to_string(out_dim));

  Tensor<T> out({n, out_dim});
  kernels::gemm_nt<T>(n, out_dim, in, xv.data(), in, wv.data(), in, out.data(), out_dim);
  for (int s = 0; s < n; ++s) {
    T* row = out.data() + static_cast<std::size_t>(s) * out_dim;
    for (int j = 0; j < out_dim; ++j) row[j] += bv[static_cast<std::size_t>(j)];
  }
  debug_check_finite(out, "linear output");

  const bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  Var<T> out_var = t.alloc(std::move(out), rg);
  t.set_backward(out_var, [=](Tape<T>& tp) {
    const Tensor<T>& dy = tp.grad(out_var);
    if (tp.requires_grad(x))
      kernels::gemm_nn<T>(n, in, out_dim, dy.data(), out_dim, tp.val(w).data(), in,
                          tp.grad(x).data(), in, true);
    if (tp.requires_grad(w))
      kernels::gemm_tn<T>(out_dim, in, n, dy.data(), out_dim, tp.val(x).data(), in,
                          tp.grad(w).data(), in, true);
    if (tp.requires_grad(b)) {
      Tensor<T>& db = tp.grad(b);
      for (int s = 0; s < n; ++s) {
        const T* row = dy.data() + static_cast<std::size_t>(s) * out_dim;
        for (int j = 0; j < out_dim; ++j) db[static_cast<std::size_t>(j)] += row[j];
      }
    }
  });
  return out_var;
}

// ---------------------------------------------------------------------------
// softmax + cross-entropy
// ---------------------------------------------------------------------------

// Numerically stable shifted softmax over the last axis of a (batch, classes)
// tensor; plain value computation for the inference path.
template <typename T>
Tensor<T> softmax_values(const Tensor<T>& logits) {
  if (logits.rank() != 2)
    throw std::invalid_argument("softmax expects (batch, classes), got " + logits.shape_str());
  const int n = logits.dim(0), c = logits.dim(1);
  Tensor<T> probs(logits.shape());
  for (int s = 0; s < n; ++s) {
    const T* row = logits.data() + static_cast<std::size_t>(s) * c;
    T* prow = probs.data() + static_cast<std::size_t>(s) * c;
    T m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(static_cast<double>(row[j] - m));
      prow[j] = static_cast<T>(e);
      z += e;
    }
    const T inv = static_cast<T>(1.0 / z);
    for (int j = 0; j < c; ++j) prow[j] *= inv;
  }
  return probs;
}

template <typename T>
struct XentResult {
  Var<T> loss;      // scalar, mean over the batch
  Tensor<T> probs;  // (batch, classes) softmax values
};

template <typename T>
XentResult<T> softmax_cross_entropy(Tape<T>& t, Var<T> logits, const std::vector<int>& labels) {
  const Tensor<T>& lv = t.val(logits);
  if (lv.rank() != 2)
    throw std::invalid_argument("softmax_cross_entropy expects (batch, classes) logits, got " +
                                lv.shape_str());
  const int n = lv.dim(0), c = lv.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy got " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(n));
  for (int s = 0; s < n; ++s)
    if (labels[static_cast<std::size_t>(s)] < 0 || labels[static_cast<std::size_t>(s)] >= c)
      throw std::invalid_argument("label " + std::to_string(labels[static_cast<std::size_t>(s)]) +
                                  " out of range [0," + std::to_string(c) + ") at sample index " +
                                  std::to_string(s));

  Tensor<T> probs(lv.shape());
  double loss_sum = 0.0;
  for (int s = 0; s < n; ++s) {
    const T* row = lv.data() + static_cast<std::size_t>(s) * c;
    T* prow = probs.data() + static_cast<std::size_t>(s) * c;
    T m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j] - m));
    const double logz = static_cast<double>(m) + std::log(z);
    for (int j = 0; j < c; ++j)
      prow[j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - logz));
    loss_sum += logz - static_cast<double>(row[labels[static_cast<std::size_t>(s)]]);
  }
  Tensor<T> loss({1});
  loss[0] = static_cast<T>(loss_sum / static_cast<double>(n));
  debug_check_finite(loss, "softmax_cross_entropy loss");

  Var<T> loss_var = t.alloc(std::move(loss), t.requires_grad(logits));
  Tensor<T> probs_copy = probs;
  t.set_backward(loss_var, [=, probs = std::move(probs_copy)](Tape<T>& tp) {
    const T g = tp.grad(loss_var)[0];
    Tensor<T>& dl = tp.grad(logits);
    const T invn = T(1) / static_cast<T>(n);
    for (int s = 0; s < n; ++s) {
      const T* prow = probs.data() + static_cast<std::size_t>(s) * c;
      T* drow = dl.data() + static_cast<std::size_t>(s) * c;
      const int lbl = labels[static_cast<std::size_t>(s)];
      for (int j = 0; j < c; ++j) {
        const T delta = (j == lbl) ? T(1) : T(0);
        drow[j] += g * invn * (prow[j] - delta);
      }
    }
  });
  return {loss_var, std::move(probs)};
}

// ---------------------------------------------------------------------------
// Small combinators
// ---------------------------------------------------------------------------

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  if (!av.same_shape(bv))
    throw std::invalid_argument("add shape mismatch: " + av.shape_str() + " vs " + bv.shape_str());
  Tensor<T> out = av;
  kernels::axpy<T>(bv.size(), T(1), bv.data(), out.data());
  Var<T> out_var = t.alloc(std::move(out), t.requires_grad(a) || t.requires_grad(b));
  t.set_backward(out_var, [=](Tape<T>& tp) {
    const Tensor<T>& dy = tp.grad(out_var);
    if (tp.requires_grad(a)) kernels::axpy<T>(dy.size(), T(1), dy.data(), tp.grad(a).data());
    if (tp.requires_grad(b)) kernels::axpy<T>(dy.size(), T(1), dy.data(), tp.grad(b).data());
  });
  return out_var;
}

// Weighted sum of scalar vars, accumulated in ascending input order so the
// floating-point result is reproducible and, with unit weights, exactly the
// plain running sum of its inputs.
template <typename T>
Var<T> weighted_sum_scalars(Tape<T>& t, const std::vector<Var<T>>& xs, const std::vector<T>& w) {
  if (xs.empty()) throw std::invalid_argument("weighted_sum_scalars on empty input");
  if (w.size() != xs.size())
    throw std::invalid_argument("weighted_sum_scalars weight count mismatch");
  bool rg = false;
  T total = T(0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor<T>& v = t.val(xs[i]);
    if (v.size() != 1) throw std::invalid_argument("weighted_sum_scalars expects scalar inputs");
    total += w[i] * v[0];
    rg = rg || t.requires_grad(xs[i]);
  }
  Tensor<T> out({1});
  out[0] = total;
  Var<T> out_var = t.alloc(std::move(out), rg);
  t.set_backward(out_var, [=](Tape<T>& tp) {
    const T g = tp.grad(out_var)[0];
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (tp.requires_grad(xs[i])) tp.grad(xs[i])[0] += w[i] * g;
  });
  return out_var;
}

// Reduces any tensor to a scalar via a fixed-weight dot product; the
// gradient-check harness drives ops through this.
template <typename T>
Var<T> reduce_weighted(Tape<T>& t, Var<T> x, const Tensor<T>& weights) {
  const Tensor<T>& xv = t.val(x);
  if (weights.size() != xv.size())
    throw std::invalid_argument("reduce_weighted weight size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i)
    acc += static_cast<double>(xv[i]) * static_cast<double>(weights[i]);
  Tensor<T> out({1});
  out[0] = static_cast<T>(acc);
  Var<T> out_var = t.alloc(std::move(out), t.requires_grad(x));
  Tensor<T> wcopy = weights;
  t.set_backward(out_var, [=, w = std::move(wcopy)](Tape<T>& tp) {
    const T g = tp.grad(out_var)[0];
    kernels::axpy<T>(w.size(), g, w.data(), tp.grad(x).data());
  });
  return out_var;
}

template <typename T>
Var<T> reduce_sum(Tape<T>& t, Var<T> x) {
  Tensor<T> ones(t.val(x).shape(), T(1));
  return reduce_weighted(t, x, ones);
}

}  // namespace grainnet
