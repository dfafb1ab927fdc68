/*
 * Copyright 2026 The curreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "curreg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "curreg/error.hpp"
#include "curreg/kernels.hpp"

namespace curreg {
namespace {

template <typename T>
bool tracking(const Tape& tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (!tape.enabled()) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

struct Grid3 {
  int d, h, w;
  long size() const { return static_cast<long>(d) * h * w; }
};

// Correspondence between a "big" grid and a "small" grid: small position o
// with kernel offset k touches big position o * stride - pad + k. For conv3d
// the big grid is the input; for conv_transpose3d it is the output.
struct PatchGeometry {
  int channels;  // of the big grid
  Grid3 big;
  Grid3 small;
  int kd, kh, kw;
  int stride, pad;

  int rows() const { return channels * kd * kh * kw; }
  int small_rows() const { return small.d * small.h; }
};

// Tiles cover whole rows (fixed d, h) of the small grid.
constexpr int kTileTarget = 256;

int tile_rows(const PatchGeometry& g) { return std::max(1, kTileTarget / g.small.w); }

template <typename T, bool kScatter>
void patch_transfer(const PatchGeometry& g, T* big, T* col, int row0, int nrows) {
  const int ws = g.small.w;
  const long tn = static_cast<long>(nrows) * ws;
  long r = 0;
  for (int c = 0; c < g.channels; ++c) {
    for (int a = 0; a < g.kd; ++a) {
      for (int bb = 0; bb < g.kh; ++bb) {
        for (int e = 0; e < g.kw; ++e, ++r) {
          T* crow = col + r * tn;
          const int lo = std::clamp(ceil_div(g.pad - e, g.stride), 0, ws);
          const int hi = std::clamp(floor_div(g.big.w - 1 + g.pad - e, g.stride) + 1, lo, ws);
          for (int rr = 0; rr < nrows; ++rr) {
            const int srow = row0 + rr;
            const int od = srow / g.small.h;
            const int oh = srow % g.small.h;
            const int id = od * g.stride - g.pad + a;
            const int ih = oh * g.stride - g.pad + bb;
            T* cseg = crow + static_cast<long>(rr) * ws;
            const bool inside = id >= 0 && id < g.big.d && ih >= 0 && ih < g.big.h;
            if constexpr (!kScatter) {
              if (!inside) {
                std::fill(cseg, cseg + ws, T(0));
                continue;
              }
              std::fill(cseg, cseg + lo, T(0));
              std::fill(cseg + hi, cseg + ws, T(0));
            } else {
              if (!inside) continue;
            }
            T* bseg = big + ((static_cast<long>(c) * g.big.d + id) * g.big.h + ih) * g.big.w - g.pad + e;
            if (g.stride == 1) {
              if constexpr (kScatter) {
                for (int o = lo; o < hi; ++o) bseg[o] += cseg[o];
              } else {
                std::memcpy(cseg + lo, bseg + lo, sizeof(T) * (hi - lo));
              }
            } else {
              for (int o = lo; o < hi; ++o) {
                if constexpr (kScatter) {
                  bseg[static_cast<long>(o) * g.stride] += cseg[o];
                } else {
                  cseg[o] = bseg[static_cast<long>(o) * g.stride];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void im2col(const PatchGeometry& g, const T* big, T* col, int row0, int nrows) {
  patch_transfer<T, false>(g, const_cast<T*>(big), col, row0, nrows);
}

template <typename T>
void col2im_add(const PatchGeometry& g, T* big, const T* col, int row0, int nrows) {
  patch_transfer<T, true>(g, big, const_cast<T*>(col), row0, nrows);
}

template <typename T>
std::vector<T> transpose(const T* m, int rows, int cols) {
  std::vector<T> t(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) t[static_cast<std::size_t>(j) * rows + i] = m[static_cast<std::size_t>(i) * cols + j];
  }
  return t;
}

void check_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.rank() != rank) {
    throw ConfigError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " + s.str());
  }
}

struct ConvArgs {
  int n, cin, cout, kd, kh, kw;
};

template <typename T>
ConvArgs check_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int padding,
                    bool transposed) {
  check_rank(x.shape(), 5, "conv input");
  check_rank(w.shape(), 5, "conv weights");
  if (stride < 1) throw ConfigError("conv stride must be >= 1");
  if (padding < 0) throw ConfigError("conv padding must be >= 0");
  ConvArgs a{x.dim(0), x.dim(1), transposed ? w.dim(1) : w.dim(0), w.dim(2), w.dim(3), w.dim(4)};
  const int w_in = transposed ? w.dim(0) : w.dim(1);
  if (w_in != a.cin) {
    throw ConfigError("conv channel mismatch: input " + x.shape().str() + " vs weights " + w.shape().str());
  }
  if (b.defined() && (b.shape().rank() != 1 || b.dim(0) != a.cout)) {
    throw ConfigError("conv bias must have shape (" + std::to_string(a.cout) + "), got " + b.shape().str());
  }
  return a;
}

}  // namespace

template <typename T>
Tensor<T> conv3d(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int padding) {
  const ConvArgs a = check_conv(x, w, b, stride, padding, false);
  const Grid3 in{x.dim(2), x.dim(3), x.dim(4)};
  if (in.d + 2 * padding < a.kd || in.h + 2 * padding < a.kh || in.w + 2 * padding < a.kw) {
    throw ConfigError("conv kernel " + w.shape().str() + " does not fit input " + x.shape().str());
  }
  const Grid3 out{(in.d + 2 * padding - a.kd) / stride + 1, (in.h + 2 * padding - a.kh) / stride + 1,
                  (in.w + 2 * padding - a.kw) / stride + 1};
  const PatchGeometry g{a.cin, in, out, a.kd, a.kh, a.kw, stride, padding};
  const int k = g.rows();
  const long ns = out.size();
  const long nb = in.size();
  Tensor<T> y = Tensor<T>::zeros(Shape{a.n, a.cout, out.d, out.h, out.w});
  const int trows = tile_rows(g);
  std::vector<T> col(static_cast<std::size_t>(k) * trows * out.w);
  T* yd = y.mutable_data();
  for (int n = 0; n < a.n; ++n) {
    const T* xn = x.data() + static_cast<long>(n) * a.cin * nb;
    T* yn = yd + static_cast<long>(n) * a.cout * ns;
    if (b.defined()) {
      for (int co = 0; co < a.cout; ++co) std::fill(yn + co * ns, yn + (co + 1) * ns, b.data()[co]);
    }
    for (int row0 = 0; row0 < g.small_rows(); row0 += trows) {
      const int nrows = std::min(trows, g.small_rows() - row0);
      const int tn = nrows * out.w;
      im2col(g, xn, col.data(), row0, nrows);
      kernels::gemm_nn(a.cout, tn, k, w.data(), k, col.data(), tn, yn + static_cast<long>(row0) * out.w,
                       static_cast<int>(ns));
    }
  }
  if (tracking(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    tape.record("conv3d", [x, w, b, y, g, a, ns, nb, trows]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      const int k = g.rows();
      T* dw = w.requires_grad() ? w.grad_buffer().data() : nullptr;
      T* dx = x.requires_grad() ? x.grad_buffer().data() : nullptr;
      std::vector<T> col(static_cast<std::size_t>(k) * trows * g.small.w);
      std::vector<T> wt;
      if (dx) wt = transpose(w.data(), a.cout, k);
      for (int n = 0; n < a.n; ++n) {
        const T* xn = x.data() + static_cast<long>(n) * a.cin * nb;
        const T* gyn = gy + static_cast<long>(n) * a.cout * ns;
        for (int row0 = 0; row0 < g.small_rows(); row0 += trows) {
          const int nrows = std::min(trows, g.small_rows() - row0);
          const int tn = nrows * g.small.w;
          const T* gtile = gyn + static_cast<long>(row0) * g.small.w;
          if (dw) {
            im2col(g, xn, col.data(), row0, nrows);
            kernels::gemm_nt(a.cout, k, tn, gtile, static_cast<int>(ns), col.data(), tn, dw, k);
          }
          if (dx) {
            std::fill(col.begin(), col.begin() + static_cast<long>(k) * tn, T(0));
            kernels::gemm_nn(k, tn, a.cout, wt.data(), a.cout, gtile, static_cast<int>(ns), col.data(), tn);
            col2im_add(g, dx + static_cast<long>(n) * a.cin * nb, col.data(), row0, nrows);
          }
        }
      }
      if (b.defined() && b.requires_grad()) {
        T* db = b.grad_buffer().data();
        for (int n = 0; n < a.n; ++n) {
          for (int co = 0; co < a.cout; ++co) {
            const T* s = gy + (static_cast<long>(n) * a.cout + co) * ns;
            T acc = 0;
            for (long i = 0; i < ns; ++i) acc += s[i];
            db[co] += acc;
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> conv_transpose3d(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                           int stride, int padding) {
  const ConvArgs a = check_conv(x, w, b, stride, padding, true);
  const Grid3 in{x.dim(2), x.dim(3), x.dim(4)};
  const Grid3 out{(in.d - 1) * stride - 2 * padding + a.kd, (in.h - 1) * stride - 2 * padding + a.kh,
                  (in.w - 1) * stride - 2 * padding + a.kw};
  if (out.d < 1 || out.h < 1 || out.w < 1) {
    throw ConfigError("transposed conv produces an empty output for input " + x.shape().str());
  }
  const PatchGeometry g{a.cout, out, in, a.kd, a.kh, a.kw, stride, padding};
  const int k = g.rows();
  const long ns = in.size();
  const long nb = out.size();
  Tensor<T> y = Tensor<T>::zeros(Shape{a.n, a.cout, out.d, out.h, out.w});
  const int trows = tile_rows(g);
  std::vector<T> col(static_cast<std::size_t>(k) * trows * in.w);
  const std::vector<T> wt = transpose(w.data(), a.cin, k);
  T* yd = y.mutable_data();
  for (int n = 0; n < a.n; ++n) {
    const T* xn = x.data() + static_cast<long>(n) * a.cin * ns;
    T* yn = yd + static_cast<long>(n) * a.cout * nb;
    for (int row0 = 0; row0 < g.small_rows(); row0 += trows) {
      const int nrows = std::min(trows, g.small_rows() - row0);
      const int tn = nrows * in.w;
      std::fill(col.begin(), col.begin() + static_cast<long>(k) * tn, T(0));
      kernels::gemm_nn(k, tn, a.cin, wt.data(), a.cin, xn + static_cast<long>(row0) * in.w,
                       static_cast<int>(ns), col.data(), tn);
      col2im_add(g, yn, col.data(), row0, nrows);
    }
    if (b.defined()) {
      for (int co = 0; co < a.cout; ++co) {
        const T bv = b.data()[co];
        for (long i = 0; i < nb; ++i) yn[co * nb + i] += bv;
      }
    }
  }
  if (tracking(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    tape.record("conv_transpose3d", [x, w, b, y, g, a, ns, nb, trows]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      const int k = g.rows();
      T* dw = w.requires_grad() ? w.grad_buffer().data() : nullptr;
      T* dx = x.requires_grad() ? x.grad_buffer().data() : nullptr;
      std::vector<T> col(static_cast<std::size_t>(k) * trows * g.small.w);
      for (int n = 0; n < a.n; ++n) {
        const T* xn = x.data() + static_cast<long>(n) * a.cin * ns;
        const T* gyn = gy + static_cast<long>(n) * a.cout * nb;
        for (int row0 = 0; row0 < g.small_rows(); row0 += trows) {
          const int nrows = std::min(trows, g.small_rows() - row0);
          const int tn = nrows * g.small.w;
          im2col(g, gyn, col.data(), row0, nrows);
          if (dx) {
            kernels::gemm_nn(a.cin, tn, k, w.data(), k, col.data(), tn,
                             dx + static_cast<long>(n) * a.cin * ns + static_cast<long>(row0) * g.small.w,
                             static_cast<int>(ns));
          }
          if (dw) {
            kernels::gemm_nt(a.cin, k, tn, xn + static_cast<long>(row0) * g.small.w, static_cast<int>(ns),
                             col.data(), tn, dw, k);
          }
        }
      }
      if (b.defined() && b.requires_grad()) {
        T* db = b.grad_buffer().data();
        for (int n = 0; n < a.n; ++n) {
          for (int co = 0; co < a.cout; ++co) {
            const T* s = gy + (static_cast<long>(n) * a.cout + co) * nb;
            T acc = 0;
            for (long i = 0; i < nb; ++i) acc += s[i];
            db[co] += acc;
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> leaky_relu(Tape& tape, const Tensor<T>& x, double negative_slope) {
  if (!(negative_slope > 0.0 && negative_slope < 1.0)) {
    throw ConfigError("leaky_relu negative_slope must lie in (0, 1)");
  }
  const T slope = static_cast<T>(negative_slope);
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const T* xv = x.data();
  T* yv = y.mutable_data();
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) yv[i] = xv[i] >= T(0) ? xv[i] : slope * xv[i];
  if (tracking(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record("leaky_relu", [x, y, slope]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      const T* xv = x.data();
      T* gx = x.grad_buffer().data();
      for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += xv[i] >= T(0) ? gy[i] : slope * gy[i];
    });
  }
  return y;
}

namespace {

// Keep flags for inverted dropout: two 32-bit uniforms per draw, an element
// survives when its draw >= rate * 2^32. Branch-free (the flag is the inverted
// borrow of draw - threshold); the decisions are unpredictable by design.
std::vector<std::uint8_t> dropout_keep(std::size_t n, double rate, Rng& rng) {
  const std::uint64_t threshold = static_cast<std::uint64_t>(std::llround(rate * 4294967296.0));
  std::vector<std::uint8_t> keep(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const std::uint64_t r = rng.next_u64();
    keep[i] = static_cast<std::uint8_t>(1 - (((r & 0xFFFFFFFFu) - threshold) >> 63));
    if (i + 1 < n) keep[i + 1] = static_cast<std::uint8_t>(1 - (((r >> 32) - threshold) >> 63));
  }
  return keep;
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

}  // namespace

template <typename T>
Tensor<T> dropout(Tape& tape, const Tensor<T>& x, double rate, Rng& rng, bool training) {
  check_rate(rate);
  if (!training || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  const std::size_t n = x.numel();
  std::vector<std::uint8_t> keep = dropout_keep(n, rate, rng);
  const T* xv = x.data();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] * (static_cast<T>(keep[i]) * keep_scale);
  Tensor<T> y = Tensor<T>::from(x.shape(), std::move(out));
  if (tracking(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record("dropout", [x, y, keep = std::move(keep), keep_scale]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      T* gx = x.grad_buffer().data();
      for (std::size_t i = 0; i < keep.size(); ++i) gx[i] += gy[i] * (static_cast<T>(keep[i]) * keep_scale);
    });
  }
  return y;
}

template <typename T>
Tensor<T> leaky_relu_dropout(Tape& tape, const Tensor<T>& x, double negative_slope, double rate, Rng& rng) {
  if (!(negative_slope > 0.0 && negative_slope < 1.0)) {
    throw ConfigError("leaky_relu negative_slope must lie in (0, 1)");
  }
  check_rate(rate);
  if (rate == 0.0) throw ConfigError("leaky_relu_dropout needs a positive rate");
  const T slope = static_cast<T>(negative_slope);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  const std::size_t n = x.numel();
  std::vector<std::uint8_t> keep = dropout_keep(n, rate, rng);
  const T* xv = x.data();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T a = xv[i] >= T(0) ? xv[i] : slope * xv[i];
    out[i] = a * (static_cast<T>(keep[i]) * keep_scale);
  }
  Tensor<T> y = Tensor<T>::from(x.shape(), std::move(out));
  if (tracking(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record("leaky_relu_dropout", [x, y, keep = std::move(keep), keep_scale, slope]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      const T* xv = x.data();
      T* gx = x.grad_buffer().data();
      for (std::size_t i = 0; i < keep.size(); ++i) {
        const T g = gy[i] * (static_cast<T>(keep[i]) * keep_scale);
        gx[i] += xv[i] >= T(0) ? g : slope * g;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> concat_channels(Tape& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().rank() < 2 || a.shape().rank() != b.shape().rank() || a.dim(0) != b.dim(0)) {
    throw ConfigError("concat_channels shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  }
  std::vector<int> dims = a.shape().dims();
  for (std::size_t i = 2; i < dims.size(); ++i) {
    if (dims[i] != b.dim(i)) {
      throw ConfigError("concat_channels shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
    }
  }
  const int n = a.dim(0);
  const long sa = static_cast<long>(a.numel() / n);
  const long sb = static_cast<long>(b.numel() / n);
  dims[1] += b.dim(1);
  Tensor<T> y = Tensor<T>::zeros(Shape(dims));
  T* yv = y.mutable_data();
  for (int i = 0; i < n; ++i) {
    std::copy(a.data() + i * sa, a.data() + (i + 1) * sa, yv + i * (sa + sb));
    std::copy(b.data() + i * sb, b.data() + (i + 1) * sb, yv + i * (sa + sb) + sa);
  }
  if (tracking(tape, {&a, &b})) {
    y.set_requires_grad(true);
    tape.record("concat_channels", [a, b, y, n, sa, sb]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      if (a.requires_grad()) {
        T* ga = a.grad_buffer().data();
        for (int i = 0; i < n; ++i) {
          for (long j = 0; j < sa; ++j) ga[i * sa + j] += gy[i * (sa + sb) + j];
        }
      }
      if (b.requires_grad()) {
        T* gb = b.grad_buffer().data();
        for (int i = 0; i < n; ++i) {
          for (long j = 0; j < sb; ++j) gb[i * sb + j] += gy[i * (sa + sb) + sa + j];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> add(Tape& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ConfigError("add shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) y.mutable_data()[i] = a.data()[i] + b.data()[i];
  if (tracking(tape, {&a, &b})) {
    y.set_requires_grad(true);
    tape.record("add", [a, b, y]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      for (const Tensor<T>* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        T* g = t->grad_buffer().data();
        for (std::size_t i = 0; i < t->numel(); ++i) g[i] += gy[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul(Tape& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ConfigError("mul shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) y.mutable_data()[i] = a.data()[i] * b.data()[i];
  if (tracking(tape, {&a, &b})) {
    y.set_requires_grad(true);
    tape.record("mul", [a, b, y]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      if (a.requires_grad()) {
        T* g = a.grad_buffer().data();
        for (std::size_t i = 0; i < a.numel(); ++i) g[i] += gy[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        T* g = b.grad_buffer().data();
        for (std::size_t i = 0; i < b.numel(); ++i) g[i] += gy[i] * a.data()[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> scale(Tape& tape, const Tensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) y.mutable_data()[i] = f * a.data()[i];
  if (tracking(tape, {&a})) {
    y.set_requires_grad(true);
    tape.record("scale", [a, y, f]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      T* g = a.grad_buffer().data();
      for (std::size_t i = 0; i < a.numel(); ++i) g[i] += f * gy[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> sum(Tape& tape, const Tensor<T>& a) {
  T s = 0;
  for (T v : a.values()) s += v;
  Tensor<T> y = Tensor<T>::scalar(s);
  if (tracking(tape, {&a})) {
    y.set_requires_grad(true);
    tape.record("sum", [a, y]() mutable {
      if (!y.has_grad()) return;
      const T gy = y.grad()[0];
      T* g = a.grad_buffer().data();
      for (std::size_t i = 0; i < a.numel(); ++i) g[i] += gy;
    });
  }
  return y;
}

template <typename T>
Tensor<T> mean(Tape& tape, const Tensor<T>& a) {
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a.numel()));
}

template <typename T>
Tensor<T> global_avg_pool(Tape& tape, const Tensor<T>& x) {
  check_rank(x.shape(), 5, "global_avg_pool input");
  const int n = x.dim(0), c = x.dim(1);
  const long vox = static_cast<long>(x.numel() / (static_cast<std::size_t>(n) * c));
  Tensor<T> y = Tensor<T>::zeros(Shape{n, c});
  for (long i = 0; i < static_cast<long>(n) * c; ++i) {
    T s = 0;
    for (long v = 0; v < vox; ++v) s += x.data()[i * vox + v];
    y.mutable_data()[i] = s / static_cast<T>(vox);
  }
  if (tracking(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record("global_avg_pool", [x, y, n, c, vox]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      T* g = x.grad_buffer().data();
      for (long i = 0; i < static_cast<long>(n) * c; ++i) {
        const T v = gy[i] / static_cast<T>(vox);
        for (long j = 0; j < vox; ++j) g[i * vox + j] += v;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> linear(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  check_rank(x.shape(), 2, "linear input");
  check_rank(w.shape(), 2, "linear weights");
  const int n = x.dim(0), cin = x.dim(1), cout = w.dim(0);
  if (w.dim(1) != cin) throw ConfigError("linear shape mismatch: " + x.shape().str() + " vs " + w.shape().str());
  if (b.defined() && (b.shape().rank() != 1 || b.dim(0) != cout)) throw ConfigError("linear bias shape mismatch");
  Tensor<T> y = Tensor<T>::zeros(Shape{n, cout});
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < cout; ++o) {
      T s = b.defined() ? b.data()[o] : T(0);
      for (int j = 0; j < cin; ++j) s += w.data()[o * cin + j] * x.data()[i * cin + j];
      y.mutable_data()[i * cout + o] = s;
    }
  }
  if (tracking(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    tape.record("linear", [x, w, b, y, n, cin, cout]() mutable {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      if (x.requires_grad()) {
        T* gx = x.grad_buffer().data();
        for (int i = 0; i < n; ++i) {
          for (int o = 0; o < cout; ++o) {
            for (int j = 0; j < cin; ++j) gx[i * cin + j] += gy[i * cout + o] * w.data()[o * cin + j];
          }
        }
      }
      if (w.requires_grad()) {
        T* gw = w.grad_buffer().data();
        for (int i = 0; i < n; ++i) {
          for (int o = 0; o < cout; ++o) {
            for (int j = 0; j < cin; ++j) gw[o * cin + j] += gy[i * cout + o] * x.data()[i * cin + j];
          }
        }
      }
      if (b.defined() && b.requires_grad()) {
        T* gb = b.grad_buffer().data();
        for (int i = 0; i < n; ++i) {
          for (int o = 0; o < cout; ++o) gb[o] += gy[i * cout + o];
        }
      }
    });
  }
  return y;
}

namespace reference {

template <typename T>
Tensor<T> conv3d_naive(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                       int padding) {
  const ConvArgs a = check_conv(x, w, b, stride, padding, false);
  const int D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int od = (D + 2 * padding - a.kd) / stride + 1;
  const int oh = (H + 2 * padding - a.kh) / stride + 1;
  const int ow = (W + 2 * padding - a.kw) / stride + 1;
  Tensor<T> y = Tensor<T>::zeros(Shape{a.n, a.cout, od, oh, ow});
  auto xi = [&](int n, int c, int d, int h, int w_) {
    return x.data()[(((static_cast<long>(n) * a.cin + c) * D + d) * H + h) * W + w_];
  };
  auto wi = [&](int co, int ci, int p, int q, int r) {
    return w.data()[(((static_cast<long>(co) * a.cin + ci) * a.kd + p) * a.kh + q) * a.kw + r];
  };
  T* out = y.mutable_data();
  for (int n = 0; n < a.n; ++n)
    for (int co = 0; co < a.cout; ++co)
      for (int z = 0; z < od; ++z)
        for (int yy = 0; yy < oh; ++yy)
          for (int xx = 0; xx < ow; ++xx) {
            T s = b.defined() ? b.data()[co] : T(0);
            for (int ci = 0; ci < a.cin; ++ci)
              for (int p = 0; p < a.kd; ++p)
                for (int q = 0; q < a.kh; ++q)
                  for (int r = 0; r < a.kw; ++r) {
                    const int d = z * stride - padding + p;
                    const int h = yy * stride - padding + q;
                    const int w_ = xx * stride - padding + r;
                    if (d < 0 || d >= D || h < 0 || h >= H || w_ < 0 || w_ >= W) continue;
                    s += xi(n, ci, d, h, w_) * wi(co, ci, p, q, r);
                  }
            out[(((static_cast<long>(n) * a.cout + co) * od + z) * oh + yy) * ow + xx] = s;
          }
  return y;
}

template <typename T>
Tensor<T> conv_transpose3d_naive(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                 int stride, int padding) {
  const ConvArgs a = check_conv(x, w, b, stride, padding, true);
  const int D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int od = (D - 1) * stride - 2 * padding + a.kd;
  const int oh = (H - 1) * stride - 2 * padding + a.kh;
  const int ow = (W - 1) * stride - 2 * padding + a.kw;
  Tensor<T> y = Tensor<T>::zeros(Shape{a.n, a.cout, od, oh, ow});
  T* out = y.mutable_data();
  for (int n = 0; n < a.n; ++n)
    for (int ci = 0; ci < a.cin; ++ci)
      for (int z = 0; z < D; ++z)
        for (int yy = 0; yy < H; ++yy)
          for (int xx = 0; xx < W; ++xx) {
            const T xv = x.data()[(((static_cast<long>(n) * a.cin + ci) * D + z) * H + yy) * W + xx];
            for (int co = 0; co < a.cout; ++co)
              for (int p = 0; p < a.kd; ++p)
                for (int q = 0; q < a.kh; ++q)
                  for (int r = 0; r < a.kw; ++r) {
                    const int d = z * stride - padding + p;
                    const int h = yy * stride - padding + q;
                    const int w_ = xx * stride - padding + r;
                    if (d < 0 || d >= od || h < 0 || h >= oh || w_ < 0 || w_ >= ow) continue;
                    const T wv = w.data()[(((static_cast<long>(ci) * a.cout + co) * a.kd + p) * a.kh + q) * a.kw + r];
                    out[(((static_cast<long>(n) * a.cout + co) * od + d) * oh + h) * ow + w_] += xv * wv;
                  }
          }
  if (b.defined()) {
    const long vox = static_cast<long>(od) * oh * ow;
    for (int n = 0; n < a.n; ++n)
      for (int co = 0; co < a.cout; ++co)
        for (long i = 0; i < vox; ++i) out[(static_cast<long>(n) * a.cout + co) * vox + i] += b.data()[co];
  }
  return y;
}

}  // namespace reference

#define CURREG_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> conv3d(Tape&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> conv_transpose3d(Tape&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                      int, int);                                                    \
  template Tensor<T> leaky_relu(Tape&, const Tensor<T>&, double);                                   \
  template Tensor<T> dropout(Tape&, const Tensor<T>&, double, Rng&, bool);                          \
  template Tensor<T> leaky_relu_dropout(Tape&, const Tensor<T>&, double, double, Rng&);            \
  template Tensor<T> concat_channels(Tape&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> add(Tape&, const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(Tape&, const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(Tape&, const Tensor<T>&, double);                                        \
  template Tensor<T> sum(Tape&, const Tensor<T>&);                                                  \
  template Tensor<T> mean(Tape&, const Tensor<T>&);                                                 \
  template Tensor<T> global_avg_pool(Tape&, const Tensor<T>&);                                      \
  template Tensor<T> linear(Tape&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> reference::conv3d_naive(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                             int, int);                                             \
  template Tensor<T> reference::conv_transpose3d_naive(const Tensor<T>&, const Tensor<T>&,          \
                                                       const Tensor<T>&, int, int);

CURREG_INSTANTIATE_OPS(float)
CURREG_INSTANTIATE_OPS(double)

}  // namespace curreg
