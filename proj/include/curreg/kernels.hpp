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

#pragma once

// Data-parallel inner loops. Every routine has a portable scalar version and,
// on x86-64, an AVX2/FMA version. The active table is chosen once at startup
// from CPUID and can be overridden with CURREG_ISA=scalar|avx2. Each variant
// uses a fixed summation order, so results are deterministic per ISA; the
// variants agree with each other to rounding (see tests/test_kernels.cpp).

#include <string_view>

namespace curreg::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  // C[M x N] += A[M x K] * B[K x N]; row-major with leading dimensions.
  void (*gemm_nn)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc);
  // C[M x N] += A[M x K] * B[N x K]^T
  void (*gemm_nt)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc);
  // One separable pass over a depth x height x width block: out = taps (*)
  // in along `axis` (0 = depth, 1 = height, 2 = width), edge-replicated.
  // `taps` has 2 * radius + 1 entries; in and out must not alias.
  void (*blur_axis)(const float* in, float* out, int depth, int height, int width, int axis,
                    const float* taps, int radius);
  // Exact transpose of blur_axis (differs from blur_axis only at borders).
  void (*blur_axis_adjoint)(const float* in, float* out, int depth, int height, int width,
                            int axis, const float* taps, int radius);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

bool isa_available(Isa isa);
const KernelTable& table_for(Isa isa);
const KernelTable& active();
void set_active(Isa isa);
std::string_view isa_name(Isa isa);

// Scalar reference templates; also the only path for 64-bit tensors.
template <typename T>
void gemm_nn_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<long>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<long>(i) * lda + p];
      const T* brow = b + static_cast<long>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<long>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<long>(j) * ldb;
      T s = 0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[static_cast<long>(i) * ldc + j] += s;
    }
  }
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

template <typename T>
void blur_axis_ref(const T* in, T* out, int depth, int height, int width, int axis, const T* taps,
                   int radius) {
  const long plane = static_cast<long>(height) * width;
  const int taps_n = 2 * radius + 1;
  if (axis == 2) {
    for (long row = 0; row < static_cast<long>(depth) * height; ++row) {
      const T* src = in + row * width;
      T* dst = out + row * width;
      for (int x = 0; x < width; ++x) {
        T s = 0;
        for (int t = 0; t < taps_n; ++t) s += taps[t] * src[clamp_index(x + t - radius, width)];
        dst[x] = s;
      }
    }
    return;
  }
  const int n = axis == 0 ? depth : height;
  const long stride = axis == 0 ? plane : width;
  const int outer = axis == 0 ? 1 : depth;
  const long line = axis == 0 ? plane : width;
  for (int o = 0; o < outer; ++o) {
    const long base = static_cast<long>(o) * plane;
    for (int i = 0; i < n; ++i) {
      T* dst = out + base + i * stride;
      for (long x = 0; x < line; ++x) dst[x] = 0;
      for (int t = 0; t < taps_n; ++t) {
        const T* src = in + base + clamp_index(i + t - radius, n) * stride;
        const T tap = taps[t];
        for (long x = 0; x < line; ++x) dst[x] += tap * src[x];
      }
    }
  }
}

template <typename T>
void blur_axis_adjoint_ref(const T* in, T* out, int depth, int height, int width, int axis,
                           const T* taps, int radius) {
  const long plane = static_cast<long>(height) * width;
  const int taps_n = 2 * radius + 1;
  const long total = plane * depth;
  for (long i = 0; i < total; ++i) out[i] = 0;
  if (axis == 2) {
    for (long row = 0; row < static_cast<long>(depth) * height; ++row) {
      const T* src = in + row * width;
      T* dst = out + row * width;
      for (int x = 0; x < width; ++x) {
        for (int t = 0; t < taps_n; ++t) dst[clamp_index(x + t - radius, width)] += taps[t] * src[x];
      }
    }
    return;
  }
  const int n = axis == 0 ? depth : height;
  const long stride = axis == 0 ? plane : width;
  const int outer = axis == 0 ? 1 : depth;
  const long line = axis == 0 ? plane : width;
  for (int o = 0; o < outer; ++o) {
    const long base = static_cast<long>(o) * plane;
    for (int i = 0; i < n; ++i) {
      const T* src = in + base + i * stride;
      for (int t = 0; t < taps_n; ++t) {
        T* dst = out + base + clamp_index(i + t - radius, n) * stride;
        const T tap = taps[t];
        for (long x = 0; x < line; ++x) dst[x] += tap * src[x];
      }
    }
  }
}

// Typed dispatch: float goes through the active table, double stays scalar.
inline void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                    int ldc) {
  active().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}
inline void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
                    double* c, int ldc) {
  gemm_nn_ref(m, n, k, a, lda, b, ldb, c, ldc);
}
inline void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                    int ldc) {
  active().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
}
inline void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
                    double* c, int ldc) {
  gemm_nt_ref(m, n, k, a, lda, b, ldb, c, ldc);
}
inline void blur_axis(const float* in, float* out, int d, int h, int w, int axis, const float* taps,
                      int radius) {
  active().blur_axis(in, out, d, h, w, axis, taps, radius);
}
inline void blur_axis(const double* in, double* out, int d, int h, int w, int axis,
                      const double* taps, int radius) {
  blur_axis_ref(in, out, d, h, w, axis, taps, radius);
}
inline void blur_axis_adjoint(const float* in, float* out, int d, int h, int w, int axis,
                              const float* taps, int radius) {
  active().blur_axis_adjoint(in, out, d, h, w, axis, taps, radius);
}
inline void blur_axis_adjoint(const double* in, double* out, int d, int h, int w, int axis,
                              const double* taps, int radius) {
  blur_axis_adjoint_ref(in, out, d, h, w, axis, taps, radius);
}

}  // namespace curreg::kernels
