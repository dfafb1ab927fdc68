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

// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "curreg/kernels.hpp"

namespace curreg::kernels {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_hadd_ps(s, s);
  s = _mm_hadd_ps(s, s);
  return _mm_cvtss_f32(s);
}

// MR rows of C by 16 columns, accumulated in registers across all of K.
template <int MR>
inline void micro_16(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  __m256 acc[MR][2];
  for (int r = 0; r < MR; ++r) {
    acc[r][0] = _mm256_loadu_ps(c + static_cast<long>(r) * ldc);
    acc[r][1] = _mm256_loadu_ps(c + static_cast<long>(r) * ldc + 8);
  }
  for (int p = 0; p < k; ++p) {
    const float* brow = b + static_cast<long>(p) * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + static_cast<long>(r) * lda + p);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    _mm256_storeu_ps(c + static_cast<long>(r) * ldc, acc[r][0]);
    _mm256_storeu_ps(c + static_cast<long>(r) * ldc + 8, acc[r][1]);
  }
}

template <int MR>
inline void micro_8(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  __m256 acc[MR];
  for (int r = 0; r < MR; ++r) acc[r] = _mm256_loadu_ps(c + static_cast<long>(r) * ldc);
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + static_cast<long>(p) * ldb);
    for (int r = 0; r < MR; ++r) {
      acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + static_cast<long>(r) * lda + p), b0, acc[r]);
    }
  }
  for (int r = 0; r < MR; ++r) _mm256_storeu_ps(c + static_cast<long>(r) * ldc, acc[r]);
}

template <int MR>
void gemm_nn_rows(int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc) {
  int j = 0;
  for (; j + 16 <= n; j += 16) micro_16<MR>(k, a, lda, b + j, ldb, c + j, ldc);
  for (; j + 8 <= n; j += 8) micro_8<MR>(k, a, lda, b + j, ldb, c + j, ldc);
  for (; j < n; ++j) {
    for (int r = 0; r < MR; ++r) {
      float s = c[static_cast<long>(r) * ldc + j];
      for (int p = 0; p < k; ++p) {
        s = std::fma(a[static_cast<long>(r) * lda + p], b[static_cast<long>(p) * ldb + j], s);
      }
      c[static_cast<long>(r) * ldc + j] = s;
    }
  }
}

void gemm_nn_avx2(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc) {
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    gemm_nn_rows<4>(n, k, a + static_cast<long>(i) * lda, lda, b, ldb, c + static_cast<long>(i) * ldc, ldc);
  }
  const long ai = static_cast<long>(i) * lda;
  const long ci = static_cast<long>(i) * ldc;
  switch (m - i) {
    case 3: gemm_nn_rows<3>(n, k, a + ai, lda, b, ldb, c + ci, ldc); break;
    case 2: gemm_nn_rows<2>(n, k, a + ai, lda, b, ldb, c + ci, ldc); break;
    case 1: gemm_nn_rows<1>(n, k, a + ai, lda, b, ldb, c + ci, ldc); break;
    default: break;
  }
}

inline float dot_avx2(const float* x, const float* y, int k) {
  __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
  __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
  int p = 0;
  for (; p + 32 <= k; p += 32) {
    s0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + p), _mm256_loadu_ps(y + p), s0);
    s1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + p + 8), _mm256_loadu_ps(y + p + 8), s1);
    s2 = _mm256_fmadd_ps(_mm256_loadu_ps(x + p + 16), _mm256_loadu_ps(y + p + 16), s2);
    s3 = _mm256_fmadd_ps(_mm256_loadu_ps(x + p + 24), _mm256_loadu_ps(y + p + 24), s3);
  }
  for (; p + 8 <= k; p += 8) s0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + p), _mm256_loadu_ps(y + p), s0);
  float s = hsum(_mm256_add_ps(_mm256_add_ps(s0, s1), _mm256_add_ps(s2, s3)));
  for (; p < k; ++p) s = std::fma(x[p], y[p], s);
  return s;
}

void gemm_nt_avx2(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<long>(i) * lda;
    float* crow = c + static_cast<long>(i) * ldc;
    for (int j = 0; j < n; ++j) crow[j] += dot_avx2(arow, b + static_cast<long>(j) * ldb, k);
  }
}

// dst[0..n) (op)= tap * src[0..n)
inline void axpy_line(float tap, const float* src, float* dst, long n) {
  const __m256 t = _mm256_set1_ps(tap);
  long x = 0;
  for (; x + 8 <= n; x += 8) {
    _mm256_storeu_ps(dst + x, _mm256_fmadd_ps(t, _mm256_loadu_ps(src + x), _mm256_loadu_ps(dst + x)));
  }
  for (; x < n; ++x) dst[x] = std::fma(tap, src[x], dst[x]);
}

void blur_axis_avx2(const float* in, float* out, int depth, int height, int width, int axis,
                    const float* taps, int radius) {
  const long plane = static_cast<long>(height) * width;
  const int taps_n = 2 * radius + 1;
  if (axis == 2) {
    for (long row = 0; row < static_cast<long>(depth) * height; ++row) {
      const float* src = in + row * width;
      float* dst = out + row * width;
      int x = 0;
      // Left border, vector interior, right border.
      for (; x < width && x < radius; ++x) {
        float s = 0;
        for (int t = 0; t < taps_n; ++t) s = std::fma(taps[t], src[clamp_index(x + t - radius, width)], s);
        dst[x] = s;
      }
      for (; x + 8 + radius <= width; x += 8) {
        __m256 s = _mm256_setzero_ps();
        for (int t = 0; t < taps_n; ++t) {
          s = _mm256_fmadd_ps(_mm256_set1_ps(taps[t]), _mm256_loadu_ps(src + x + t - radius), s);
        }
        _mm256_storeu_ps(dst + x, s);
      }
      for (; x < width; ++x) {
        float s = 0;
        for (int t = 0; t < taps_n; ++t) s = std::fma(taps[t], src[clamp_index(x + t - radius, width)], s);
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
      float* dst = out + base + i * stride;
      for (long x = 0; x < line; ++x) dst[x] = 0;
      for (int t = 0; t < taps_n; ++t) {
        axpy_line(taps[t], in + base + clamp_index(i + t - radius, n) * stride, dst, line);
      }
    }
  }
}

void blur_axis_adjoint_avx2(const float* in, float* out, int depth, int height, int width, int axis,
                            const float* taps, int radius) {
  const long plane = static_cast<long>(height) * width;
  const int taps_n = 2 * radius + 1;
  const long total = plane * depth;
  for (long i = 0; i < total; ++i) out[i] = 0;
  if (axis == 2) {
    for (long row = 0; row < static_cast<long>(depth) * height; ++row) {
      const float* src = in + row * width;
      float* dst = out + row * width;
      for (int x = 0; x < width; ++x) {
        for (int t = 0; t < taps_n; ++t) {
          float& d = dst[clamp_index(x + t - radius, width)];
          d = std::fma(taps[t], src[x], d);
        }
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
      for (int t = 0; t < taps_n; ++t) {
        axpy_line(taps[t], in + base + i * stride, out + base + clamp_index(i + t - radius, n) * stride, line);
      }
    }
  }
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable table{Isa::kAvx2,   "avx2",         &gemm_nn_avx2,
                                 &gemm_nt_avx2, &blur_axis_avx2, &blur_axis_adjoint_avx2};
  return &table;
}

}  // namespace curreg::kernels
