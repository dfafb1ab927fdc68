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

#include "curreg/kernels.hpp"

namespace curreg::kernels {
namespace {

void gemm_nn_scalar(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                    int ldc) {
  gemm_nn_ref(m, n, k, a, lda, b, ldb, c, ldc);
}
void gemm_nt_scalar(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                    int ldc) {
  gemm_nt_ref(m, n, k, a, lda, b, ldb, c, ldc);
}
void blur_axis_scalar(const float* in, float* out, int d, int h, int w, int axis, const float* taps,
                      int radius) {
  blur_axis_ref(in, out, d, h, w, axis, taps, radius);
}
void blur_axis_adjoint_scalar(const float* in, float* out, int d, int h, int w, int axis,
                              const float* taps, int radius) {
  blur_axis_adjoint_ref(in, out, d, h, w, axis, taps, radius);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar,   "scalar",         &gemm_nn_scalar,
                                 &gemm_nt_scalar, &blur_axis_scalar, &blur_axis_adjoint_scalar};
  return table;
}

}  // namespace curreg::kernels
