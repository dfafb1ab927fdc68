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

// Differentiable primitives. Each op computes its forward value eagerly and,
// when the tape is enabled and some input requires grad, records a backward
// rule. Outputs of recorded ops require grad; everything else is a constant.
//
// Convolutions use the cross-correlation convention (no kernel flip).

#include "curreg/rng.hpp"
#include "curreg/tensor.hpp"

namespace curreg {

/// 3D convolution of x (N,Cin,D,H,W) with w (Cout,Cin,kd,kh,kw) and bias b
/// (Cout). Output extent per axis: floor((D + 2*padding - kd)/stride) + 1.
template <typename T>
Tensor<T> conv3d(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int padding);

/// Transposed 3D convolution: the input-adjoint of conv3d with the same
/// weight layout, so w is (Cin, Cout, kd, kh, kw) relative to *this* op.
/// Output extent per axis: (D - 1)*stride - 2*padding + kd.
template <typename T>
Tensor<T> conv_transpose3d(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                           int stride, int padding);

template <typename T>
Tensor<T> leaky_relu(Tape& tape, const Tensor<T>& x, double negative_slope);

/// Inverted dropout. In training mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1 - rate); draws come from `rng` in
/// element order. Eval mode or rate == 0 returns x itself (no op recorded, no
/// draws consumed).
template <typename T>
Tensor<T> dropout(Tape& tape, const Tensor<T>& x, double rate, Rng& rng, bool training);

/// dropout(leaky_relu(x)) in training mode as a single pass. Same draws and
/// bitwise-identical values and gradients; requires 0 < rate < 1.
template <typename T>
Tensor<T> leaky_relu_dropout(Tape& tape, const Tensor<T>& x, double negative_slope, double rate, Rng& rng);

/// Concatenates two (N,C,...) tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(Tape& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(Tape& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(Tape& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape& tape, const Tensor<T>& a, double factor);

/// Sum / mean over all elements; result has shape (1).
template <typename T>
Tensor<T> sum(Tape& tape, const Tensor<T>& a);

template <typename T>
Tensor<T> mean(Tape& tape, const Tensor<T>& a);

/// (N,C,D,H,W) -> (N,C)
template <typename T>
Tensor<T> global_avg_pool(Tape& tape, const Tensor<T>& x);

/// x (N,Cin), w (Cout,Cin), b (Cout) -> (N,Cout)
template <typename T>
Tensor<T> linear(Tape& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

namespace reference {

// Direct seven-loop implementations, values only. Kept as the oracle for the
// tiled im2col/GEMM path.
template <typename T>
Tensor<T> conv3d_naive(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                       int padding);

template <typename T>
Tensor<T> conv_transpose3d_naive(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                 int stride, int padding);

}  // namespace reference

}  // namespace curreg
