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

#include <array>

#include "curreg/tensor.hpp"
#include "curreg/volume.hpp"

namespace curreg {

/// x -> M (x - c) + c + translation, with c the volume center (dims - 1) / 2.
struct AffineTransform {
  std::array<double, 9> matrix{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major, (d, h, w) axes
  std::array<double, 3> translation{0, 0, 0};                // voxels

  static AffineTransform identity() { return {}; }
  // Twelve values (R row-major, t) with M = I + R, as emitted by the affine net.
  static AffineTransform from_residual(std::span<const float> params12);
};

FlowField affine_to_flow(const AffineTransform& t, const Dims& dims);

/// Differentiable version of affine_to_flow for a batch of residual
/// parameters (N,12) -> flows (N,3,D,H,W).
template <typename T>
Tensor<T> affine_flow(Tape& tape, const Tensor<T>& params, const Dims& dims);

/// Backward warp with trilinear interpolation: out(p) = vol(p + flow(p)),
/// sample positions clamped to the border voxel. vol is (N,C,D,H,W), flow is
/// (N,3,D,H,W); differentiable in both.
template <typename T>
Tensor<T> trilinear_warp(Tape& tape, const Tensor<T>& vol, const Tensor<T>& flow);

/// composed(p) = first(p + second(p)) + second(p): warping by `composed`
/// equals warping by `first` and then warping the result by `second`.
template <typename T>
Tensor<T> compose_flows(Tape& tape, const Tensor<T>& first, const Tensor<T>& second);

FlowField compose_flows(const FlowField& first, const FlowField& second);

Volume warp_volume(const Volume& vol, const FlowField& flow);

/// Nearest-neighbour backward warp; output stays binary.
MaskVolume nearest_warp_mask(const MaskVolume& mask, const FlowField& flow);

}  // namespace curreg
