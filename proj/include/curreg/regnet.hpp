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

// One-cascade registration model: an affine subnetwork for the initial
// alignment, then a U-Net style deformable subnetwork that predicts a dense
// flow from the fixed image and the affinely pre-warped moving image.

#include <functional>
#include <string>
#include <vector>

#include "curreg/gaussian.hpp"
#include "curreg/rng.hpp"
#include "curreg/tensor.hpp"
#include "curreg/volume.hpp"
#include "curreg/warp.hpp"

namespace curreg {

struct DeformableNetConfig {
  int levels = 3;          // stride-2 encoder stages
  int base_channels = 8;   // channels of the first stage, doubled per stage
  double negative_slope = 0.1;
};

struct AffineNetConfig {
  bool enabled = true;
  int levels = 3;
  int base_channels = 8;
  double negative_slope = 0.1;
};

struct CascadeConfig {
  DeformableNetConfig deformable;
  AffineNetConfig affine;
};

/// Curriculum insertion points inside the network. Both zero reproduces the
/// plain network exactly.
struct CurriculumHooks {
  double feature_smoothing_sigma = 0.0;  // Gaussian on every conv block's pre-activation
  double dropout_rate = 0.0;             // after every conv block's activation
};

struct ForwardContext {
  Tape& tape;
  CurriculumHooks hooks{};
  Rng* dropout_rng = nullptr;  // required when hooks.dropout_rate > 0 and training
  const Kernel1D* smoothing_kernel = nullptr;  // prebuilt kernel for hooks.feature_smoothing_sigma
  // Diagnostics: sees every conv block's (smoothed) pre-activation.
  std::function<void(const std::string& block, const Shape& shape, const std::vector<double>& values)>
      preactivation_observer = nullptr;
  bool training = false;
};

/// Encoder blocks: fan-in scaled uniform weights (He bound for leaky ReLU),
/// zero biases. Output heads (flow conv, affine linear) are zero so the
/// untrained model predicts the identity transform.
template <typename T>
ParameterStore<T> init_parameters(const CascadeConfig& cfg, Rng rng);

/// Rejects extents not divisible by 2^levels and malformed configs.
void validate_config(const CascadeConfig& cfg, const Dims& dims);

/// fixed, moving: (N,1,D,H,W) -> flow (N,3,D,H,W).
template <typename T>
Tensor<T> deformable_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                             ParameterStore<T>& params, const DeformableNetConfig& cfg);

/// fixed, moving: (N,1,D,H,W) -> residual affine parameters (N,12): R
/// row-major then t, with the transform x -> (I + R)(x - c) + c + t.
template <typename T>
Tensor<T> affine_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                         ParameterStore<T>& params, const AffineNetConfig& cfg);

template <typename T>
struct CascadeOutput {
  Tensor<T> flow;             // final composed flow
  Tensor<T> warped;           // moving warped by flow
  Tensor<T> affine_params;    // undefined when the affine stage is disabled
  Tensor<T> affine_flow;      // undefined when the affine stage is disabled
  Tensor<T> deformable_flow;
};

template <typename T>
CascadeOutput<T> cascade_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                                 ParameterStore<T>& params, const CascadeConfig& cfg);

/// Number of learnable scalars for a config.
std::size_t parameter_count(const CascadeConfig& cfg);

}  // namespace curreg
