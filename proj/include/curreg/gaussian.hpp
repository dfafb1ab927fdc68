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

#include <vector>

#include "curreg/tensor.hpp"
#include "curreg/volume.hpp"

namespace curreg {

/// Sampled 1D Gaussian truncated at radius ceil(3 sigma), normalized to unit
/// sum. sigma below kIdentitySigma gives the single tap [1].
struct Kernel1D {
  double sigma = 0.0;
  int radius = 0;
  std::vector<double> taps;

  bool is_identity() const { return radius == 0; }
};

/// Dense isotropic 3D Gaussian on the cube [-radius, radius]^3, normalized
/// to unit sum. Only used as an oracle for the separable paths.
struct Kernel3D {
  double sigma = 0.0;
  int side = 1;
  std::vector<double> taps;

  double at(int z, int y, int x) const;  // offsets in [-radius, radius]
  int radius() const { return side / 2; }
};

inline constexpr double kIdentitySigma = 0.05;

Kernel1D build_kernel_1d(double sigma);
Kernel3D build_kernel_3d_dense(double sigma);

// Continuous densities: 1/(sqrt(2 pi) sigma) exp(-t^2 / (2 sigma^2)) and its
// isotropic 3D product.
double gaussian_density_1d(double t, double sigma);
double gaussian_density_3d(double x, double y, double z, double sigma);

/// Three 1D passes (depth, height, width) with edge replication. sigma = 0
/// returns the input unchanged.
Volume blur_volume(const Volume& vol, double sigma);
Volume blur_volume(const Volume& vol, const Kernel1D& kernel);

/// In-place-safe separable blur of one D x H x W block; `scratch` must hold
/// dims.voxels() elements.
template <typename T>
void blur_block(const T* in, T* out, const Dims& dims, const Kernel1D& kernel, T* scratch);

/// Separable Gaussian over the spatial axes of each (batch, channel) slice of
/// an (N,C,D,H,W) tensor. The backward rule is the exact adjoint (equal to the
/// same blur away from the replicated borders). sigma = 0 returns x itself.
template <typename T>
Tensor<T> smooth_featuremap(Tape& tape, const Tensor<T>& x, double sigma);

template <typename T>
Tensor<T> smooth_featuremap(Tape& tape, const Tensor<T>& x, const Kernel1D& kernel);

/// Sum of absolute forward differences along all three axes.
double total_variation(std::span<const float> values, const Dims& dims);

}  // namespace curreg
