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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curreg/tensor.hpp"

namespace curreg {

struct Dims {
  int d = 0;
  int h = 0;
  int w = 0;

  std::size_t voxels() const { return static_cast<std::size_t>(d) * h * w; }
  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * h + y) * w + x;
  }
  std::string str() const;
  bool operator==(const Dims&) const = default;
};

/// Scalar intensity grid, values in [0, 1].
struct Volume {
  Dims dims;
  std::vector<float> voxels;

  static Volume zeros(Dims dims) { return Volume{dims, std::vector<float>(dims.voxels(), 0.0f)}; }
  float at(int z, int y, int x) const { return voxels[dims.index(z, y, x)]; }
};

/// Binary segmentation grid.
struct MaskVolume {
  Dims dims;
  std::vector<std::uint8_t> voxels;

  static MaskVolume zeros(Dims dims) { return MaskVolume{dims, std::vector<std::uint8_t>(dims.voxels(), 0)}; }
  std::size_t count() const;
};

/// Per-voxel displacement in voxels, channel-major: channel 0 moves along
/// depth, 1 along height, 2 along width. Backward convention: the warped
/// image at p samples the source at p + disp(p).
struct FlowField {
  Dims dims;
  std::vector<float> disp;

  static FlowField zeros(Dims dims) { return FlowField{dims, std::vector<float>(3 * dims.voxels(), 0.0f)}; }
  std::span<float> channel(int c) { return {disp.data() + c * dims.voxels(), dims.voxels()}; }
  std::span<const float> channel(int c) const { return {disp.data() + c * dims.voxels(), dims.voxels()}; }
  double max_norm() const;
};

Dims dims_of(const Shape& shape);  // trailing three extents of a rank-5 shape

// (N,1,D,H,W) from N volumes of equal dims.
template <typename T>
Tensor<T> stack_volumes(std::span<const Volume* const> volumes);

template <typename T>
Tensor<T> volume_tensor(const Volume& v);

template <typename T>
Tensor<T> flow_tensor(const FlowField& f);

// Slice n (and channel c) of a rank-5 tensor.
Volume volume_from_tensor(const Tensor<float>& t, int n = 0, int c = 0);
FlowField flow_from_tensor(const Tensor<float>& t, int n = 0);

}  // namespace curreg
