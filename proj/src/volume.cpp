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

#include "curreg/volume.hpp"

#include <algorithm>
#include <cmath>

#include "curreg/error.hpp"

namespace curreg {

std::string Dims::str() const {
  return "[" + std::to_string(d) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

std::size_t MaskVolume::count() const {
  return static_cast<std::size_t>(std::count(voxels.begin(), voxels.end(), std::uint8_t{1}));
}

double FlowField::max_norm() const {
  const std::size_t n = dims.voxels();
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = disp[i], b = disp[n + i], c = disp[2 * n + i];
    best = std::max(best, std::sqrt(a * a + b * b + c * c));
  }
  return best;
}

Dims dims_of(const Shape& shape) {
  if (shape.rank() != 5) throw ConfigError("expected a rank-5 tensor, got " + shape.str());
  return Dims{shape[2], shape[3], shape[4]};
}

template <typename T>
Tensor<T> stack_volumes(std::span<const Volume* const> volumes) {
  if (volumes.empty()) throw ConfigError("stack_volumes: empty batch");
  const Dims dims = volumes.front()->dims;
  std::vector<T> values;
  values.reserve(volumes.size() * dims.voxels());
  for (const Volume* v : volumes) {
    if (v->dims != dims) throw ConfigError("stack_volumes: dims mismatch " + v->dims.str() + " vs " + dims.str());
    values.insert(values.end(), v->voxels.begin(), v->voxels.end());
  }
  return Tensor<T>::from(Shape{static_cast<int>(volumes.size()), 1, dims.d, dims.h, dims.w}, std::move(values));
}

template <typename T>
Tensor<T> volume_tensor(const Volume& v) {
  const Volume* one[] = {&v};
  return stack_volumes<T>(one);
}

template <typename T>
Tensor<T> flow_tensor(const FlowField& f) {
  std::vector<T> values(f.disp.begin(), f.disp.end());
  return Tensor<T>::from(Shape{1, 3, f.dims.d, f.dims.h, f.dims.w}, std::move(values));
}

Volume volume_from_tensor(const Tensor<float>& t, int n, int c) {
  const Dims dims = dims_of(t.shape());
  const std::size_t vox = dims.voxels();
  const float* src = t.data() + (static_cast<std::size_t>(n) * t.dim(1) + c) * vox;
  return Volume{dims, std::vector<float>(src, src + vox)};
}

FlowField flow_from_tensor(const Tensor<float>& t, int n) {
  const Dims dims = dims_of(t.shape());
  if (t.dim(1) != 3) throw ConfigError("flow tensor must have 3 channels, got " + t.shape().str());
  const std::size_t len = 3 * dims.voxels();
  const float* src = t.data() + static_cast<std::size_t>(n) * len;
  return FlowField{dims, std::vector<float>(src, src + len)};
}

template Tensor<float> stack_volumes<float>(std::span<const Volume* const>);
template Tensor<double> stack_volumes<double>(std::span<const Volume* const>);
template Tensor<float> volume_tensor<float>(const Volume&);
template Tensor<double> volume_tensor<double>(const Volume&);
template Tensor<float> flow_tensor<float>(const FlowField&);
template Tensor<double> flow_tensor<double>(const FlowField&);

}  // namespace curreg
