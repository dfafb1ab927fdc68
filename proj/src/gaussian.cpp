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

#include "curreg/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "curreg/error.hpp"
#include "curreg/kernels.hpp"

namespace curreg {

double gaussian_density_1d(double t, double sigma) {
  return std::exp(-t * t / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double gaussian_density_3d(double x, double y, double z, double sigma) {
  const double norm = std::pow(std::sqrt(2.0 * std::numbers::pi) * sigma, 3);
  return std::exp(-(x * x + y * y + z * z) / (2.0 * sigma * sigma)) / norm;
}

Kernel1D build_kernel_1d(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("Gaussian sigma must be finite and >= 0, got " + std::to_string(sigma));
  }
  Kernel1D k;
  k.sigma = sigma;
  if (sigma < kIdentitySigma) {
    k.taps = {1.0};
    return k;
  }
  k.radius = static_cast<int>(std::ceil(3.0 * sigma));
  k.taps.resize(2 * k.radius + 1);
  double total = 0.0;
  for (int t = -k.radius; t <= k.radius; ++t) {
    const double v = std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma));
    k.taps[t + k.radius] = v;
    total += v;
  }
  for (double& v : k.taps) v /= total;
  return k;
}

Kernel3D build_kernel_3d_dense(double sigma) {
  const Kernel1D k1 = build_kernel_1d(sigma);
  Kernel3D k;
  k.sigma = sigma;
  k.side = 2 * k1.radius + 1;
  if (k1.is_identity()) {
    k.taps = {1.0};
    return k;
  }
  const int r = k1.radius;
  k.taps.resize(static_cast<std::size_t>(k.side) * k.side * k.side);
  double total = 0.0;
  std::size_t i = 0;
  for (int z = -r; z <= r; ++z) {
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x, ++i) {
        k.taps[i] = std::exp(-static_cast<double>(x * x + y * y + z * z) / (2.0 * sigma * sigma));
        total += k.taps[i];
      }
    }
  }
  for (double& v : k.taps) v /= total;
  return k;
}

double Kernel3D::at(int z, int y, int x) const {
  const int r = radius();
  return taps[(static_cast<std::size_t>(z + r) * side + (y + r)) * side + (x + r)];
}

template <typename T>
void blur_block(const T* in, T* out, const Dims& dims, const Kernel1D& kernel, T* scratch) {
  const std::size_t n = dims.voxels();
  if (kernel.is_identity()) {
    if (out != in) std::copy(in, in + n, out);
    return;
  }
  const std::vector<T> taps(kernel.taps.begin(), kernel.taps.end());
  // depth: in -> scratch, height: scratch -> out, width: out -> scratch, copy back.
  kernels::blur_axis(in, scratch, dims.d, dims.h, dims.w, 0, taps.data(), kernel.radius);
  kernels::blur_axis(scratch, out, dims.d, dims.h, dims.w, 1, taps.data(), kernel.radius);
  kernels::blur_axis(out, scratch, dims.d, dims.h, dims.w, 2, taps.data(), kernel.radius);
  std::copy(scratch, scratch + n, out);
}

Volume blur_volume(const Volume& vol, const Kernel1D& kernel) {
  Volume out{vol.dims, std::vector<float>(vol.voxels.size())};
  if (kernel.is_identity()) {
    out.voxels = vol.voxels;
    return out;
  }
  std::vector<float> scratch(vol.voxels.size());
  blur_block(vol.voxels.data(), out.voxels.data(), vol.dims, kernel, scratch.data());
  return out;
}

Volume blur_volume(const Volume& vol, double sigma) { return blur_volume(vol, build_kernel_1d(sigma)); }

template <typename T>
Tensor<T> smooth_featuremap(Tape& tape, const Tensor<T>& x, const Kernel1D& kernel) {
  if (kernel.is_identity()) return x;
  const Dims dims = dims_of(x.shape());
  const std::size_t vox = dims.voxels();
  const std::size_t slices = x.numel() / vox;
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  std::vector<T> scratch(vox);
  for (std::size_t s = 0; s < slices; ++s) {
    blur_block(x.data() + s * vox, y.mutable_data() + s * vox, dims, kernel, scratch.data());
  }
  if (tape.enabled() && x.requires_grad()) {
    y.set_requires_grad(true);
    tape.record("smooth_featuremap", [x, y, kernel, dims, vox, slices]() mutable {
      if (!y.has_grad()) return;
      const std::vector<T> taps(kernel.taps.begin(), kernel.taps.end());
      const int r = kernel.radius;
      std::vector<T> a(vox), b(vox);
      const T* gy = y.grad().data();
      T* gx = x.grad_buffer().data();
      for (std::size_t s = 0; s < slices; ++s) {
        // Forward is W(H(D(x))); the adjoint applies the transposed passes in reverse.
        kernels::blur_axis_adjoint(gy + s * vox, a.data(), dims.d, dims.h, dims.w, 2, taps.data(), r);
        kernels::blur_axis_adjoint(a.data(), b.data(), dims.d, dims.h, dims.w, 1, taps.data(), r);
        kernels::blur_axis_adjoint(b.data(), a.data(), dims.d, dims.h, dims.w, 0, taps.data(), r);
        T* dst = gx + s * vox;
        for (std::size_t i = 0; i < vox; ++i) dst[i] += a[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> smooth_featuremap(Tape& tape, const Tensor<T>& x, double sigma) {
  return smooth_featuremap(tape, x, build_kernel_1d(sigma));
}

double total_variation(std::span<const float> v, const Dims& dims) {
  double tv = 0.0;
  for (int z = 0; z < dims.d; ++z) {
    for (int y = 0; y < dims.h; ++y) {
      for (int x = 0; x < dims.w; ++x) {
        const double c = v[dims.index(z, y, x)];
        if (z + 1 < dims.d) tv += std::abs(v[dims.index(z + 1, y, x)] - c);
        if (y + 1 < dims.h) tv += std::abs(v[dims.index(z, y + 1, x)] - c);
        if (x + 1 < dims.w) tv += std::abs(v[dims.index(z, y, x + 1)] - c);
      }
    }
  }
  return tv;
}

template void blur_block<float>(const float*, float*, const Dims&, const Kernel1D&, float*);
template void blur_block<double>(const double*, double*, const Dims&, const Kernel1D&, double*);
template Tensor<float> smooth_featuremap(Tape&, const Tensor<float>&, double);
template Tensor<double> smooth_featuremap(Tape&, const Tensor<double>&, double);
template Tensor<float> smooth_featuremap(Tape&, const Tensor<float>&, const Kernel1D&);
template Tensor<double> smooth_featuremap(Tape&, const Tensor<double>&, const Kernel1D&);

}  // namespace curreg
