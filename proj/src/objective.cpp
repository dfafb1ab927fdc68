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

#include "curreg/objective.hpp"

#include <algorithm>
#include <cmath>

#include "curreg/error.hpp"

namespace curreg {

template <typename T>
Tensor<T> similarity_loss(Tape& tape, const Tensor<T>& warped, const Tensor<T>& fixed, double variance_floor) {
  if (warped.shape() != fixed.shape()) {
    throw ConfigError("similarity_loss: shape mismatch " + warped.shape().str() + " vs " + fixed.shape().str());
  }
  const int batch = warped.dim(0);
  const std::size_t per = warped.numel() / batch;
  struct Stats {
    double mx, my, vx, vy, cov, sx, sy;  // sx, sy: floored variances
  };
  std::vector<Stats> stats(batch);
  double loss = 0.0;
  for (int n = 0; n < batch; ++n) {
    const T* x = warped.data() + n * per;
    const T* y = fixed.data() + n * per;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < per; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= per;
    my /= per;
    double vx = 0, vy = 0, cov = 0;
    for (std::size_t i = 0; i < per; ++i) {
      const double dx = x[i] - mx, dy = y[i] - my;
      vx += dx * dx;
      vy += dy * dy;
      cov += dx * dy;
    }
    vx /= per;
    vy /= per;
    cov /= per;
    const double sx = std::max(vx, variance_floor), sy = std::max(vy, variance_floor);
    stats[n] = {mx, my, vx, vy, cov, sx, sy};
    loss += 1.0 - cov / std::sqrt(sx * sy);
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(loss / batch));
  if (tape.enabled() && (warped.requires_grad() || fixed.requires_grad())) {
    out.set_requires_grad(true);
    tape.record("similarity_loss", [warped, fixed, out, stats, batch, per, variance_floor]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()[0] / batch;
      for (int n = 0; n < batch; ++n) {
        const Stats& s = stats[n];
        const double root = std::sqrt(s.sx * s.sy);
        const double rho = s.cov / root;
        // d(1 - rho)/dx_i = -[(y_i - my) / root - rho * (x_i - mx) / sx * [vx >= floor]] / per
        const double kx = s.vx >= variance_floor ? rho / s.sx : 0.0;
        const double ky = s.vy >= variance_floor ? rho / s.sy : 0.0;
        const T* x = warped.data() + n * per;
        const T* y = fixed.data() + n * per;
        if (warped.requires_grad()) {
          T* gx = warped.grad_buffer().data() + n * per;
          for (std::size_t i = 0; i < per; ++i) {
            gx[i] += static_cast<T>(-g * ((y[i] - s.my) / root - kx * (x[i] - s.mx)) / per);
          }
        }
        if (fixed.requires_grad()) {
          T* gy = fixed.grad_buffer().data() + n * per;
          for (std::size_t i = 0; i < per; ++i) {
            gy[i] += static_cast<T>(-g * ((x[i] - s.mx) / root - ky * (y[i] - s.my)) / per);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> flow_regularizer(Tape& tape, const Tensor<T>& flow) {
  const Dims dims = dims_of(flow.shape());
  const std::size_t vox = dims.voxels();
  const std::size_t planes = flow.numel() / vox;  // N * 3
  const double norm = static_cast<double>(flow.numel());
  const long strides[3] = {static_cast<long>(dims.h) * dims.w, dims.w, 1};
  double acc = 0.0;
  for (std::size_t p = 0; p < planes; ++p) {
    const T* f = flow.data() + p * vox;
    for (int z = 0; z < dims.d; ++z) {
      for (int y = 0; y < dims.h; ++y) {
        for (int x = 0; x < dims.w; ++x) {
          const std::size_t i = dims.index(z, y, x);
          const bool valid[3] = {z + 1 < dims.d, y + 1 < dims.h, x + 1 < dims.w};
          for (int a = 0; a < 3; ++a) {
            if (!valid[a]) continue;
            const double d = static_cast<double>(f[i + strides[a]]) - f[i];
            acc += d * d;
          }
        }
      }
    }
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / norm));
  if (tape.enabled() && flow.requires_grad()) {
    out.set_requires_grad(true);
    tape.record("flow_regularizer", [flow, out, dims, vox, planes, norm]() mutable {
      if (!out.has_grad()) return;
      const double g = 2.0 * out.grad()[0] / norm;
      const long strides[3] = {static_cast<long>(dims.h) * dims.w, dims.w, 1};
      T* gf = flow.grad_buffer().data();
      for (std::size_t p = 0; p < planes; ++p) {
        const T* f = flow.data() + p * vox;
        T* gp = gf + p * vox;
        for (int z = 0; z < dims.d; ++z) {
          for (int y = 0; y < dims.h; ++y) {
            for (int x = 0; x < dims.w; ++x) {
              const std::size_t i = dims.index(z, y, x);
              const bool valid[3] = {z + 1 < dims.d, y + 1 < dims.h, x + 1 < dims.w};
              for (int a = 0; a < 3; ++a) {
                if (!valid[a]) continue;
                const double d = g * (static_cast<double>(f[i + strides[a]]) - f[i]);
                gp[i + strides[a]] += static_cast<T>(d);
                gp[i] -= static_cast<T>(d);
              }
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

struct Counts {
  std::size_t a = 0, b = 0, both = 0;
};

Counts count_overlap(const MaskVolume& a, const MaskVolume& b) {
  if (!(a.dims == b.dims)) throw ConfigError("mask dims mismatch: " + a.dims.str() + " vs " + b.dims.str());
  Counts c;
  for (std::size_t i = 0; i < a.voxels.size(); ++i) {
    const bool ia = a.voxels[i] != 0, ib = b.voxels[i] != 0;
    c.a += ia;
    c.b += ib;
    c.both += ia && ib;
  }
  return c;
}

}  // namespace

double dice(const MaskVolume& a, const MaskVolume& b) {
  const Counts c = count_overlap(a, b);
  if (c.a + c.b == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

double jaccard(const MaskVolume& a, const MaskVolume& b) {
  const Counts c = count_overlap(a, b);
  const std::size_t uni = c.a + c.b - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

OverlapScores overlap(const MaskVolume& a, const MaskVolume& b) { return {dice(a, b), jaccard(a, b)}; }

template Tensor<float> similarity_loss(Tape&, const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> similarity_loss(Tape&, const Tensor<double>&, const Tensor<double>&, double);
template Tensor<float> flow_regularizer(Tape&, const Tensor<float>&);
template Tensor<double> flow_regularizer(Tape&, const Tensor<double>&);

}  // namespace curreg
