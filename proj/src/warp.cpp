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

#include "curreg/warp.hpp"

#include <cmath>

#include "curreg/error.hpp"
#include "curreg/kernels.hpp"
#include "curreg/ops.hpp"

namespace curreg {
namespace {

using kernels::clamp_index;

void check_flow_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string(what) + ": dims mismatch " + a.str() + " vs " + b.str());
}

// Corner indices and weights of a clamped trilinear sample.
template <typename T>
struct Sample {
  std::size_t idx[8];
  T frac[3];
};

template <typename T>
inline Sample<T> locate(const Dims& dims, T pz, T py, T px) {
  const T fz = std::floor(pz), fy = std::floor(py), fx = std::floor(px);
  const int z0 = static_cast<int>(fz), y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const int za = clamp_index(z0, dims.d), zb = clamp_index(z0 + 1, dims.d);
  const int ya = clamp_index(y0, dims.h), yb = clamp_index(y0 + 1, dims.h);
  const int xa = clamp_index(x0, dims.w), xb = clamp_index(x0 + 1, dims.w);
  Sample<T> s;
  s.frac[0] = pz - fz;
  s.frac[1] = py - fy;
  s.frac[2] = px - fx;
  s.idx[0] = dims.index(za, ya, xa);
  s.idx[1] = dims.index(za, ya, xb);
  s.idx[2] = dims.index(za, yb, xa);
  s.idx[3] = dims.index(za, yb, xb);
  s.idx[4] = dims.index(zb, ya, xa);
  s.idx[5] = dims.index(zb, ya, xb);
  s.idx[6] = dims.index(zb, yb, xa);
  s.idx[7] = dims.index(zb, yb, xb);
  return s;
}

template <typename T>
inline void corner_weights(const Sample<T>& s, T w[8]) {
  const T gz = 1 - s.frac[0], gy = 1 - s.frac[1], gx = 1 - s.frac[2];
  w[0] = gz * gy * gx;
  w[1] = gz * gy * s.frac[2];
  w[2] = gz * s.frac[1] * gx;
  w[3] = gz * s.frac[1] * s.frac[2];
  w[4] = s.frac[0] * gy * gx;
  w[5] = s.frac[0] * gy * s.frac[2];
  w[6] = s.frac[0] * s.frac[1] * gx;
  w[7] = s.frac[0] * s.frac[1] * s.frac[2];
}

}  // namespace

AffineTransform AffineTransform::from_residual(std::span<const float> p) {
  if (p.size() != 12) throw ConfigError("affine residual needs 12 values");
  AffineTransform t;
  for (int i = 0; i < 9; ++i) t.matrix[i] = (i % 4 == 0 ? 1.0 : 0.0) + p[i];
  for (int i = 0; i < 3; ++i) t.translation[i] = p[9 + i];
  return t;
}

FlowField affine_to_flow(const AffineTransform& t, const Dims& dims) {
  FlowField f = FlowField::zeros(dims);
  const double c[3] = {(dims.d - 1) / 2.0, (dims.h - 1) / 2.0, (dims.w - 1) / 2.0};
  const std::size_t n = dims.voxels();
  for (int z = 0; z < dims.d; ++z) {
    for (int y = 0; y < dims.h; ++y) {
      for (int x = 0; x < dims.w; ++x) {
        const double p[3] = {double(z), double(y), double(x)};
        const double q[3] = {p[0] - c[0], p[1] - c[1], p[2] - c[2]};
        const std::size_t i = dims.index(z, y, x);
        for (int r = 0; r < 3; ++r) {
          const double mapped =
              t.matrix[3 * r] * q[0] + t.matrix[3 * r + 1] * q[1] + t.matrix[3 * r + 2] * q[2] + c[r] + t.translation[r];
          f.disp[r * n + i] = static_cast<float>(mapped - p[r]);
        }
      }
    }
  }
  return f;
}

template <typename T>
Tensor<T> affine_flow(Tape& tape, const Tensor<T>& params, const Dims& dims) {
  if (params.shape().rank() != 2 || params.dim(1) != 12) {
    throw ConfigError("affine parameters must be (N,12), got " + params.shape().str());
  }
  const int batch = params.dim(0);
  const std::size_t vox = dims.voxels();
  const T c[3] = {T(dims.d - 1) / 2, T(dims.h - 1) / 2, T(dims.w - 1) / 2};
  Tensor<T> y = Tensor<T>::zeros(Shape{batch, 3, dims.d, dims.h, dims.w});
  T* out = y.mutable_data();
  for (int n = 0; n < batch; ++n) {
    const T* p = params.data() + 12 * n;
    for (int z = 0; z < dims.d; ++z) {
      for (int yy = 0; yy < dims.h; ++yy) {
        for (int x = 0; x < dims.w; ++x) {
          const T q[3] = {T(z) - c[0], T(yy) - c[1], T(x) - c[2]};
          const std::size_t i = dims.index(z, yy, x);
          for (int r = 0; r < 3; ++r) {
            out[(static_cast<std::size_t>(n) * 3 + r) * vox + i] =
                p[3 * r] * q[0] + p[3 * r + 1] * q[1] + p[3 * r + 2] * q[2] + p[9 + r];
          }
        }
      }
    }
  }
  if (tape.enabled() && params.requires_grad()) {
    y.set_requires_grad(true);
    tape.record("affine_flow", [params, y, dims, batch, vox]() mutable {
      if (!y.has_grad()) return;
      const T c[3] = {T(dims.d - 1) / 2, T(dims.h - 1) / 2, T(dims.w - 1) / 2};
      const T* g = y.grad().data();
      T* gp = params.grad_buffer().data();
      for (int n = 0; n < batch; ++n) {
        T acc[12] = {};
        for (int z = 0; z < dims.d; ++z) {
          for (int yy = 0; yy < dims.h; ++yy) {
            for (int x = 0; x < dims.w; ++x) {
              const T q[3] = {T(z) - c[0], T(yy) - c[1], T(x) - c[2]};
              const std::size_t i = dims.index(z, yy, x);
              for (int r = 0; r < 3; ++r) {
                const T gv = g[(static_cast<std::size_t>(n) * 3 + r) * vox + i];
                acc[3 * r] += gv * q[0];
                acc[3 * r + 1] += gv * q[1];
                acc[3 * r + 2] += gv * q[2];
                acc[9 + r] += gv;
              }
            }
          }
        }
        for (int j = 0; j < 12; ++j) gp[12 * n + j] += acc[j];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> trilinear_warp(Tape& tape, const Tensor<T>& vol, const Tensor<T>& flow) {
  const Dims dims = dims_of(vol.shape());
  check_flow_dims(dims_of(flow.shape()), dims, "trilinear_warp");
  if (flow.dim(1) != 3 || flow.dim(0) != vol.dim(0)) {
    throw ConfigError("trilinear_warp: flow " + flow.shape().str() + " incompatible with volume " + vol.shape().str());
  }
  const int batch = vol.dim(0), channels = vol.dim(1);
  const std::size_t vox = dims.voxels();
  Tensor<T> y = Tensor<T>::zeros(vol.shape());
  T* out = y.mutable_data();
  for (int n = 0; n < batch; ++n) {
    const T* fz = flow.data() + static_cast<std::size_t>(n) * 3 * vox;
    const T* fy = fz + vox;
    const T* fx = fy + vox;
    for (int z = 0; z < dims.d; ++z) {
      for (int yy = 0; yy < dims.h; ++yy) {
        for (int x = 0; x < dims.w; ++x) {
          const std::size_t i = dims.index(z, yy, x);
          const Sample<T> s = locate<T>(dims, T(z) + fz[i], T(yy) + fy[i], T(x) + fx[i]);
          T w[8];
          corner_weights(s, w);
          for (int c = 0; c < channels; ++c) {
            const T* src = vol.data() + (static_cast<std::size_t>(n) * channels + c) * vox;
            T v = 0;
            for (int k = 0; k < 8; ++k) v += w[k] * src[s.idx[k]];
            out[(static_cast<std::size_t>(n) * channels + c) * vox + i] = v;
          }
        }
      }
    }
  }
  if (tape.enabled() && (vol.requires_grad() || flow.requires_grad())) {
    y.set_requires_grad(true);
    tape.record("trilinear_warp", [vol, flow, y, dims, batch, channels, vox]() mutable {
      if (!y.has_grad()) return;
      const T* g = y.grad().data();
      T* gv = vol.requires_grad() ? vol.grad_buffer().data() : nullptr;
      T* gf = flow.requires_grad() ? flow.grad_buffer().data() : nullptr;
      for (int n = 0; n < batch; ++n) {
        const T* fz = flow.data() + static_cast<std::size_t>(n) * 3 * vox;
        const T* fy = fz + vox;
        const T* fx = fy + vox;
        for (int z = 0; z < dims.d; ++z) {
          for (int yy = 0; yy < dims.h; ++yy) {
            for (int x = 0; x < dims.w; ++x) {
              const std::size_t i = dims.index(z, yy, x);
              const Sample<T> s = locate<T>(dims, T(z) + fz[i], T(yy) + fy[i], T(x) + fx[i]);
              T w[8];
              corner_weights(s, w);
              const T az = s.frac[0], ay = s.frac[1], ax = s.frac[2];
              const T bz = 1 - az, by = 1 - ay, bx = 1 - ax;
              T dz = 0, dy = 0, dx = 0;
              for (int c = 0; c < channels; ++c) {
                const std::size_t base = (static_cast<std::size_t>(n) * channels + c) * vox;
                const T go = g[base + i];
                if (gv) {
                  for (int k = 0; k < 8; ++k) gv[base + s.idx[k]] += w[k] * go;
                }
                if (gf) {
                  const T* src = vol.data() + base;
                  T v[8];
                  for (int k = 0; k < 8; ++k) v[k] = src[s.idx[k]];
                  dz += go * (by * bx * (v[4] - v[0]) + by * ax * (v[5] - v[1]) + ay * bx * (v[6] - v[2]) +
                              ay * ax * (v[7] - v[3]));
                  dy += go * (bz * bx * (v[2] - v[0]) + bz * ax * (v[3] - v[1]) + az * bx * (v[6] - v[4]) +
                              az * ax * (v[7] - v[5]));
                  dx += go * (bz * by * (v[1] - v[0]) + bz * ay * (v[3] - v[2]) + az * by * (v[5] - v[4]) +
                              az * ay * (v[7] - v[6]));
                }
              }
              if (gf) {
                T* gfn = gf + static_cast<std::size_t>(n) * 3 * vox;
                gfn[i] += dz;
                gfn[vox + i] += dy;
                gfn[2 * vox + i] += dx;
              }
            }
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> compose_flows(Tape& tape, const Tensor<T>& first, const Tensor<T>& second) {
  if (first.shape() != second.shape()) {
    throw ConfigError("compose_flows: dims mismatch " + first.shape().str() + " vs " + second.shape().str());
  }
  return add(tape, trilinear_warp(tape, first, second), second);
}

FlowField compose_flows(const FlowField& first, const FlowField& second) {
  check_flow_dims(first.dims, second.dims, "compose_flows");
  Tape tape;
  tape.set_enabled(false);
  return flow_from_tensor(compose_flows(tape, flow_tensor<float>(first), flow_tensor<float>(second)));
}

Volume warp_volume(const Volume& vol, const FlowField& flow) {
  check_flow_dims(vol.dims, flow.dims, "warp_volume");
  Tape tape;
  tape.set_enabled(false);
  return volume_from_tensor(trilinear_warp(tape, volume_tensor<float>(vol), flow_tensor<float>(flow)));
}

MaskVolume nearest_warp_mask(const MaskVolume& mask, const FlowField& flow) {
  const Dims dims = mask.dims;
  check_flow_dims(dims, flow.dims, "nearest_warp_mask");
  MaskVolume out = MaskVolume::zeros(dims);
  const std::size_t vox = dims.voxels();
  for (int z = 0; z < dims.d; ++z) {
    for (int y = 0; y < dims.h; ++y) {
      for (int x = 0; x < dims.w; ++x) {
        const std::size_t i = dims.index(z, y, x);
        const int sz = clamp_index(static_cast<int>(std::floor(z + flow.disp[i] + 0.5f)), dims.d);
        const int sy = clamp_index(static_cast<int>(std::floor(y + flow.disp[vox + i] + 0.5f)), dims.h);
        const int sx = clamp_index(static_cast<int>(std::floor(x + flow.disp[2 * vox + i] + 0.5f)), dims.w);
        out.voxels[i] = mask.voxels[dims.index(sz, sy, sx)] ? 1 : 0;
      }
    }
  }
  return out;
}

template Tensor<float> affine_flow(Tape&, const Tensor<float>&, const Dims&);
template Tensor<double> affine_flow(Tape&, const Tensor<double>&, const Dims&);
template Tensor<float> trilinear_warp(Tape&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> trilinear_warp(Tape&, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> compose_flows(Tape&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> compose_flows(Tape&, const Tensor<double>&, const Tensor<double>&);

}  // namespace curreg
