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

#include "curreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curreg/error.hpp"
#include "curreg/gaussian.hpp"
#include "curreg/rng.hpp"
#include "curreg/warp.hpp"

namespace curreg {
namespace {

struct Ellipsoid {
  double c[3];
  double a[3];
};

// White Gaussian noise blurred with `sigma`.
Volume smooth_noise(Rng& rng, const Dims& dims, double sigma) {
  Volume v = Volume::zeros(dims);
  for (float& x : v.voxels) x = static_cast<float>(rng.normal());
  return blur_volume(v, sigma);
}

}  // namespace

Phantom generate_phantom(std::uint64_t seed, const Dims& dims) {
  if (dims.d < 16 || dims.h < 16 || dims.w < 16) {
    throw ConfigError("phantom dims must be >= 16 per axis, got " + dims.str());
  }
  Rng rng = Rng::stream(seed, "phantom");
  const double ext[3] = {double(dims.d), double(dims.h), double(dims.w)};

  // The first ellipsoid sits near the centre; the rest are centred inside it so
  // the union stays connected.
  std::vector<Ellipsoid> parts(3 + rng.below(4));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    Ellipsoid& e = parts[k];
    for (int ax = 0; ax < 3; ++ax) {
      if (k == 0) {
        e.c[ax] = (ext[ax] - 1) / 2 + rng.uniform(-0.08, 0.08) * ext[ax];
        e.a[ax] = rng.uniform(0.22, 0.3) * ext[ax];
      } else {
        e.c[ax] = parts[0].c[ax] + rng.uniform(-0.7, 0.7) * parts[0].a[ax];
        e.a[ax] = rng.uniform(0.12, 0.2) * ext[ax];
      }
    }
  }

  Volume indicator = Volume::zeros(dims);
  for (int z = 0; z < dims.d; ++z) {
    for (int y = 0; y < dims.h; ++y) {
      for (int x = 0; x < dims.w; ++x) {
        const double p[3] = {double(z), double(y), double(x)};
        for (const Ellipsoid& e : parts) {
          double r = 0;
          for (int ax = 0; ax < 3; ++ax) r += std::pow((p[ax] - e.c[ax]) / e.a[ax], 2);
          if (r <= 1.0) {
            indicator.voxels[dims.index(z, y, x)] = 1.0f;
            break;
          }
        }
      }
    }
  }

  const Volume shape = blur_volume(indicator, 1.5);
  Volume texture = smooth_noise(rng, dims, 2.0);
  float peak = 0.0f;
  for (float t : texture.voxels) peak = std::max(peak, std::abs(t));
  const float gain = peak > 0 ? 0.1f / peak : 0.0f;

  Phantom out{Volume::zeros(dims), MaskVolume::zeros(dims)};
  for (std::size_t i = 0; i < dims.voxels(); ++i) {
    out.volume.voxels[i] = std::clamp(shape.voxels[i] + gain * texture.voxels[i], 0.0f, 1.0f);
    out.mask.voxels[i] = shape.voxels[i] >= 0.5f ? 1 : 0;
  }
  return out;
}

FlowField invert_flow(const FlowField& psi, int iterations) {
  const Dims dims = psi.dims;
  const std::size_t n = dims.voxels();
  std::vector<Volume> channels;
  for (int c = 0; c < 3; ++c) {
    auto ch = psi.channel(c);
    channels.push_back(Volume{dims, std::vector<float>(ch.begin(), ch.end())});
  }
  FlowField phi = FlowField::zeros(dims);
  for (int it = 0; it < iterations; ++it) {
    FlowField next = FlowField::zeros(dims);
    for (int c = 0; c < 3; ++c) {
      const Volume sampled = warp_volume(channels[c], phi);
      for (std::size_t i = 0; i < n; ++i) next.disp[c * n + i] = -sampled.voxels[i];
    }
    phi = std::move(next);
  }
  return phi;
}

DeformedPhantom deform_phantom(const Volume& v, const MaskVolume& m, std::uint64_t seed, const DeformOptions& opts) {
  const Dims dims = v.dims;
  if (!(m.dims == dims)) throw ConfigError("deform_phantom: volume/mask dims differ");
  const double limit = std::min({dims.d, dims.h, dims.w}) / 8.0;
  if (!(opts.max_disp >= 0.0) || opts.max_disp >= limit) {
    throw ConfigError("max_disp must lie in [0, " + std::to_string(limit) + ")");
  }
  if (opts.max_rotation_deg < 0 || opts.max_translation < 0) throw ConfigError("affine jitter must be >= 0");

  Rng rng = Rng::stream(seed, "deform");
  const std::size_t n = dims.voxels();
  FlowField psi = FlowField::zeros(dims);

  // Smooth elastic component, scaled to the requested peak displacement.
  std::vector<Volume> comp;
  for (int c = 0; c < 3; ++c) comp.push_back(smooth_noise(rng, dims, 4.0));
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = comp[0].voxels[i], b = comp[1].voxels[i], d = comp[2].voxels[i];
    peak = std::max(peak, std::sqrt(a * a + b * b + d * d));
  }
  const double gain = peak > 0 ? opts.max_disp / peak : 0.0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) psi.disp[c * n + i] = static_cast<float>(gain * comp[c].voxels[i]);
  }

  // Affine jitter: rotation about a random axis through the centre, then shift.
  double axis[3] = {rng.normal(), rng.normal(), rng.normal()};
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  for (double& a : axis) a = norm > 0 ? a / norm : 0.0;
  const double angle = rng.uniform(-1.0, 1.0) * opts.max_rotation_deg * std::numbers::pi / 180.0;
  const double s = std::sin(angle), co = std::cos(angle), k = 1 - co;
  const auto [ux, uy, uz] = std::tuple{axis[0], axis[1], axis[2]};
  AffineTransform jitter;
  jitter.matrix = {co + ux * ux * k, ux * uy * k - uz * s,
                   ux * uz * k + uy * s, uy * ux * k + uz * s,
                   co + uy * uy * k, uy * uz * k - ux * s,
                   uz * ux * k - uy * s, uz * uy * k + ux * s,
                   co + uz * uz * k};
  for (double& t : jitter.translation) t = rng.uniform(-1.0, 1.0) * opts.max_translation;
  const FlowField affine = affine_to_flow(jitter, dims);
  for (std::size_t i = 0; i < 3 * n; ++i) psi.disp[i] += affine.disp[i];

  DeformedPhantom out;
  out.volume = warp_volume(v, psi);
  out.mask = nearest_warp_mask(m, psi);
  out.gt_flow = invert_flow(psi);
  out.generating_flow = std::move(psi);
  return out;
}

PairSample generate_pair(std::uint64_t seed, const Dims& dims, const DeformOptions& opts) {
  Phantom fixed = generate_phantom(seed, dims);
  DeformedPhantom moving = deform_phantom(fixed.volume, fixed.mask, seed, opts);
  return PairSample{std::move(fixed.volume), std::move(moving.volume), std::move(fixed.mask),
                    std::move(moving.mask), std::move(moving.gt_flow), seed};
}

}  // namespace curreg
