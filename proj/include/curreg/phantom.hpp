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

// Synthetic organ-like phantoms with known segmentation and deformation.

#include <cstdint>

#include "curreg/volume.hpp"

namespace curreg {

struct Phantom {
  Volume volume;
  MaskVolume mask;
};

struct DeformOptions {
  double max_disp = 3.0;           // peak |displacement| of the smooth random field (voxels)
  double max_rotation_deg = 10.0;  // affine jitter
  double max_translation = 2.0;    // affine jitter (voxels, per axis)
};

struct DeformedPhantom {
  Volume volume;
  MaskVolume mask;
  FlowField generating_flow;  // moving(p) = fixed(p + generating_flow(p))
  FlowField gt_flow;          // registration flow: warping moving by it recovers fixed
};

struct PairSample {
  Volume fixed;
  Volume moving;
  MaskVolume fixed_mask;
  MaskVolume moving_mask;
  FlowField gt_flow;
  std::uint64_t seed = 0;
};

/// Union of 3-6 overlapping ellipsoids. Intensity is the indicator blurred
/// with sigma 1.5 plus smooth texture noise (amplitude 0.1, sigma 2), clamped
/// to [0, 1]; the mask thresholds the blurred indicator at 0.5.
/// Every extent must be >= 16.
Phantom generate_phantom(std::uint64_t seed, const Dims& dims);

/// Smooth random displacement (white noise blurred with sigma 4, scaled to
/// max_disp) plus a random rotation/translation about the centre. Intensity is
/// warped trilinearly, the mask by nearest neighbour. Requires
/// max_disp < min(dims) / 8.
DeformedPhantom deform_phantom(const Volume& v, const MaskVolume& m, std::uint64_t seed,
                               const DeformOptions& opts = {});

/// Inverts a smooth displacement by fixed-point iteration phi = -psi(p + phi).
FlowField invert_flow(const FlowField& psi, int iterations = 30);

PairSample generate_pair(std::uint64_t seed, const Dims& dims, const DeformOptions& opts = {});

}  // namespace curreg
