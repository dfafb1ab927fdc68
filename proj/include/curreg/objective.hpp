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

#include "curreg/tensor.hpp"
#include "curreg/volume.hpp"

namespace curreg {

inline constexpr double kVarianceFloor = 1e-5;

/// Mean over the batch of 1 - Pearson correlation between warped[n] and
/// fixed[n], each variance floored at kVarianceFloor. Range [0, 2].
template <typename T>
Tensor<T> similarity_loss(Tape& tape, const Tensor<T>& warped, const Tensor<T>& fixed,
                          double variance_floor = kVarianceFloor);

/// Squared forward differences of every displacement channel along every
/// axis, summed and divided by the number of flow elements (N * 3 * D*H*W).
/// A flow whose three channels are linear in one coordinate with slope s
/// scores s^2 * (extent - 1) / extent.
template <typename T>
Tensor<T> flow_regularizer(Tape& tape, const Tensor<T>& flow);

struct LossBreakdown {
  double total = 0.0;
  double similarity = 0.0;
  double regularization = 0.0;
  double lambda_reg = 0.0;
};

struct OverlapScores {
  double dice = 0.0;
  double jaccard = 0.0;
};

// Both empty -> 1.0; otherwise the usual set ratios.
double dice(const MaskVolume& a, const MaskVolume& b);
double jaccard(const MaskVolume& a, const MaskVolume& b);
OverlapScores overlap(const MaskVolume& a, const MaskVolume& b);

}  // namespace curreg
