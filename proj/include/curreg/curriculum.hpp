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

#include <string>
#include <string_view>
#include <utility>

#include "curreg/gaussian.hpp"
#include "curreg/regnet.hpp"
#include "curreg/tensor.hpp"

namespace curreg {

/// start -> end linearly over [0, curriculum_steps], then constant.
struct LinearSchedule {
  double start_value = 0.0;
  double end_value = 0.0;
  long curriculum_steps = 0;
  long total_steps = 0;

  double value(long step) const;
};

enum class StrategyKind { kBaseline, kInputBlur, kSmoothing, kDropout };

std::string_view strategy_name(StrategyKind kind);  // "baseline", "input-blur", ...
StrategyKind parse_strategy(std::string_view name);  // accepts '-' or '_'

struct StrategySpec {
  StrategyKind kind = StrategyKind::kBaseline;
  LinearSchedule schedule;

  // Blur and smoothing sigma 1.0 -> 0.0, dropout rate 0.5 -> 0.0.
  static StrategySpec with_defaults(StrategyKind kind, long curriculum_steps, long total_steps);
};

/// Resolved curriculum state for one training step.
struct StepPlan {
  CurriculumHooks hooks;           // network-internal effects
  double input_blur_sigma = 0.0;   // input transform
  double scheduled_value = 0.0;    // the strategy's scheduled intensity (0 for baseline)

  bool is_baseline() const {
    return hooks.feature_smoothing_sigma == 0.0 && hooks.dropout_rate == 0.0 && input_blur_sigma == 0.0;
  }
};

StepPlan hooks_for_step(const StrategySpec& spec, long step);

/// Blurs every sample of both (N,1,D,H,W) tensors with the same sigma.
/// sigma = 0 returns the inputs themselves.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> apply_input_blur(const Tensor<T>& fixed, const Tensor<T>& moving, double sigma);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> apply_input_blur(const Tensor<T>& fixed, const Tensor<T>& moving,
                                                 const Kernel1D& kernel);

/// Holds the discrete kernel for a continuously scheduled sigma, rebuilding it
/// only when sigma moves by more than `tolerance`. Zero always maps to zero
/// (and the identity kernel) without touching the cache.
class SigmaCache {
 public:
  explicit SigmaCache(double tolerance = 0.01) : tolerance_(tolerance) {}
  double resolve(double sigma);  // effective sigma
  const Kernel1D& kernel() const { return kernel_; }
  long rebuilds() const { return rebuilds_; }

 private:
  double tolerance_;
  double cached_ = -1.0;
  Kernel1D kernel_ = build_kernel_1d(0.0);
  long rebuilds_ = 0;
};

}  // namespace curreg
