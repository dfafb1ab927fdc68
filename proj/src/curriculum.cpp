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

#include "curreg/curriculum.hpp"

#include <algorithm>
#include <cmath>

#include "curreg/error.hpp"
#include "curreg/gaussian.hpp"

namespace curreg {

double LinearSchedule::value(long step) const {
  if (step < 0) throw UsageError("schedule step must be >= 0");
  if (curriculum_steps <= 0 || step >= curriculum_steps) return end_value;
  const double frac = static_cast<double>(step) / static_cast<double>(curriculum_steps);
  return start_value + (end_value - start_value) * frac;
}

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kBaseline: return "baseline";
    case StrategyKind::kInputBlur: return "input-blur";
    case StrategyKind::kSmoothing: return "smoothing";
    case StrategyKind::kDropout: return "dropout";
  }
  return "baseline";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '_', '-');
  for (StrategyKind k : {StrategyKind::kBaseline, StrategyKind::kInputBlur, StrategyKind::kSmoothing,
                         StrategyKind::kDropout}) {
    if (s == strategy_name(k)) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected baseline|input-blur|smoothing|dropout)");
}

StrategySpec StrategySpec::with_defaults(StrategyKind kind, long curriculum_steps, long total_steps) {
  if (curriculum_steps < 0 || curriculum_steps > total_steps) {
    throw ConfigError("curriculum_steps must lie in [0, total_steps]");
  }
  StrategySpec spec;
  spec.kind = kind;
  spec.schedule.curriculum_steps = curriculum_steps;
  spec.schedule.total_steps = total_steps;
  spec.schedule.start_value = kind == StrategyKind::kDropout ? 0.5 : (kind == StrategyKind::kBaseline ? 0.0 : 1.0);
  spec.schedule.end_value = 0.0;
  return spec;
}

StepPlan hooks_for_step(const StrategySpec& spec, long step) {
  StepPlan plan;
  if (spec.kind == StrategyKind::kBaseline) return plan;
  const double v = spec.schedule.value(step);
  plan.scheduled_value = v;
  switch (spec.kind) {
    case StrategyKind::kInputBlur: plan.input_blur_sigma = v; break;
    case StrategyKind::kSmoothing: plan.hooks.feature_smoothing_sigma = v; break;
    case StrategyKind::kDropout: plan.hooks.dropout_rate = v; break;
    case StrategyKind::kBaseline: break;
  }
  return plan;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> apply_input_blur(const Tensor<T>& fixed, const Tensor<T>& moving, double sigma) {
  return apply_input_blur(fixed, moving, build_kernel_1d(sigma));
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> apply_input_blur(const Tensor<T>& fixed, const Tensor<T>& moving,
                                                 const Kernel1D& kernel) {
  if (fixed.shape() != moving.shape()) {
    throw ConfigError("apply_input_blur: shape mismatch " + fixed.shape().str() + " vs " + moving.shape().str());
  }
  if (kernel.is_identity()) return {fixed, moving};
  Tape off;
  off.set_enabled(false);
  return {smooth_featuremap(off, fixed, kernel), smooth_featuremap(off, moving, kernel)};
}

double SigmaCache::resolve(double sigma) {
  if (sigma == 0.0) return 0.0;
  if (cached_ < 0.0 || std::abs(sigma - cached_) > tolerance_) {
    cached_ = sigma;
    kernel_ = build_kernel_1d(sigma);
    ++rebuilds_;
  }
  return cached_;
}

template std::pair<Tensor<float>, Tensor<float>> apply_input_blur(const Tensor<float>&, const Tensor<float>&, double);
template std::pair<Tensor<double>, Tensor<double>> apply_input_blur(const Tensor<double>&, const Tensor<double>&,
                                                                    double);
template std::pair<Tensor<float>, Tensor<float>> apply_input_blur(const Tensor<float>&, const Tensor<float>&,
                                                                  const Kernel1D&);
template std::pair<Tensor<double>, Tensor<double>> apply_input_blur(const Tensor<double>&, const Tensor<double>&,
                                                                    const Kernel1D&);

}  // namespace curreg
