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

#include "curreg/optim.hpp"

#include <cmath>

#include "curreg/error.hpp"

namespace curreg {

template <typename T>
void Optimizer<T>::step(ParameterStore<T>& params) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw UsageError("parameter '" + name + "' has no gradient");
  }
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgd) {
    for (auto& [name, p] : params) {
      auto v = p.mutable_values();
      auto g = p.grad();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(v[i] - lr * g[i]);
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    Moments& mo = state_[name];
    auto v = p.mutable_values();
    auto g = p.grad();
    if (mo.m.size() != v.size()) {
      mo.m.assign(v.size(), 0.0);
      mo.v.assign(v.size(), 0.0);
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double gi = g[i];
      mo.m[i] = b1 * mo.m[i] + (1.0 - b1) * gi;
      mo.v[i] = b2 * mo.v[i] + (1.0 - b2) * gi * gi;
      const double mhat = mo.m[i] / c1;
      const double vhat = mo.v[i] / c2;
      v[i] = static_cast<T>(v[i] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace curreg
