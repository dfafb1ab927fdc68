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

// Experiment configuration: plain `key = value` lines, `#` comments. Unknown
// keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>

#include "curreg/curriculum.hpp"
#include "curreg/optim.hpp"
#include "curreg/regnet.hpp"

namespace curreg {

struct ExperimentConfig {
  StrategyKind strategy = StrategyKind::kBaseline;
  long total_steps = 2000;
  long curriculum_steps = -1;  // -1: total_steps / 2
  int batch_size = 2;
  int volume_size = 32;
  double learning_rate = 1e-4;
  double lambda_reg = 0.5;
  std::uint64_t seed = 1;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "runs";
  long eval_every = 500;
  int levels = 3;
  int base_channels = 8;
  bool use_affine = true;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  // Dataset generation.
  int train_pairs = 40;
  int val_pairs = 5;
  int test_pairs = 10;
  double max_disp = 3.0;
  // Timing excludes steps before this index.
  long timing_warmup = 100;

  long effective_curriculum_steps() const { return curriculum_steps < 0 ? total_steps / 2 : curriculum_steps; }
  StrategySpec strategy_spec() const;
  CascadeConfig cascade() const;
  OptimizerConfig optimizer_config() const;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  /// Canonical `key = value` listing of every field; parses back to an equal config.
  std::string echo() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace curreg
