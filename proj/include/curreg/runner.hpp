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

// Command drivers shared by the CLI and the acceptance harness.

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "curreg/config.hpp"
#include "curreg/dataset.hpp"
#include "curreg/report.hpp"
#include "curreg/trainer.hpp"

namespace curreg {

DatasetSpec dataset_spec(const ExperimentConfig& cfg);

/// Loads the manifest and checks it against the config's volume size.
DatasetManifest open_dataset(const ExperimentConfig& cfg);

/// Trains one strategy; writes checkpoint.bin, train_log.csv and
/// validation.csv under out_dir.
TrainResult run_training(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         std::ostream* progress = nullptr);

EvaluationResult run_evaluation(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                                const std::string& split);

/// The four regimes in table order, each a copy of `base` with its strategy set.
std::vector<ExperimentConfig> comparison_configs(const ExperimentConfig& base);

/// Trains every config in its own fresh session, advancing the sessions
/// round-robin one step at a time, then evaluates each on the test split and
/// writes report.txt, report.json, per-strategy artifacts and difference maps
/// under out_dir. Refuses configs that disagree on anything but strategy.
RunReport run_comparison(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& out_dir,
                         std::ostream* progress = nullptr);

void write_train_log(const std::filesystem::path& path, const std::string& config_echo,
                     const std::vector<StepRecord>& steps);

}  // namespace curreg
