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

#include <functional>
#include <memory>
#include <vector>

#include "curreg/config.hpp"
#include "curreg/curriculum.hpp"
#include "curreg/dataset.hpp"
#include "curreg/objective.hpp"
#include "curreg/optim.hpp"
#include "curreg/regnet.hpp"

namespace curreg {

struct StepRecord {
  long step = 0;
  double scheduled_value = 0.0;   // strategy intensity from the schedule
  double input_blur_sigma = 0.0;  // effective (cached) values actually applied
  double smoothing_sigma = 0.0;
  double dropout_rate = 0.0;
  LossBreakdown loss;
  double seconds = 0.0;
};

struct ValidationRecord {
  long step = 0;
  double dice = 0.0;
  double jaccard = 0.0;
};

struct PairEvaluation {
  std::uint64_t seed = 0;
  OverlapScores scores;
  OverlapScores unregistered;
  Volume warped;  // filled only when requested
};

struct EvaluationResult {
  std::vector<PairEvaluation> pairs;
  double mean_dice = 0.0;
  double mean_jaccard = 0.0;
  double mean_unregistered_dice = 0.0;
  double mean_unregistered_jaccard = 0.0;
};

/// One training run. Owns parameters, optimizer state, and the data and
/// dropout streams; nothing is shared between sessions.
class TrainingSession {
 public:
  TrainingSession(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs);

  // One optimizer step. Throws NumericError naming the step on a non-finite loss.
  StepRecord step();

  /// Deep copy of the complete training state (parameters, optimizer moments,
  /// data and dropout streams, step counter) continuing under another strategy.
  TrainingSession fork(StrategyKind strategy) const;

  long steps_done() const { return step_; }
  ParameterStore<float>& params() { return params_; }
  const ParameterStore<float>& params() const { return params_; }
  const ExperimentConfig& config() const { return cfg_; }

 private:
  ExperimentConfig cfg_;
  StrategySpec spec_;
  CascadeConfig cascade_;
  std::vector<PairSample> pairs_;
  ParameterStore<float> params_;
  Optimizer<float> optimizer_;
  BatchSampler sampler_;
  Rng dropout_rng_;
  SigmaCache blur_cache_;
  SigmaCache smooth_cache_;
  Tape tape_;
  long step_ = 0;
};

struct TrainResult {
  ParameterStore<float> params;
  std::vector<StepRecord> steps;
  std::vector<ValidationRecord> validation;
  double mean_step_seconds = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Incremental form of train(): advance() takes one optimizer step and runs
/// validation when due, so several runs can be driven in lock-step.
class TrainingRun {
 public:
  TrainingRun(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs, std::vector<PairSample> val_pairs);

  const StepRecord& advance();
  bool done() const { return session_.steps_done() >= cfg_.total_steps; }
  const ExperimentConfig& config() const { return cfg_; }
  TrainResult finish();  // leaves the run empty

 private:
  ExperimentConfig cfg_;
  CascadeConfig cascade_;
  TrainingSession session_;
  std::vector<PairSample> val_pairs_;
  TrainResult result_;
};

TrainResult train(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs,
                  const std::vector<PairSample>& val_pairs, const StepCallback& on_step = {});

/// Registers every pair with curriculum effects off, warps the moving mask by
/// nearest neighbour, and scores it against the fixed mask. Means are taken
/// per metric.
EvaluationResult evaluate(const ParameterStore<float>& params, const CascadeConfig& cascade,
                          const std::vector<PairSample>& pairs, bool keep_warped = false);

/// Mean seconds per step over steps [warmup, end); all steps if fewer.
double mean_step_seconds(const std::vector<StepRecord>& steps, long warmup);

/// Rejects parameter stores whose names or shapes differ from the config's.
void check_compatible(const ParameterStore<float>& params, const CascadeConfig& cascade);

}  // namespace curreg
