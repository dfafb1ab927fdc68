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

#include "curreg/trainer.hpp"

#include <chrono>
#include <cmath>

#include "curreg/error.hpp"
#include "curreg/ops.hpp"

namespace curreg {
namespace {

Tensor<float> stack_field(const std::vector<PairSample>& pairs, const std::vector<std::size_t>& idx,
                          Volume PairSample::*field) {
  std::vector<const Volume*> vols;
  for (std::size_t i : idx) vols.push_back(&(pairs[i].*field));
  return stack_volumes<float>(vols);
}

}  // namespace

TrainingSession::TrainingSession(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs)
    : cfg_(cfg),
      spec_(cfg.strategy_spec()),
      cascade_(cfg.cascade()),
      pairs_(std::move(train_pairs)),
      params_(init_parameters<float>(cascade_, Rng::stream(cfg.seed, "init"))),
      optimizer_(cfg.optimizer_config()),
      sampler_(pairs_.size(), cfg.batch_size, Rng::stream(cfg.seed, "data")),
      dropout_rng_(Rng::stream(cfg.seed, "dropout")) {
  cfg_.validate();
  validate_config(cascade_, pairs_.front().fixed.dims);
}

StepRecord TrainingSession::step() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  const StepPlan plan = hooks_for_step(spec_, step_);
  StepRecord rec;
  rec.step = step_;
  rec.scheduled_value = plan.scheduled_value;

  const std::vector<std::size_t> idx = sampler_.next();
  Tensor<float> fixed = stack_field(pairs_, idx, &PairSample::fixed);
  Tensor<float> moving = stack_field(pairs_, idx, &PairSample::moving);

  // Input blur feeds both the network and the loss's reference image.
  rec.input_blur_sigma = blur_cache_.resolve(plan.input_blur_sigma);
  if (rec.input_blur_sigma > 0.0) std::tie(fixed, moving) = apply_input_blur(fixed, moving, blur_cache_.kernel());

  ForwardContext ctx{tape_};
  ctx.training = true;
  ctx.dropout_rng = &dropout_rng_;
  ctx.hooks.dropout_rate = plan.hooks.dropout_rate;
  ctx.hooks.feature_smoothing_sigma = smooth_cache_.resolve(plan.hooks.feature_smoothing_sigma);
  if (ctx.hooks.feature_smoothing_sigma > 0.0) ctx.smoothing_kernel = &smooth_cache_.kernel();
  rec.smoothing_sigma = ctx.hooks.feature_smoothing_sigma;
  rec.dropout_rate = ctx.hooks.dropout_rate;

  params_.zero_grad();
  const CascadeOutput<float> out = cascade_forward(ctx, fixed, moving, params_, cascade_);
  Tensor<float> sim = similarity_loss(tape_, out.warped, fixed);
  Tensor<float> reg = flow_regularizer(tape_, out.flow);
  Tensor<float> total = add(tape_, sim, scale(tape_, reg, cfg_.lambda_reg));

  rec.loss.similarity = sim.item();
  rec.loss.regularization = reg.item();
  rec.loss.lambda_reg = cfg_.lambda_reg;
  rec.loss.total = total.item();
  if (!std::isfinite(rec.loss.total)) {
    tape_.clear();
    throw NumericError("non-finite loss at step " + std::to_string(step_) + " (similarity " +
                       std::to_string(rec.loss.similarity) + ", regularization " +
                       std::to_string(rec.loss.regularization) + ")");
  }
  backward(total, tape_);
  optimizer_.step(params_);

  rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  ++step_;
  return rec;
}

TrainingSession TrainingSession::fork(StrategyKind strategy) const {
  TrainingSession copy(*this);
  copy.cfg_.strategy = strategy;
  copy.spec_ = copy.cfg_.strategy_spec();
  copy.params_ = params_.cast<float>();
  copy.tape_ = Tape();
  return copy;
}

TrainingRun::TrainingRun(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs,
                         std::vector<PairSample> val_pairs)
    : cfg_(cfg), cascade_(cfg.cascade()), session_(cfg, std::move(train_pairs)), val_pairs_(std::move(val_pairs)) {
  result_.steps.reserve(static_cast<std::size_t>(cfg.total_steps));
}

const StepRecord& TrainingRun::advance() {
  if (done()) throw UsageError("training run already finished");
  result_.steps.push_back(session_.step());
  const long n = session_.steps_done();
  if (!val_pairs_.empty() && (n % cfg_.eval_every == 0 || n == cfg_.total_steps)) {
    const EvaluationResult ev = evaluate(session_.params(), cascade_, val_pairs_);
    result_.validation.push_back({n, ev.mean_dice, ev.mean_jaccard});
  }
  return result_.steps.back();
}

TrainResult TrainingRun::finish() {
  result_.mean_step_seconds = mean_step_seconds(result_.steps, cfg_.timing_warmup);
  result_.params = session_.params();
  return std::move(result_);
}

TrainResult train(const ExperimentConfig& cfg, std::vector<PairSample> train_pairs,
                  const std::vector<PairSample>& val_pairs, const StepCallback& on_step) {
  if (train_pairs.empty()) throw ConfigError("training split is empty");
  TrainingRun run(cfg, std::move(train_pairs), val_pairs);
  while (!run.done()) {
    const StepRecord& r = run.advance();
    if (on_step) on_step(r);
  }
  return run.finish();
}

EvaluationResult evaluate(const ParameterStore<float>& params, const CascadeConfig& cascade,
                          const std::vector<PairSample>& pairs, bool keep_warped) {
  check_compatible(params, cascade);
  EvaluationResult res;
  if (pairs.empty()) return res;
  // The forward pass only reads parameters; a shallow copy keeps the API const.
  ParameterStore<float> view = params;
  for (const PairSample& p : pairs) {
    validate_config(cascade, p.fixed.dims);
    Tape tape;
    tape.set_enabled(false);
    ForwardContext ctx{tape};
    const CascadeOutput<float> out =
        cascade_forward(ctx, volume_tensor<float>(p.fixed), volume_tensor<float>(p.moving), view, cascade);
    const FlowField flow = flow_from_tensor(out.flow);
    const MaskVolume warped_mask = nearest_warp_mask(p.moving_mask, flow);
    PairEvaluation e;
    e.seed = p.seed;
    e.scores = overlap(warped_mask, p.fixed_mask);
    e.unregistered = overlap(p.moving_mask, p.fixed_mask);
    if (keep_warped) e.warped = volume_from_tensor(out.warped);
    res.pairs.push_back(std::move(e));
  }
  const double n = static_cast<double>(res.pairs.size());
  for (const PairEvaluation& e : res.pairs) {
    res.mean_dice += e.scores.dice / n;
    res.mean_jaccard += e.scores.jaccard / n;
    res.mean_unregistered_dice += e.unregistered.dice / n;
    res.mean_unregistered_jaccard += e.unregistered.jaccard / n;
  }
  return res;
}

double mean_step_seconds(const std::vector<StepRecord>& steps, long warmup) {
  if (steps.empty()) return 0.0;
  std::size_t begin = static_cast<std::size_t>(std::max(0L, warmup));
  if (begin >= steps.size()) begin = 0;
  double total = 0.0;
  for (std::size_t i = begin; i < steps.size(); ++i) total += steps[i].seconds;
  return total / static_cast<double>(steps.size() - begin);
}

void check_compatible(const ParameterStore<float>& params, const CascadeConfig& cascade) {
  const ParameterStore<float> ref = init_parameters<float>(cascade, Rng(0));
  if (ref.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(params.size()) + " parameters, config expects " +
                    std::to_string(ref.size()));
  }
  for (const auto& [name, t] : ref) {
    if (!params.contains(name)) throw DataError("checkpoint lacks parameter " + name);
    if (params.at(name).shape() != t.shape()) {
      throw DataError("parameter " + name + " has shape " + params.at(name).shape().str() + ", config expects " +
                      t.shape().str());
    }
  }
}

}  // namespace curreg
