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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "curreg/checkpoint.hpp"
#include "curreg/error.hpp"
#include "curreg/report.hpp"
#include "curreg/runner.hpp"
#include "curreg/trainer.hpp"

namespace fs = std::filesystem;

namespace curreg {
namespace {

ExperimentConfig small_config(StrategyKind k = StrategyKind::kBaseline) {
  ExperimentConfig c;
  c.strategy = k;
  c.volume_size = 16;
  c.total_steps = 20;
  c.curriculum_steps = 10;
  c.eval_every = 10;
  c.seed = 3;
  c.max_disp = 1.5;
  c.timing_warmup = 2;
  return c;
}

std::vector<PairSample> pairs(std::uint64_t base, int n) {
  std::vector<PairSample> v;
  for (int i = 0; i < n; ++i) v.push_back(generate_pair(base + i, {16, 16, 16}, DeformOptions{1.5}));
  return v;
}

TEST(Trainer, SameSeedSameChecksum) {
  for (StrategyKind k : {StrategyKind::kBaseline, StrategyKind::kDropout}) {
    const TrainResult a = train(small_config(k), pairs(10, 3), {});
    const TrainResult b = train(small_config(k), pairs(10, 3), {});
    EXPECT_EQ(a.params.checksum(), b.params.checksum());
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].loss.total, b.steps[i].loss.total);
  }
  ExperimentConfig other = small_config();
  other.seed = 4;
  EXPECT_NE(train(other, pairs(10, 3), {}).params.checksum(), train(small_config(), pairs(10, 3), {}).params.checksum());
}

TEST(Trainer, LossDecreases) {
  ExperimentConfig c = small_config();
  c.total_steps = 150;
  c.learning_rate = 1e-3;
  const TrainResult r = train(c, pairs(20, 4), {});
  double head = 0, tail = 0;
  for (int i = 0; i < 20; ++i) {
    head += r.steps[i].loss.total;
    tail += r.steps[r.steps.size() - 1 - i].loss.total;
  }
  EXPECT_LT(tail, head);
}

TEST(Trainer, NonFiniteLossNamesStep) {
  auto bad = pairs(30, 1);
  bad[0].fixed.voxels[100] = std::numeric_limits<float>::quiet_NaN();
  TrainingSession s(small_config(), bad);
  try {
    s.step();
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
    EXPECT_EQ(static_cast<int>(e.exit_code()), 4);
  }
}

TEST(Trainer, InputBlurLogsSchedule) {
  const TrainResult r = train(small_config(StrategyKind::kInputBlur), pairs(40, 2), {});
  ASSERT_EQ(r.steps.size(), 20u);
  EXPECT_EQ(r.steps[0].input_blur_sigma, 1.0);
  EXPECT_EQ(r.steps[0].scheduled_value, 1.0);
  EXPECT_EQ(r.steps[5].scheduled_value, 0.5);
  for (std::size_t i = 10; i < r.steps.size(); ++i) {
    EXPECT_EQ(r.steps[i].input_blur_sigma, 0.0);
    EXPECT_EQ(r.steps[i].scheduled_value, 0.0);
  }
  for (const StepRecord& s : r.steps) {
    EXPECT_EQ(s.smoothing_sigma, 0.0);
    EXPECT_EQ(s.dropout_rate, 0.0);
  }
}

TEST(Trainer, CurriculumQuantitiesZeroAfterCurriculum) {
  for (StrategyKind k : {StrategyKind::kSmoothing, StrategyKind::kDropout}) {
    const TrainResult r = train(small_config(k), pairs(50, 2), {});
    EXPECT_GT(r.steps[0].smoothing_sigma + r.steps[0].dropout_rate, 0.0);
    for (std::size_t i = 10; i < r.steps.size(); ++i) {
      EXPECT_EQ(r.steps[i].smoothing_sigma, 0.0);
      EXPECT_EQ(r.steps[i].dropout_rate, 0.0);
      EXPECT_EQ(r.steps[i].input_blur_sigma, 0.0);
    }
  }
}

TEST(Trainer, ValidationSchedule) {
  const TrainResult r = train(small_config(), pairs(60, 2), pairs(70, 2));
  ASSERT_EQ(r.validation.size(), 2u);
  EXPECT_EQ(r.validation[0].step, 10);
  EXPECT_EQ(r.validation[1].step, 20);
}

TEST(Evaluate, IdentityInitMatchesUnregistered) {
  const ExperimentConfig c = small_config();
  const auto params = init_parameters<float>(c.cascade(), Rng::stream(c.seed, "init"));
  const auto test = pairs(80, 5);
  const EvaluationResult ev = evaluate(params, c.cascade(), test);
  ASSERT_EQ(ev.pairs.size(), 5u);
  for (const PairEvaluation& p : ev.pairs) {
    EXPECT_EQ(p.scores.dice, p.unregistered.dice);
    EXPECT_EQ(p.scores.jaccard, p.unregistered.jaccard);
  }
  EXPECT_EQ(ev.mean_dice, ev.mean_unregistered_dice);
  EXPECT_EQ(ev.mean_jaccard, ev.mean_unregistered_jaccard);
}

TEST(Evaluate, IdenticalMasksScoreOne) {
  const ExperimentConfig c = small_config();
  auto test = pairs(90, 1);
  test[0].moving = test[0].fixed;
  test[0].moving_mask = test[0].fixed_mask;
  const auto params = init_parameters<float>(c.cascade(), Rng(1));
  const EvaluationResult ev = evaluate(params, c.cascade(), test);
  EXPECT_EQ(ev.mean_dice, 1.0);
  EXPECT_EQ(ev.mean_jaccard, 1.0);
}

TEST(Evaluate, ReproducibleAndKeepsWarped) {
  const ExperimentConfig c = small_config();
  const TrainResult r = train(c, pairs(100, 2), {});
  const auto test = pairs(110, 2);
  const EvaluationResult a = evaluate(r.params, c.cascade(), test, true);
  const EvaluationResult b = evaluate(r.params, c.cascade(), test, true);
  EXPECT_EQ(a.mean_dice, b.mean_dice);
  EXPECT_EQ(a.pairs[0].warped.voxels, b.pairs[0].warped.voxels);
  EXPECT_EQ(a.pairs[0].warped.dims, test[0].fixed.dims);
}

TEST(Evaluate, IncompatibleParameters) {
  ExperimentConfig c = small_config();
  const auto params = init_parameters<float>(c.cascade(), Rng(1));
  c.base_channels = 4;
  EXPECT_THROW(evaluate(params, c.cascade(), pairs(1, 1)), DataError);
  c = small_config();
  c.use_affine = false;
  EXPECT_THROW(evaluate(params, c.cascade(), pairs(1, 1)), DataError);
}

TEST(Timing, MeanExcludesWarmup) {
  std::vector<StepRecord> s(5);
  for (int i = 0; i < 5; ++i) s[i].seconds = i + 1;
  EXPECT_DOUBLE_EQ(mean_step_seconds(s, 2), 4.0);
  EXPECT_DOUBLE_EQ(mean_step_seconds(s, 10), 3.0);
}

RunReport sample_report() {
  RunReport r;
  r.config_echo = ExperimentConfig{}.echo();
  r.unregistered_dice = 0.8;
  r.unregistered_jaccard = 0.7;
  for (StrategyKind k : {StrategyKind::kBaseline, StrategyKind::kInputBlur, StrategyKind::kDropout,
                         StrategyKind::kSmoothing}) {
    MethodRow row;
    row.strategy = k;
    row.steps = 2000;
    row.seconds_per_step = 0.08;
    row.dice = 0.9;
    row.jaccard = 0.82;
    r.rows.push_back(row);
  }
  r.generated_at = "2026-01-01T00:00:00Z";
  return r;
}

TEST(Report, TableLayout) {
  const std::string t = format_report_text(sample_report());
  const auto header_end = t.find('\n', t.find('\n') + 1);
  const std::string header = t.substr(t.find('\n') + 1, header_end - t.find('\n') - 1);
  std::size_t pos = 0;
  for (const char* col : kReportColumns) {
    const auto at = header.find(col, pos);
    ASSERT_NE(at, std::string::npos) << col;
    pos = at;
  }
  EXPECT_EQ(std::string(kReportColumns[0]), "Method");
  EXPECT_EQ(std::string(kReportColumns[4]), "Jaccard");
  EXPECT_NE(t.find("1-cascade VTN + curriculum by smoothing"), std::string::npos);
  EXPECT_NE(t.find("0.90000"), std::string::npos);
  EXPECT_NE(t.find("0.080"), std::string::npos);
  EXPECT_NE(t.find("# configuration\nstrategy = baseline"), std::string::npos);
  EXPECT_EQ(t.find("2026-01-01"), std::string::npos);  // timestamps live in JSON metadata only
}

TEST(Report, JsonCarriesColumnsAndMetadata) {
  const std::string j = format_report_json(sample_report());
  for (const char* key : {"\"columns\"", "\"rows\"", "\"unregistered\"", "\"metadata\"", "\"generated_at\"",
                          "\"Time per step\"", "\"#Steps\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}

TEST(DifferenceMap, IdenticalVolumesAreWhite) {
  const PairSample p = generate_pair(5, {16, 16, 16}, DeformOptions{1.5});
  const auto rgb = difference_map(p.fixed, p.fixed, 0.0);
  ASSERT_EQ(rgb.size(), 3u * 16 * 16);
  for (auto v : rgb) ASSERT_EQ(v, 255);
  EXPECT_EQ(mid_slice_max_abs_diff(p.fixed, p.fixed), 0.0);
}

TEST(DifferenceMap, MaximumIsPureRed) {
  Volume a = Volume::zeros({4, 2, 2}), b = Volume::zeros({4, 2, 2});
  b.voxels[a.dims.index(2, 1, 1)] = 0.5f;
  b.voxels[a.dims.index(2, 0, 0)] = 0.25f;
  EXPECT_EQ(mid_slice_max_abs_diff(a, b), 0.5);
  const auto rgb = difference_map(a, b, 0.5);
  EXPECT_EQ(rgb[3 * 3 + 0], 255);
  EXPECT_EQ(rgb[3 * 3 + 1], 0);
  EXPECT_EQ(rgb[3 * 3 + 2], 0);
  EXPECT_EQ(rgb[0], 255);
  EXPECT_GT(rgb[1], 0);
  EXPECT_LT(rgb[1], 255);
}

TEST(DifferenceMap, PpmHeader) {
  const fs::path p = fs::temp_directory_path() / "curreg_test_map.ppm";
  write_ppm(p, 2, 1, {255, 0, 0, 255, 255, 255});
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  int w, h, maxv;
  in >> magic >> w >> h >> maxv;
  EXPECT_EQ(magic, "P6");
  EXPECT_EQ(w, 2);
  EXPECT_EQ(h, 1);
  EXPECT_EQ(maxv, 255);
  fs::remove(p);
}

TEST(Runner, ComparisonConfigsInTableOrder) {
  const auto cfgs = comparison_configs(small_config(StrategyKind::kSmoothing));
  ASSERT_EQ(cfgs.size(), 4u);
  EXPECT_EQ(cfgs[0].strategy, StrategyKind::kBaseline);
  EXPECT_EQ(cfgs[1].strategy, StrategyKind::kInputBlur);
  EXPECT_EQ(cfgs[2].strategy, StrategyKind::kDropout);
  EXPECT_EQ(cfgs[3].strategy, StrategyKind::kSmoothing);
}

TEST(Runner, RefusesMismatchedRuns) {
  auto cfgs = comparison_configs(small_config());
  cfgs[2].seed = 99;
  EXPECT_THROW(run_comparison(cfgs, fs::temp_directory_path() / "curreg_refuse"), ConfigError);
  cfgs = comparison_configs(small_config());
  cfgs[1].data_dir = "elsewhere";
  EXPECT_THROW(run_comparison(cfgs, fs::temp_directory_path() / "curreg_refuse"), ConfigError);
}

TEST(Runner, TrainWritesArtifacts) {
  const fs::path root = fs::temp_directory_path() / "curreg_runner_train";
  fs::remove_all(root);
  ExperimentConfig c = small_config(StrategyKind::kInputBlur);
  c.data_dir = root / "data";
  c.train_pairs = 2;
  c.val_pairs = 1;
  c.test_pairs = 1;
  generate_dataset(c.data_dir, dataset_spec(c));
  const TrainResult r = run_training(c, root / "run");
  const Checkpoint ck = load_checkpoint(root / "run" / "checkpoint.bin");
  EXPECT_EQ(ck.config_echo, c.echo());
  EXPECT_EQ(ck.step, 20);
  EXPECT_EQ(ck.params.checksum(), r.params.checksum());
  EXPECT_TRUE(fs::exists(root / "run" / "train_log.csv"));
  EXPECT_TRUE(fs::exists(root / "run" / "validation.csv"));
  const EvaluationResult ev = run_evaluation(c, root / "run" / "checkpoint.bin", "test");
  EXPECT_EQ(ev.pairs.size(), 1u);
  ExperimentConfig wrong = c;
  wrong.volume_size = 32;
  wrong.max_disp = 3;
  EXPECT_THROW(open_dataset(wrong), DataError);
  fs::remove_all(root);
}

}  // namespace
}  // namespace curreg
