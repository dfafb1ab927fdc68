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

// curreg: generate phantom datasets, train and evaluate registration models
// under the curriculum strategies, compare them, and blur raw volumes.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "curreg/config.hpp"
#include "curreg/error.hpp"
#include "curreg/gaussian.hpp"
#include "curreg/kernels.hpp"
#include "curreg/runner.hpp"
#include "curreg/volume_io.hpp"

namespace fs = std::filesystem;
using namespace curreg;

namespace {

struct CommonFlags {
  std::string config;
  std::string strategy;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_strategy) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  if (with_strategy) cmd->add_option("--strategy", f.strategy, "baseline|input-blur|smoothing|dropout");
  cmd->add_option("--seed", f.seed, "overrides the config seed");
  cmd->add_option("--out", f.out, "output directory");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.strategy.empty()) cfg.strategy = parse_strategy(f.strategy);
  if (f.seed) cfg.seed = *f.seed;
  cfg.validate();
  return cfg;
}

void print_eval(const EvaluationResult& ev) {
  std::printf("seed,dice,jaccard,unregistered_dice\n");
  for (const PairEvaluation& p : ev.pairs) {
    std::printf("%llu,%.6f,%.6f,%.6f\n", static_cast<unsigned long long>(p.seed), p.scores.dice, p.scores.jaccard,
                p.unregistered.dice);
  }
  std::printf("mean Dice %.6f  mean Jaccard %.6f  (unregistered Dice %.6f)\n", ev.mean_dice, ev.mean_jaccard,
              ev.mean_unregistered_dice);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curriculum-learning framework for 3D deformable registration"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, eval_f, cmp_f;
  auto* gen = app.add_subcommand("generate-data", "write a phantom dataset (train/val/test splits)");
  add_common(gen, gen_f, false);

  auto* trn = app.add_subcommand("train", "train one strategy, write checkpoint and logs");
  add_common(trn, train_f, true);

  auto* evl = app.add_subcommand("evaluate", "score a checkpoint on a dataset split");
  add_common(evl, eval_f, false);
  std::string checkpoint, split = "test";
  evl->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  evl->add_option("--split", split, "train|val|test")->capture_default_str();

  auto* cmp = app.add_subcommand("compare", "train and evaluate all four strategies, write report");
  add_common(cmp, cmp_f, false);

  auto* blr = app.add_subcommand("blur", "Gaussian-blur a raw intensity volume");
  std::string blur_in, blur_out;
  double sigma = 1.0;
  blr->add_option("--input", blur_in, "input volume stem (without .json/.bin)")->required();
  blr->add_option("--sigma", sigma, "standard deviation in voxels")->capture_default_str();
  blr->add_option("--out", blur_out, "output volume stem")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*gen) {
      ExperimentConfig cfg = resolve(gen_f);
      if (!gen_f.out.empty()) cfg.data_dir = gen_f.out;
      const DatasetManifest m = generate_dataset(cfg.data_dir, dataset_spec(cfg));
      std::printf("wrote %zu train / %zu val / %zu test pairs at %s to %s\n", m.train.size(), m.val.size(),
                  m.test.size(), m.dims.str().c_str(), cfg.data_dir.string().c_str());
    } else if (*trn) {
      ExperimentConfig cfg = resolve(train_f);
      if (!train_f.out.empty()) cfg.out_dir = train_f.out;
      std::fprintf(stderr, "kernels: %s\n", kernels::active().name);
      const TrainResult res = run_training(cfg, cfg.out_dir, &std::cerr);
      std::printf("trained %ld steps, %.4f s/step, final loss %.6f; checkpoint %s\n", cfg.total_steps,
                  res.mean_step_seconds, res.steps.back().loss.total,
                  (cfg.out_dir / "checkpoint.bin").string().c_str());
    } else if (*evl) {
      ExperimentConfig cfg = resolve(eval_f);
      const EvaluationResult ev = run_evaluation(cfg, checkpoint, split);
      print_eval(ev);
    } else if (*cmp) {
      ExperimentConfig cfg = resolve(cmp_f);
      if (!cmp_f.out.empty()) cfg.out_dir = cmp_f.out;
      std::fprintf(stderr, "kernels: %s\n", kernels::active().name);
      run_comparison(comparison_configs(cfg), cfg.out_dir, &std::cerr);
      std::ifstream txt(cfg.out_dir / "report.txt");
      std::cout << txt.rdbuf();
    } else if (*blr) {
      const Volume in = read_intensity(blur_in);
      write_volume(blur_out, blur_volume(in, sigma));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
