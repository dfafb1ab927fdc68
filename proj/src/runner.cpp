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

#include "curreg/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "curreg/checkpoint.hpp"
#include "curreg/error.hpp"

namespace curreg {
namespace fs = std::filesystem;

namespace {

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string commented(const std::string& echo) {
  std::istringstream in(echo);
  std::ostringstream os;
  for (std::string line; std::getline(in, line);) os << "# " << line << "\n";
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Everything except the strategy must agree across compared runs.
std::string comparable_echo(ExperimentConfig cfg) {
  cfg.strategy = StrategyKind::kBaseline;
  return cfg.echo();
}

}  // namespace

DatasetSpec dataset_spec(const ExperimentConfig& cfg) {
  DatasetSpec s;
  s.seed = cfg.seed;
  s.volume_size = cfg.volume_size;
  s.train_pairs = cfg.train_pairs;
  s.val_pairs = cfg.val_pairs;
  s.test_pairs = cfg.test_pairs;
  s.deform.max_disp = cfg.max_disp;
  return s;
}

DatasetManifest open_dataset(const ExperimentConfig& cfg) {
  const DatasetManifest m = read_manifest(cfg.data_dir);
  const Dims want{cfg.volume_size, cfg.volume_size, cfg.volume_size};
  if (!(m.dims == want)) {
    throw DataError("dataset " + cfg.data_dir.string() + " has dims " + m.dims.str() + ", config expects " +
                    want.str());
  }
  if (m.train.empty()) throw ConfigError("dataset " + cfg.data_dir.string() + " has no training pairs");
  return m;
}

void write_train_log(const fs::path& path, const std::string& config_echo, const std::vector<StepRecord>& steps) {
  std::ofstream out(path, std::ios::trunc);
  out << commented(config_echo);
  out << "step,scheduled_value,input_blur_sigma,smoothing_sigma,dropout_rate,loss,similarity,regularization,"
         "seconds\n";
  for (const StepRecord& r : steps) {
    out << r.step << ',' << g9(r.scheduled_value) << ',' << g9(r.input_blur_sigma) << ',' << g9(r.smoothing_sigma)
        << ',' << g9(r.dropout_rate) << ',' << g9(r.loss.total) << ',' << g9(r.loss.similarity) << ','
        << g9(r.loss.regularization) << ',' << g9(r.seconds) << '\n';
  }
  if (!out) throw DataError("cannot write " + path.string());
}

namespace {

StepCallback progress_printer(const ExperimentConfig& cfg, std::ostream* progress) {
  if (!progress) return {};
  const long every = std::max(1L, cfg.total_steps / 20);
  return [&cfg, progress, every](const StepRecord& r) {
    if (r.step % every == 0 || r.step + 1 == cfg.total_steps) {
      *progress << "[" << strategy_name(cfg.strategy) << "] step " << r.step << " value " << g9(r.scheduled_value)
                << " loss " << g9(r.loss.total) << " (" << g9(r.seconds) << " s)\n";
    }
  };
}

void write_run_artifacts(const ExperimentConfig& cfg, const fs::path& out_dir, const TrainResult& res) {
  fs::create_directories(out_dir);
  const std::string echo = cfg.echo();
  save_checkpoint(out_dir / "checkpoint.bin", echo, cfg.total_steps, res.params);
  write_train_log(out_dir / "train_log.csv", echo, res.steps);
  std::ofstream val(out_dir / "validation.csv", std::ios::trunc);
  val << commented(echo) << "step,dice,jaccard\n";
  for (const ValidationRecord& v : res.validation) val << v.step << ',' << g9(v.dice) << ',' << g9(v.jaccard) << '\n';
  if (!val) throw DataError("cannot write " + (out_dir / "validation.csv").string());
}

}  // namespace

TrainResult run_training(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* progress) {
  cfg.validate();
  const DatasetManifest m = open_dataset(cfg);
  TrainResult res = train(cfg, load_split(cfg.data_dir, m, "train"), load_split(cfg.data_dir, m, "val"),
                          progress_printer(cfg, progress));
  write_run_artifacts(cfg, out_dir, res);
  return res;
}

EvaluationResult run_evaluation(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& split) {
  const DatasetManifest m = open_dataset(cfg);
  const std::vector<PairSample> pairs = load_split(cfg.data_dir, m, split);
  const Checkpoint ck = load_checkpoint(checkpoint);
  return evaluate(ck.params, cfg.cascade(), pairs);
}

std::vector<ExperimentConfig> comparison_configs(const ExperimentConfig& base) {
  std::vector<ExperimentConfig> out;
  for (StrategyKind k : {StrategyKind::kBaseline, StrategyKind::kInputBlur, StrategyKind::kDropout,
                         StrategyKind::kSmoothing}) {
    ExperimentConfig c = base;
    c.strategy = k;
    out.push_back(c);
  }
  return out;
}

RunReport run_comparison(const std::vector<ExperimentConfig>& configs, const fs::path& out_dir,
                         std::ostream* progress) {
  if (configs.empty()) throw ConfigError("nothing to compare");
  const std::string shared = comparable_echo(configs.front());
  for (const ExperimentConfig& c : configs) {
    c.validate();
    if (comparable_echo(c) != shared) {
      throw ConfigError("compared runs must share dataset, seed, and step budget; differing config:\n" + c.echo());
    }
  }
  const ExperimentConfig& base = configs.front();
  const DatasetManifest m = open_dataset(base);
  const std::vector<PairSample> test_pairs = load_split(base.data_dir, m, "test");

  const std::vector<PairSample> train_pairs = load_split(base.data_dir, m, "train");
  const std::vector<PairSample> val_pairs = load_split(base.data_dir, m, "val");

  RunReport report;
  report.config_echo = shared;
  report.generated_at = utc_now();

  // Fresh, independent sessions advanced round-robin, one step each: slow
  // drift in machine speed then affects every strategy's timing alike.
  std::vector<TrainingRun> runs;
  std::vector<StepCallback> printers;
  for (const ExperimentConfig& cfg : configs) {
    runs.emplace_back(cfg, train_pairs, val_pairs);
    printers.push_back(progress_printer(cfg, progress));
  }
  for (long s = 0; s < base.total_steps; ++s) {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const StepRecord& r = runs[k].advance();
      if (printers[k]) printers[k](r);
    }
  }

  for (std::size_t k = 0; k < runs.size(); ++k) {
    const ExperimentConfig& cfg = configs[k];
    const TrainResult tr = runs[k].finish();
    write_run_artifacts(cfg, out_dir / std::string(strategy_name(cfg.strategy)), tr);
    EvaluationResult ev = evaluate(tr.params, cfg.cascade(), test_pairs, /*keep_warped=*/true);
    MethodRow row;
    row.strategy = cfg.strategy;
    row.steps = cfg.total_steps;
    row.seconds_per_step = tr.mean_step_seconds;
    row.dice = ev.mean_dice;
    row.jaccard = ev.mean_jaccard;
    row.pairs = std::move(ev.pairs);
    for (const StepRecord& st : tr.steps) row.loss_curve.push_back(st.loss.total);
    row.validation = tr.validation;
    row.param_checksum = tr.params.checksum();
    report.unregistered_dice = ev.mean_unregistered_dice;
    report.unregistered_jaccard = ev.mean_unregistered_jaccard;
    if (progress) {
      *progress << "[" << strategy_name(cfg.strategy) << "] test Dice " << g9(row.dice) << " Jaccard "
                << g9(row.jaccard) << " time/step " << g9(row.seconds_per_step) << " s\n";
    }
    report.rows.push_back(std::move(row));
  }
  write_difference_maps(out_dir / "diffmaps", test_pairs, report.rows);
  write_report(out_dir, report);
  return report;
}

}  // namespace curreg
