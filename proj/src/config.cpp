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

#include "curreg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "curreg/error.hpp"

namespace curreg {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("invalid value for " + key + ": '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"strategy", [](auto& c, auto&, auto& v) { c.strategy = parse_strategy(v); }},
      {"total_steps", [](auto& c, auto& k, auto& v) { c.total_steps = parse_number<long>(k, v); }},
      {"curriculum_steps", [](auto& c, auto& k, auto& v) { c.curriculum_steps = parse_number<long>(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = parse_number<int>(k, v); }},
      {"volume_size", [](auto& c, auto& k, auto& v) { c.volume_size = parse_number<int>(k, v); }},
      {"learning_rate", [](auto& c, auto& k, auto& v) { c.learning_rate = parse_number<double>(k, v); }},
      {"lambda_reg", [](auto& c, auto& k, auto& v) { c.lambda_reg = parse_number<double>(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"data_dir", [](auto& c, auto&, auto& v) { c.data_dir = v; }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"eval_every", [](auto& c, auto& k, auto& v) { c.eval_every = parse_number<long>(k, v); }},
      {"levels", [](auto& c, auto& k, auto& v) { c.levels = parse_number<int>(k, v); }},
      {"base_channels", [](auto& c, auto& k, auto& v) { c.base_channels = parse_number<int>(k, v); }},
      {"use_affine", [](auto& c, auto& k, auto& v) { c.use_affine = parse_bool(k, v); }},
      {"optimizer",
       [](auto& c, auto& k, auto& v) {
         if (v == "adam") c.optimizer = OptimizerKind::kAdam;
         else if (v == "sgd") c.optimizer = OptimizerKind::kSgd;
         else throw ConfigError("invalid value for " + k + ": '" + v + "' (expected adam|sgd)");
       }},
      {"train_pairs", [](auto& c, auto& k, auto& v) { c.train_pairs = parse_number<int>(k, v); }},
      {"val_pairs", [](auto& c, auto& k, auto& v) { c.val_pairs = parse_number<int>(k, v); }},
      {"test_pairs", [](auto& c, auto& k, auto& v) { c.test_pairs = parse_number<int>(k, v); }},
      {"max_disp", [](auto& c, auto& k, auto& v) { c.max_disp = parse_number<double>(k, v); }},
      {"timing_warmup", [](auto& c, auto& k, auto& v) { c.timing_warmup = parse_number<long>(k, v); }},
  };
  return table;
}

}  // namespace

StrategySpec ExperimentConfig::strategy_spec() const {
  return StrategySpec::with_defaults(strategy, effective_curriculum_steps(), total_steps);
}

CascadeConfig ExperimentConfig::cascade() const {
  CascadeConfig c;
  c.deformable.levels = levels;
  c.deformable.base_channels = base_channels;
  c.affine.enabled = use_affine;
  c.affine.levels = levels;
  c.affine.base_channels = base_channels;
  return c;
}

OptimizerConfig ExperimentConfig::optimizer_config() const {
  OptimizerConfig o;
  o.kind = optimizer;
  o.learning_rate = learning_rate;
  return o;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(total_steps > 0, "total_steps must be positive");
  require(effective_curriculum_steps() <= total_steps, "curriculum_steps must not exceed total_steps");
  require(batch_size > 0, "batch_size must be positive");
  require(volume_size >= 16, "volume_size must be >= 16");
  require(learning_rate > 0, "learning_rate must be positive");
  require(lambda_reg >= 0, "lambda_reg must be non-negative");
  require(eval_every > 0, "eval_every must be positive");
  require(levels >= 1, "levels must be >= 1");
  require(base_channels >= 1, "base_channels must be >= 1");
  require(volume_size % (1 << levels) == 0, "volume_size must be divisible by 2^levels");
  require(train_pairs > 0 && val_pairs >= 0 && test_pairs > 0, "pair counts must be positive");
  require(train_pairs + val_pairs + test_pairs <= 1000, "at most 1000 pairs per dataset");
  require(max_disp >= 0 && max_disp < volume_size / 8.0, "max_disp must lie in [0, volume_size/8)");
  require(timing_warmup >= 0, "timing_warmup must be non-negative");
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "strategy = " << strategy_name(strategy) << "\n"
     << "total_steps = " << total_steps << "\n"
     << "curriculum_steps = " << effective_curriculum_steps() << "\n"
     << "batch_size = " << batch_size << "\n"
     << "volume_size = " << volume_size << "\n"
     << "learning_rate = " << format_double(learning_rate) << "\n"
     << "lambda_reg = " << format_double(lambda_reg) << "\n"
     << "seed = " << seed << "\n"
     << "data_dir = " << data_dir.string() << "\n"
     << "out_dir = " << out_dir.string() << "\n"
     << "eval_every = " << eval_every << "\n"
     << "levels = " << levels << "\n"
     << "base_channels = " << base_channels << "\n"
     << "use_affine = " << (use_affine ? "true" : "false") << "\n"
     << "optimizer = " << (optimizer == OptimizerKind::kAdam ? "adam" : "sgd") << "\n"
     << "train_pairs = " << train_pairs << "\n"
     << "val_pairs = " << val_pairs << "\n"
     << "test_pairs = " << test_pairs << "\n"
     << "max_disp = " << format_double(max_disp) << "\n"
     << "timing_warmup = " << timing_warmup << "\n";
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace curreg
