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

#include "curreg/dataset.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "curreg/error.hpp"
#include "curreg/volume_io.hpp"

namespace curreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path pair_dir(const fs::path& dir, std::uint64_t seed) { return dir / "pairs" / std::to_string(seed); }

}  // namespace

const std::vector<std::uint64_t>& DatasetManifest::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (expected train|val|test)");
}

std::uint64_t pair_seed(std::uint64_t seed, int index) { return seed * 1000 + static_cast<std::uint64_t>(index); }

DatasetManifest generate_dataset(const fs::path& dir, const DatasetSpec& spec) {
  if (spec.train_pairs <= 0 || spec.test_pairs <= 0 || spec.val_pairs < 0 ||
      spec.train_pairs + spec.val_pairs + spec.test_pairs > 1000) {
    throw ConfigError("invalid pair counts");
  }
  DatasetManifest m;
  m.seed = spec.seed;
  m.dims = Dims{spec.volume_size, spec.volume_size, spec.volume_size};
  m.max_disp = spec.deform.max_disp;

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  int index = 0;
  for (auto [split, count] : {std::pair{&m.train, spec.train_pairs}, std::pair{&m.val, spec.val_pairs},
                              std::pair{&m.test, spec.test_pairs}}) {
    for (int k = 0; k < count; ++k, ++index) {
      const std::uint64_t s = pair_seed(spec.seed, index);
      const PairSample p = generate_pair(s, m.dims, spec.deform);
      const fs::path pd = pair_dir(dir, s);
      write_volume(pd / "fixed", p.fixed);
      write_volume(pd / "moving", p.moving);
      write_volume(pd / "fixed_mask", p.fixed_mask);
      write_volume(pd / "moving_mask", p.moving_mask);
      write_volume(pd / "gt_flow", p.gt_flow);
      split->push_back(s);
    }
  }

  json j;
  j["format_version"] = m.format_version;
  j["seed"] = m.seed;
  j["dims"] = {m.dims.d, m.dims.h, m.dims.w};
  j["max_disp"] = m.max_disp;
  j["counts"] = {{"train", m.train.size()}, {"val", m.val.size()}, {"test", m.test.size()}};
  j["splits"] = {{"train", m.train}, {"val", m.val}, {"test", m.test}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("no dataset manifest at " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) throw VersionError(path.string() + ": unsupported format_version");
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto d = j.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw HeaderParseError(path.string() + ": dims must have 3 entries");
    m.dims = Dims{d[0], d[1], d[2]};
    m.max_disp = j.at("max_disp").get<double>();
    const json& s = j.at("splits");
    m.train = s.at("train").get<std::vector<std::uint64_t>>();
    m.val = s.at("val").get<std::vector<std::uint64_t>>();
    m.test = s.at("test").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw HeaderParseError(path.string() + ": " + e.what());
  }
  return m;
}

PairSample load_pair(const fs::path& dir, std::uint64_t seed) {
  const fs::path pd = pair_dir(dir, seed);
  PairSample p;
  p.seed = seed;
  p.fixed = read_intensity(pd / "fixed");
  p.moving = read_intensity(pd / "moving");
  p.fixed_mask = read_mask(pd / "fixed_mask");
  p.moving_mask = read_mask(pd / "moving_mask");
  p.gt_flow = read_flow(pd / "gt_flow");
  const Dims d = p.fixed.dims;
  if (!(p.moving.dims == d && p.fixed_mask.dims == d && p.moving_mask.dims == d && p.gt_flow.dims == d)) {
    throw DataError(pd.string() + ": pair files disagree on dims");
  }
  return p;
}

std::vector<PairSample> load_split(const fs::path& dir, const DatasetManifest& manifest, const std::string& split) {
  std::vector<PairSample> out;
  for (std::uint64_t s : manifest.split(split)) {
    out.push_back(load_pair(dir, s));
    if (!(out.back().fixed.dims == manifest.dims)) {
      throw DataError("pair " + std::to_string(s) + " has dims " + out.back().fixed.dims.str() +
                      ", manifest says " + manifest.dims.str());
    }
  }
  return out;
}

BatchSampler::BatchSampler(std::size_t dataset_size, int batch_size, Rng rng)
    : size_(dataset_size), batch_(batch_size), rng_(rng) {
  if (dataset_size == 0) throw ConfigError("cannot sample batches from an empty dataset");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> idx(static_cast<std::size_t>(batch_));
  for (auto& i : idx) i = static_cast<std::size_t>(rng_.below(size_));
  return idx;
}

}  // namespace curreg
