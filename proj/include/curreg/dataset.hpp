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

// On-disk phantom datasets: pairs/<seed>/{fixed,moving,fixed_mask,
// moving_mask,gt_flow}.{json,bin} plus manifest.json.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curreg/phantom.hpp"
#include "curreg/rng.hpp"

namespace curreg {

struct DatasetSpec {
  std::uint64_t seed = 1;
  int volume_size = 32;
  int train_pairs = 40;
  int val_pairs = 5;
  int test_pairs = 10;
  DeformOptions deform;
};

struct DatasetManifest {
  int format_version = 1;
  std::uint64_t seed = 0;
  Dims dims;
  double max_disp = 0.0;
  std::vector<std::uint64_t> train, val, test;

  const std::vector<std::uint64_t>& split(const std::string& name) const;  // "train" | "val" | "test"
};

/// Seed of pair `index` in a dataset generated from `seed`.
std::uint64_t pair_seed(std::uint64_t seed, int index);

DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);

// DataError when the manifest or a pair file is missing or malformed.
DatasetManifest read_manifest(const std::filesystem::path& dir);
PairSample load_pair(const std::filesystem::path& dir, std::uint64_t seed);
std::vector<PairSample> load_split(const std::filesystem::path& dir, const DatasetManifest& manifest,
                                   const std::string& split);

/// Uniform sampling with replacement; deterministic given the stream.
class BatchSampler {
 public:
  // Throws ConfigError if dataset_size or batch_size is zero.
  BatchSampler(std::size_t dataset_size, int batch_size, Rng rng);
  std::vector<std::size_t> next();
  const Rng& rng() const { return rng_; }

 private:
  std::size_t size_;
  int batch_;
  Rng rng_;
};

}  // namespace curreg
