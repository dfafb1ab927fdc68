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

// Single-file checkpoint: magic, format version, config echo, step, then
// named parameter blobs (name, shape, little-endian f32 values).

#include <filesystem>
#include <string>

#include "curreg/tensor.hpp"

namespace curreg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::string config_echo;
  long step = 0;
  ParameterStore<float> params;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& config_echo, long step,
                     const ParameterStore<float>& params);

// DataError (or VersionError / HeaderParseError) on corrupt or foreign files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curreg
