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

// Raw volume files: `<stem>.json` header plus `<stem>.bin` payload of
// little-endian values, channel-major, W fastest.

#include <filesystem>

#include "curreg/volume.hpp"

namespace curreg {

inline constexpr int kVolumeFormatVersion = 1;

enum class PayloadKind { kIntensity, kMask, kFlow };

struct VolumeHeader {
  int format_version = kVolumeFormatVersion;
  Dims dims;
  PayloadKind kind = PayloadKind::kIntensity;
  int channels = 1;

  std::size_t payload_bytes() const;  // element size follows from kind
};

// `stem` has no extension: writes stem.json and stem.bin.
void write_volume(const std::filesystem::path& stem, const Volume& v);
void write_volume(const std::filesystem::path& stem, const MaskVolume& m);
void write_volume(const std::filesystem::path& stem, const FlowField& f);

// Throws HeaderParseError, VersionError, SizeMismatchError, or
// KindMismatchError (all DataError) on malformed input.
VolumeHeader read_header(const std::filesystem::path& stem);
Volume read_intensity(const std::filesystem::path& stem);
MaskVolume read_mask(const std::filesystem::path& stem);
FlowField read_flow(const std::filesystem::path& stem);

}  // namespace curreg
