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

#include "curreg/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "curreg/error.hpp"

namespace curreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::kIntensity: return "intensity";
    case PayloadKind::kMask: return "mask";
    case PayloadKind::kFlow: return "flow";
  }
  return "?";
}

fs::path with_ext(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

void write_bytes(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_header(const fs::path& stem, const VolumeHeader& h) {
  json j;
  j["format_version"] = h.format_version;
  j["dims"] = {h.dims.d, h.dims.h, h.dims.w};
  j["dtype"] = h.kind == PayloadKind::kMask ? "u8" : "f32le";
  j["kind"] = kind_name(h.kind);
  j["channels"] = h.channels;
  const std::string text = j.dump(2) + "\n";
  fs::create_directories(fs::absolute(stem).parent_path());
  write_bytes(with_ext(stem, ".json"), text.data(), text.size());
}

void write_floats(const fs::path& stem, const std::vector<float>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    write_bytes(with_ext(stem, ".bin"), v.data(), v.size() * sizeof(float));
  } else {
    std::vector<std::uint32_t> swapped(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) swapped[i] = __builtin_bswap32(std::bit_cast<std::uint32_t>(v[i]));
    write_bytes(with_ext(stem, ".bin"), swapped.data(), swapped.size() * 4);
  }
}

std::vector<float> decode_floats(const std::vector<char>& bytes) {
  std::vector<float> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), out.size() * 4);
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : out) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
  }
  return out;
}

std::vector<char> read_payload(const fs::path& stem, const VolumeHeader& h) {
  const fs::path bin = with_ext(stem, ".bin");
  std::vector<char> bytes = read_bytes(bin);
  if (bytes.size() != h.payload_bytes()) {
    throw SizeMismatchError(bin.string(), h.payload_bytes(), bytes.size());
  }
  return bytes;
}

void expect_kind(const VolumeHeader& h, PayloadKind kind, int channels, const fs::path& stem) {
  if (h.kind != kind || h.channels != channels) {
    throw KindMismatchError(stem.string() + ": expected kind '" + kind_name(kind) + "' with " +
                            std::to_string(channels) + " channel(s), found '" + kind_name(h.kind) + "' with " +
                            std::to_string(h.channels));
  }
}

}  // namespace

std::size_t VolumeHeader::payload_bytes() const {
  const std::size_t elem = kind == PayloadKind::kMask ? 1 : 4;
  return dims.voxels() * static_cast<std::size_t>(channels) * elem;
}

void write_volume(const fs::path& stem, const Volume& v) {
  write_header(stem, {kVolumeFormatVersion, v.dims, PayloadKind::kIntensity, 1});
  write_floats(stem, v.voxels);
}

void write_volume(const fs::path& stem, const MaskVolume& m) {
  write_header(stem, {kVolumeFormatVersion, m.dims, PayloadKind::kMask, 1});
  write_bytes(with_ext(stem, ".bin"), m.voxels.data(), m.voxels.size());
}

void write_volume(const fs::path& stem, const FlowField& f) {
  write_header(stem, {kVolumeFormatVersion, f.dims, PayloadKind::kFlow, 3});
  write_floats(stem, f.disp);
}

VolumeHeader read_header(const fs::path& stem) {
  const fs::path path = with_ext(stem, ".json");
  const std::vector<char> bytes = read_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw HeaderParseError(path.string() + ": " + e.what());
  }
  VolumeHeader h;
  std::string dtype, kind;
  try {
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kVolumeFormatVersion) {
      throw VersionError(path.string() + ": unsupported format_version " + std::to_string(h.format_version));
    }
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 3) throw HeaderParseError(path.string() + ": dims must have 3 entries");
    h.dims = Dims{dims[0], dims[1], dims[2]};
    dtype = j.at("dtype").get<std::string>();
    kind = j.at("kind").get<std::string>();
    h.channels = j.at("channels").get<int>();
  } catch (const json::exception& e) {
    throw HeaderParseError(path.string() + ": " + e.what());
  }
  if (h.dims.d < 1 || h.dims.h < 1 || h.dims.w < 1) {
    throw HeaderParseError(path.string() + ": non-positive dims " + h.dims.str());
  }
  if (kind == "intensity") h.kind = PayloadKind::kIntensity;
  else if (kind == "mask") h.kind = PayloadKind::kMask;
  else if (kind == "flow") h.kind = PayloadKind::kFlow;
  else throw HeaderParseError(path.string() + ": unknown kind '" + kind + "'");
  const char* want_dtype = h.kind == PayloadKind::kMask ? "u8" : "f32le";
  if (dtype != want_dtype) {
    throw KindMismatchError(path.string() + ": kind '" + kind + "' requires dtype " + want_dtype + ", found " + dtype);
  }
  if (h.channels != 1 && h.channels != 3) {
    throw KindMismatchError(path.string() + ": channels must be 1 or 3, found " + std::to_string(h.channels));
  }
  return h;
}

Volume read_intensity(const fs::path& stem) {
  const VolumeHeader h = read_header(stem);
  expect_kind(h, PayloadKind::kIntensity, 1, stem);
  return Volume{h.dims, decode_floats(read_payload(stem, h))};
}

MaskVolume read_mask(const fs::path& stem) {
  const VolumeHeader h = read_header(stem);
  expect_kind(h, PayloadKind::kMask, 1, stem);
  const std::vector<char> bytes = read_payload(stem, h);
  MaskVolume m{h.dims, std::vector<std::uint8_t>(bytes.begin(), bytes.end())};
  for (std::uint8_t v : m.voxels) {
    if (v > 1) throw DataError(stem.string() + ": mask is not binary");
  }
  return m;
}

FlowField read_flow(const fs::path& stem) {
  const VolumeHeader h = read_header(stem);
  expect_kind(h, PayloadKind::kFlow, 3, stem);
  return FlowField{h.dims, decode_floats(read_payload(stem, h))};
}

}  // namespace curreg
