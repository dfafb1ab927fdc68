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

#include "curreg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "curreg/error.hpp"

namespace curreg {
namespace {

constexpr char kMagic[8] = {'C', 'U', 'R', 'R', 'E', 'G', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::vector<char> buf, std::string origin) : buf_(std::move(buf)), origin_(std::move(origin)) {}
  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw DataError(origin_ + ": truncated checkpoint");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > buf_.size() - pos_) throw DataError(origin_ + ": truncated checkpoint");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::string origin_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_echo, long step,
                     const ParameterStore<float>& params) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(config_echo);
  w.i64(step);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.shape().rank()));
    for (int d : t.shape().dims()) w.u32(static_cast<std::uint32_t>(d));
    w.bytes(t.values().data(), t.values().size() * sizeof(float));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw DataError("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string());
  char magic[8] = {};
  try {
    r.bytes(magic, sizeof magic);
  } catch (const DataError&) {
    throw HeaderParseError(path.string() + ": not a checkpoint");
  }
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw HeaderParseError(path.string() + ": not a checkpoint");
  Checkpoint ck;
  ck.format_version = r.u32();
  if (ck.format_version != kCheckpointVersion) {
    throw VersionError(path.string() + ": unsupported checkpoint version " + std::to_string(ck.format_version));
  }
  ck.config_echo = r.str();
  ck.step = static_cast<long>(r.i64());
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw DataError(path.string() + ": bad rank for " + name);
    std::vector<int> dims(rank);
    for (int& d : dims) {
      const std::uint32_t v = r.u32();
      if (v == 0 || v > (1u << 24)) throw DataError(path.string() + ": bad extent for " + name);
      d = static_cast<int>(v);
    }
    const Shape shape(dims);
    std::vector<float> values(shape.numel());
    r.bytes(values.data(), values.size() * sizeof(float));
    if (ck.params.contains(name)) throw DataError(path.string() + ": duplicate parameter " + name);
    ck.params.add(name, Tensor<float>::from(shape, std::move(values), true));
  }
  if (!r.done()) throw DataError(path.string() + ": trailing bytes after parameters");
  return ck;
}

}  // namespace curreg
