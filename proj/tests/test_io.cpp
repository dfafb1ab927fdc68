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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "checks.hpp"
#include "curreg/checkpoint.hpp"
#include "curreg/dataset.hpp"
#include "curreg/error.hpp"
#include "curreg/regnet.hpp"
#include "curreg/volume_io.hpp"

namespace fs = std::filesystem;

namespace curreg {
namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("curreg_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

Volume random_volume(const Dims& d, std::uint64_t seed) {
  Rng rng(seed);
  Volume v = Volume::zeros(d);
  for (float& x : v.voxels) x = static_cast<float>(rng.uniform());
  return v;
}

TEST(VolumeIo, RoundTripsAllKinds) {
  TempDir dir;
  const Dims d{3, 4, 5};
  const Volume v = random_volume(d, 1);
  Rng rng(2);
  const MaskVolume m = check::random_mask(d, rng, 0.4);
  FlowField f = FlowField::zeros(d);
  for (float& x : f.disp) x = static_cast<float>(rng.normal());
  write_volume(dir.path() / "v", v);
  write_volume(dir.path() / "m", m);
  write_volume(dir.path() / "f", f);
  const Volume v2 = read_intensity(dir.path() / "v");
  const MaskVolume m2 = read_mask(dir.path() / "m");
  const FlowField f2 = read_flow(dir.path() / "f");
  EXPECT_EQ(v2.dims, d);
  EXPECT_EQ(v2.voxels, v.voxels);
  EXPECT_EQ(m2.voxels, m.voxels);
  EXPECT_EQ(f2.dims, d);
  EXPECT_EQ(f2.disp, f.disp);
  EXPECT_EQ(fs::file_size(dir.path() / "v.bin"), 4 * d.voxels());
  EXPECT_EQ(fs::file_size(dir.path() / "m.bin"), d.voxels());
  EXPECT_EQ(fs::file_size(dir.path() / "f.bin"), 12 * d.voxels());
}

TEST(VolumeIo, HeaderFields) {
  TempDir dir;
  write_volume(dir.path() / "f", FlowField::zeros({2, 3, 4}));
  const VolumeHeader h = read_header(dir.path() / "f");
  EXPECT_EQ(h.format_version, 1);
  EXPECT_EQ(h.dims, (Dims{2, 3, 4}));
  EXPECT_EQ(h.kind, PayloadKind::kFlow);
  EXPECT_EQ(h.channels, 3);
  EXPECT_EQ(h.payload_bytes(), 12u * 24u);
  const std::string text = slurp(dir.path() / "f.json");
  for (const char* key : {"format_version", "dims", "dtype", "f32le", "kind", "flow", "channels"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

TEST(VolumeIo, LittleEndianLayout) {
  TempDir dir;
  Volume v = Volume::zeros({1, 1, 2});
  v.voxels = {1.0f, -2.0f};
  write_volume(dir.path() / "v", v);
  const std::string b = slurp(dir.path() / "v.bin");
  ASSERT_EQ(b.size(), 8u);
  const unsigned char want[8] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(static_cast<unsigned char>(b[i]), want[i]) << i;
}

TEST(VolumeIo, TruncatedPayloadNamesByteCounts) {
  TempDir dir;
  write_volume(dir.path() / "v", random_volume({4, 4, 4}, 3));
  fs::resize_file(dir.path() / "v.bin", 100);
  try {
    read_intensity(dir.path() / "v");
    FAIL() << "expected SizeMismatchError";
  } catch (const SizeMismatchError& e) {
    EXPECT_EQ(e.expected(), 256u);
    EXPECT_EQ(e.actual(), 100u);
    EXPECT_NE(std::string(e.what()).find("256"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
  }
}

TEST(VolumeIo, TwoChannelFlowIsKindMismatch) {
  TempDir dir;
  spit(dir.path() / "f.json",
       R"({"format_version": 1, "dims": [2, 2, 2], "dtype": "f32le", "kind": "flow", "channels": 2})");
  spit(dir.path() / "f.bin", std::string(64, '\0'));
  EXPECT_THROW(read_flow(dir.path() / "f"), KindMismatchError);
}

TEST(VolumeIo, ErrorTaxonomy) {
  TempDir dir;
  const fs::path stem = dir.path() / "v";
  EXPECT_THROW(read_intensity(stem), DataError);  // missing

  write_volume(stem, random_volume({2, 2, 2}, 4));
  spit(dir.path() / "v.json", "{ not json");
  EXPECT_THROW(read_intensity(stem), HeaderParseError);

  spit(dir.path() / "v.json", R"({"format_version": 1, "dims": [2, 2, 2], "dtype": "f32le"})");
  EXPECT_THROW(read_intensity(stem), HeaderParseError);

  spit(dir.path() / "v.json",
       R"({"format_version": 2, "dims": [2, 2, 2], "dtype": "f32le", "kind": "intensity", "channels": 1})");
  EXPECT_THROW(read_intensity(stem), VersionError);

  spit(dir.path() / "v.json",
       R"({"format_version": 1, "dims": [2, 2, 2], "dtype": "u8", "kind": "intensity", "channels": 1})");
  EXPECT_THROW(read_intensity(stem), KindMismatchError);

  spit(dir.path() / "v.json",
       R"({"format_version": 1, "dims": [2, 2, 2], "dtype": "f32le", "kind": "intensity", "channels": 1})");
  EXPECT_NO_THROW(read_intensity(stem));
  EXPECT_THROW(read_flow(stem), KindMismatchError);
  EXPECT_THROW(read_mask(stem), KindMismatchError);

  // Every data-side error maps to the data exit code.
  try {
    read_flow(stem);
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::kData);
  }
}

TEST(VolumeIo, NonBinaryMaskRejected) {
  TempDir dir;
  MaskVolume m = MaskVolume::zeros({2, 2, 2});
  write_volume(dir.path() / "m", m);
  std::string b = slurp(dir.path() / "m.bin");
  b[3] = 7;
  spit(dir.path() / "m.bin", b);
  EXPECT_THROW(read_mask(dir.path() / "m"), DataError);
}

DatasetSpec small_spec(std::uint64_t seed) {
  DatasetSpec s;
  s.seed = seed;
  s.volume_size = 16;
  s.train_pairs = 3;
  s.val_pairs = 1;
  s.test_pairs = 2;
  s.deform.max_disp = 1.5;
  return s;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

TEST(Dataset, RerunIsByteIdentical) {
  TempDir dir;
  generate_dataset(dir.path() / "a", small_spec(9));
  generate_dataset(dir.path() / "b", small_spec(9));
  const auto a = tree_bytes(dir.path() / "a"), b = tree_bytes(dir.path() / "b");
  EXPECT_EQ(a.size(), 1u + 6u * 10u);
  EXPECT_EQ(a, b);
}

TEST(Dataset, LayoutAndDims) {
  TempDir dir;
  const DatasetManifest man = generate_dataset(dir.path(), small_spec(2));
  EXPECT_EQ(man.train.size(), 3u);
  EXPECT_EQ(man.val.size(), 1u);
  EXPECT_EQ(man.test.size(), 2u);
  for (const auto* split : {&man.train, &man.val, &man.test})
    for (std::uint64_t s : *split)
      for (const char* name : {"fixed", "moving", "fixed_mask", "moving_mask", "gt_flow"}) {
        const fs::path stem = dir.path() / "pairs" / std::to_string(s) / name;
        ASSERT_TRUE(fs::exists(stem.string() + ".json")) << stem;
        ASSERT_TRUE(fs::exists(stem.string() + ".bin")) << stem;
        EXPECT_EQ(read_header(stem).dims, (Dims{16, 16, 16}));
      }
  const DatasetManifest back = read_manifest(dir.path());
  EXPECT_EQ(back.train, man.train);
  EXPECT_EQ(back.test, man.test);
  EXPECT_EQ(back.dims, man.dims);
  EXPECT_EQ(back.seed, 2u);
  const auto test = load_split(dir.path(), back, "test");
  ASSERT_EQ(test.size(), 2u);
  const PairSample regen = generate_pair(back.test[0], {16, 16, 16}, small_spec(2).deform);
  EXPECT_EQ(test[0].moving.voxels, regen.moving.voxels);
  EXPECT_EQ(test[0].moving_mask.voxels, regen.moving_mask.voxels);
  EXPECT_EQ(test[0].gt_flow.disp, regen.gt_flow.disp);
  EXPECT_THROW(back.split("holdout"), ConfigError);
}

TEST(Dataset, DefaultCounts) {
  TempDir dir;
  DatasetSpec spec;
  const DatasetManifest man = generate_dataset(dir.path(), spec);
  EXPECT_EQ(man.train.size(), 40u);
  EXPECT_EQ(man.val.size(), 5u);
  EXPECT_EQ(man.test.size(), 10u);
  EXPECT_EQ(man.dims, (Dims{32, 32, 32}));
}

TEST(Dataset, MissingIsDataError) {
  TempDir dir;
  EXPECT_THROW(read_manifest(dir.path()), DataError);
  generate_dataset(dir.path(), small_spec(3));
  const DatasetManifest man = read_manifest(dir.path());
  fs::remove(dir.path() / "pairs" / std::to_string(man.train[0]) / "moving.bin");
  EXPECT_THROW(load_split(dir.path(), man, "train"), DataError);
}

TEST(BatchSampler, DeterministicSequence) {
  BatchSampler a(20, 4, Rng::stream(1, "data")), b(20, 4, Rng::stream(1, "data"));
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(BatchSampler, UniformFrequency) {
  BatchSampler s(20, 1, Rng::stream(3, "data"));
  std::vector<int> hits(20, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto batch = s.next();
    ASSERT_EQ(batch.size(), 1u);
    ASSERT_LT(batch[0], 20u);
    ++hits[batch[0]];
  }
  for (int h : hits) {
    EXPECT_GE(h, 400);
    EXPECT_LE(h, 600);
  }
}

TEST(BatchSampler, EmptyIsConfigError) {
  EXPECT_THROW(BatchSampler(0, 2, Rng(1)), ConfigError);
  EXPECT_THROW(BatchSampler(5, 0, Rng(1)), ConfigError);
}

TEST(Checkpoint, RoundTrip) {
  TempDir dir;
  const auto params = init_parameters<float>(CascadeConfig{}, Rng(4));
  save_checkpoint(dir.path() / "ck.bin", "seed = 4\n", 123, params);
  const Checkpoint c = load_checkpoint(dir.path() / "ck.bin");
  EXPECT_EQ(c.format_version, kCheckpointVersion);
  EXPECT_EQ(c.config_echo, "seed = 4\n");
  EXPECT_EQ(c.step, 123);
  EXPECT_EQ(c.params.size(), params.size());
  EXPECT_EQ(c.params.checksum(), params.checksum());
  for (const auto& [name, t] : params) {
    ASSERT_TRUE(c.params.contains(name));
    EXPECT_EQ(c.params.at(name).shape(), t.shape());
  }
}

TEST(Checkpoint, CorruptFiles) {
  TempDir dir;
  const fs::path p = dir.path() / "ck.bin";
  EXPECT_THROW(load_checkpoint(p), DataError);
  save_checkpoint(p, "x = 1\n", 0, init_parameters<float>(CascadeConfig{}, Rng(1)));
  const std::string good = slurp(p);

  spit(p, "NOTACKPT" + good.substr(8));
  EXPECT_THROW(load_checkpoint(p), HeaderParseError);

  std::string v = good;
  v[8] = 9;
  spit(p, v);
  EXPECT_THROW(load_checkpoint(p), VersionError);

  spit(p, good.substr(0, good.size() - 10));
  EXPECT_THROW(load_checkpoint(p), DataError);

  spit(p, good + "junk");
  EXPECT_THROW(load_checkpoint(p), DataError);
}

}  // namespace
}  // namespace curreg
