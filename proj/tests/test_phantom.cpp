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

#include <deque>

#include "curreg/error.hpp"
#include "curreg/objective.hpp"
#include "curreg/phantom.hpp"
#include "curreg/warp.hpp"

namespace curreg {
namespace {

const Dims k32{32, 32, 32};

// Number of 6-connected foreground components (breadth-first flood fill).
int components(const MaskVolume& m) {
  const Dims& d = m.dims;
  std::vector<char> seen(d.voxels(), 0);
  int count = 0;
  for (std::size_t start = 0; start < d.voxels(); ++start) {
    if (!m.voxels[start] || seen[start]) continue;
    ++count;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const int x = static_cast<int>(i % d.w), y = static_cast<int>(i / d.w % d.h), z = static_cast<int>(i / d.w / d.h);
      const int nb[6][3] = {{z - 1, y, x}, {z + 1, y, x}, {z, y - 1, x}, {z, y + 1, x}, {z, y, x - 1}, {z, y, x + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[0] >= d.d || n[1] < 0 || n[1] >= d.h || n[2] < 0 || n[2] >= d.w) continue;
        const std::size_t j = d.index(n[0], n[1], n[2]);
        if (m.voxels[j] && !seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return count;
}

TEST(Phantom, Deterministic) {
  const Phantom a = generate_phantom(17, k32), b = generate_phantom(17, k32);
  EXPECT_EQ(a.volume.voxels, b.volume.voxels);
  EXPECT_EQ(a.mask.voxels, b.mask.voxels);
  EXPECT_NE(generate_phantom(18, k32).mask.voxels, a.mask.voxels);
  const PairSample p = generate_pair(5, k32), q = generate_pair(5, k32);
  EXPECT_EQ(p.moving.voxels, q.moving.voxels);
  EXPECT_EQ(p.moving_mask.voxels, q.moving_mask.voxels);
  EXPECT_EQ(p.gt_flow.disp, q.gt_flow.disp);
}

TEST(Phantom, TooSmallIsConfigError) {
  EXPECT_THROW(generate_phantom(1, Dims{15, 32, 32}), ConfigError);
  EXPECT_NO_THROW(generate_phantom(1, Dims{16, 16, 16}));
}

TEST(Phantom, RangeAndBinaryMask) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Phantom p = generate_phantom(s, k32);
    for (float v : p.volume.voxels) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
    for (auto v : p.mask.voxels) ASSERT_TRUE(v == 0 || v == 1);
  }
}

TEST(Phantom, OccupancyOverHundredSeeds) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double occ = static_cast<double>(generate_phantom(s, k32).mask.count()) / k32.voxels();
    EXPECT_GE(occ, 0.05) << s;
    EXPECT_LE(occ, 0.5) << s;
  }
}

TEST(Phantom, MostlySingleComponent) {
  int single = 0;
  for (std::uint64_t s = 0; s < 100; ++s) single += components(generate_phantom(s, k32).mask) == 1;
  EXPECT_GE(single, 95);
}

TEST(Deform, ZeroDisplacementAndJitterIsIdentity) {
  const Phantom p = generate_phantom(3, k32);
  const DeformedPhantom d = deform_phantom(p.volume, p.mask, 4, DeformOptions{0.0, 0.0, 0.0});
  EXPECT_EQ(d.volume.voxels, p.volume.voxels);
  EXPECT_EQ(d.mask.voxels, p.mask.voxels);
  for (float v : d.gt_flow.disp) ASSERT_EQ(v, 0.0f);
}

TEST(Deform, ExcessiveDisplacementIsConfigError) {
  const Phantom p = generate_phantom(3, k32);
  EXPECT_THROW(deform_phantom(p.volume, p.mask, 1, DeformOptions{4.0}), ConfigError);
  EXPECT_THROW(deform_phantom(p.volume, p.mask, 1, DeformOptions{-1.0}), ConfigError);
}

TEST(Deform, MovingIsWarpOfFixed) {
  const Phantom p = generate_phantom(8, k32);
  const DeformedPhantom d = deform_phantom(p.volume, p.mask, 9);
  EXPECT_EQ(d.volume.voxels, warp_volume(p.volume, d.generating_flow).voxels);
  EXPECT_EQ(d.mask.voxels, nearest_warp_mask(p.mask, d.generating_flow).voxels);
}

TEST(Deform, InverseFlowComposesToIdentity) {
  const Phantom p = generate_phantom(12, k32);
  const DeformedPhantom d = deform_phantom(p.volume, p.mask, 34);
  // phi(p) + psi(p + phi(p)) ~ 0 away from the borders.
  const FlowField r = compose_flows(d.generating_flow, d.gt_flow);
  const std::size_t n = k32.voxels();
  for (int z = 6; z < 26; ++z)
    for (int y = 6; y < 26; ++y)
      for (int x = 6; x < 26; ++x)
        for (int c = 0; c < 3; ++c) ASSERT_LT(std::abs(r.disp[c * n + k32.index(z, y, x)]), 0.05f);
}

TEST(Pairs, UnregisteredDiceCalibration) {
  int inside = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PairSample p = generate_pair(s, k32);
    ASSERT_GT(p.fixed_mask.count(), 0u);
    ASSERT_GT(p.moving_mask.count(), 0u);
    const double d = dice(p.fixed_mask, p.moving_mask);
    inside += d >= 0.5 && d <= 0.95;
  }
  EXPECT_GE(inside, 90);
}

TEST(Pairs, GroundTruthRecoversFixedMask) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PairSample p = generate_pair(s, k32);
    EXPECT_GE(dice(nearest_warp_mask(p.moving_mask, p.gt_flow), p.fixed_mask), 0.97) << s;
  }
}

TEST(Pairs, SharedDims) {
  const PairSample p = generate_pair(1, Dims{32, 40, 48});
  EXPECT_EQ(p.fixed.dims, (Dims{32, 40, 48}));
  EXPECT_EQ(p.moving.dims, p.fixed.dims);
  EXPECT_EQ(p.fixed_mask.dims, p.fixed.dims);
  EXPECT_EQ(p.moving_mask.dims, p.fixed.dims);
  EXPECT_EQ(p.gt_flow.dims, p.fixed.dims);
}

}  // namespace
}  // namespace curreg
