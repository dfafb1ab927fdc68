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

#include <cmath>
#include <numbers>

#include "checks.hpp"
#include "curreg/error.hpp"
#include "curreg/gaussian.hpp"
#include "curreg/warp.hpp"

namespace curreg {
namespace {

Volume random_volume(const Dims& d, std::uint64_t seed) {
  Rng rng(seed);
  Volume v = Volume::zeros(d);
  for (float& x : v.voxels) x = static_cast<float>(rng.uniform());
  return v;
}

FlowField constant_flow(const Dims& d, float a, float b, float c) {
  FlowField f = FlowField::zeros(d);
  const float vals[3] = {a, b, c};
  for (int ch = 0; ch < 3; ++ch)
    for (float& v : f.channel(ch)) v = vals[ch];
  return f;
}

// Smooth random flow with peak magnitude about `amp`.
FlowField smooth_flow(const Dims& d, std::uint64_t seed, double amp) {
  Rng rng(seed);
  FlowField f = FlowField::zeros(d);
  for (int ch = 0; ch < 3; ++ch) {
    Volume n = Volume::zeros(d);
    for (float& v : n.voxels) v = static_cast<float>(rng.normal());
    n = blur_volume(n, 3.0);
    float peak = 0;
    for (float v : n.voxels) peak = std::max(peak, std::abs(v));
    auto dst = f.channel(ch);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(amp) * n.voxels[i] / peak;
  }
  return f;
}

TEST(TrilinearWarp, ZeroFlowIsBitwiseIdentity) {
  const Volume v = random_volume({5, 6, 7}, 1);
  EXPECT_EQ(warp_volume(v, FlowField::zeros(v.dims)).voxels, v.voxels);
}

TEST(TrilinearWarp, UnitDepthShift) {
  const Dims d{6, 5, 4};
  const Volume v = random_volume(d, 2);
  const Volume w = warp_volume(v, constant_flow(d, 1, 0, 0));
  for (int z = 0; z + 1 < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) EXPECT_EQ(w.at(z, y, x), v.at(z + 1, y, x));
}

TEST(TrilinearWarp, WeightsSumToOneEverywhere) {
  const Dims d{6, 6, 6};
  Volume ones = Volume::zeros(d);
  for (float& v : ones.voxels) v = 1.0f;
  const FlowField f = smooth_flow(d, 3, 4.0);  // reaches well past the borders
  for (float v : warp_volume(ones, f).voxels) EXPECT_NEAR(v, 1.0f, 1e-6);
}

TEST(TrilinearWarp, DimsMismatchIsConfigError) {
  EXPECT_THROW(warp_volume(random_volume({4, 4, 4}, 1), FlowField::zeros({4, 4, 5})), ConfigError);
  EXPECT_THROW(nearest_warp_mask(MaskVolume::zeros({4, 4, 4}), FlowField::zeros({5, 4, 4})), ConfigError);
}

TEST(NearestWarpMask, ZeroFlowIdentity) {
  Rng rng(4);
  const MaskVolume m = check::random_mask({5, 5, 5}, rng, 0.4);
  EXPECT_EQ(nearest_warp_mask(m, FlowField::zeros(m.dims)).voxels, m.voxels);
}

TEST(NearestWarpMask, UnitShiftWithClampedBorder) {
  Rng rng(5);
  const Dims d{5, 4, 4};
  const MaskVolume m = check::random_mask(d, rng, 0.5);
  const MaskVolume w = nearest_warp_mask(m, constant_flow(d, 1, 0, 0));
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        const int src = std::min(z + 1, d.d - 1);
        EXPECT_EQ(w.voxels[d.index(z, y, x)], m.voxels[d.index(src, y, x)]);
      }
}

TEST(NearestWarpMask, OutputStaysBinary) {
  Rng rng(6);
  const Dims d{8, 8, 8};
  const MaskVolume m = check::random_mask(d, rng, 0.3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    for (auto v : nearest_warp_mask(m, smooth_flow(d, s, 3.0)).voxels) ASSERT_TRUE(v == 0 || v == 1);
  }
}

TEST(ComposeFlows, ZeroIsIdentityElement) {
  const Dims d{6, 6, 6};
  const FlowField f = smooth_flow(d, 7, 1.5);
  EXPECT_EQ(compose_flows(FlowField::zeros(d), f).disp, f.disp);
  const FlowField g = compose_flows(f, FlowField::zeros(d));
  for (std::size_t i = 0; i < f.disp.size(); ++i) EXPECT_NEAR(g.disp[i], f.disp[i], 1e-6);
}

TEST(ComposeFlows, IntegerTranslationsAdd) {
  const Dims d{6, 6, 6};
  const FlowField c = compose_flows(constant_flow(d, 1, 0, -2), constant_flow(d, 0, 2, 1));
  for (int ch = 0; ch < 3; ++ch) {
    const float want = ch == 0 ? 1.0f : ch == 1 ? 2.0f : -1.0f;
    for (float v : c.channel(ch)) EXPECT_EQ(v, want);
  }
}

TEST(ComposeFlows, ComposedWarpMatchesSequentialWarp) {
  const Dims d{16, 16, 16};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Volume v = blur_volume(random_volume(d, 10 + seed), 1.5);
    const FlowField first = smooth_flow(d, 20 + seed, 1.5), second = smooth_flow(d, 30 + seed, 1.5);
    const Volume seq = warp_volume(warp_volume(v, first), second);
    const Volume once = warp_volume(v, compose_flows(first, second));
    const int m = 3;
    for (int z = m; z < d.d - m; ++z)
      for (int y = m; y < d.h - m; ++y)
        for (int x = m; x < d.w - m; ++x) EXPECT_NEAR(once.at(z, y, x), seq.at(z, y, x), 2e-2);
  }
}

TEST(AffineToFlow, IdentityAndTranslation) {
  const Dims d{5, 6, 7};
  for (float v : affine_to_flow(AffineTransform::identity(), d).disp) EXPECT_EQ(v, 0.0f);
  AffineTransform t;
  t.translation = {0, 0, 2};
  const FlowField f = affine_to_flow(t, d);
  for (int ch = 0; ch < 3; ++ch)
    for (float v : f.channel(ch)) EXPECT_EQ(v, ch == 2 ? 2.0f : 0.0f);
}

TEST(AffineToFlow, QuarterTurnAboutDepthAxis) {
  // (h, w) -> (-w, h) about the centre of a 9^3 grid.
  const Dims d{9, 9, 9};
  AffineTransform t;
  t.matrix = {1, 0, 0, 0, 0, -1, 0, 1, 0};
  const FlowField f = affine_to_flow(t, d);
  const std::size_t n = d.voxels();
  const std::size_t centre = d.index(4, 4, 4);
  for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(f.disp[ch * n + centre], 0.0f, 1e-6);
  // (4,4,8) maps to (4,0,4): displacement (0,-4,-4).
  const std::size_t i = d.index(4, 4, 8);
  EXPECT_NEAR(f.disp[i], 0.0f, 1e-6);
  EXPECT_NEAR(f.disp[n + i], -4.0f, 1e-6);
  EXPECT_NEAR(f.disp[2 * n + i], -4.0f, 1e-6);
  // Every voxel against direct matrix evaluation.
  for (int z = 0; z < 9; ++z)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        const double q[3] = {z - 4.0, y - 4.0, x - 4.0};
        const std::size_t k = d.index(z, y, x);
        for (int r = 0; r < 3; ++r) {
          const double mapped = t.matrix[3 * r] * q[0] + t.matrix[3 * r + 1] * q[1] + t.matrix[3 * r + 2] * q[2] + 4.0;
          const double p = r == 0 ? z : r == 1 ? y : x;
          ASSERT_NEAR(f.disp[r * n + k], mapped - p, 1e-5);
        }
      }
}

TEST(AffineFlow, ZeroResidualGivesZeroFlow) {
  Tape tape;
  tape.set_enabled(false);
  const auto f = affine_flow(tape, Tensor<float>::zeros({2, 12}), Dims{8, 8, 8});
  for (float v : f.values()) ASSERT_EQ(v, 0.0f);
}

}  // namespace
}  // namespace curreg
