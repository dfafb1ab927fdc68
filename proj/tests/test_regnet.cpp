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
#include <map>

#include "checks.hpp"
#include "curreg/error.hpp"
#include "curreg/objective.hpp"
#include "curreg/optim.hpp"
#include "curreg/phantom.hpp"
#include "curreg/regnet.hpp"

namespace curreg {
namespace {

Tensor<float> random_input(const Dims& d, std::uint64_t seed, int batch = 1) {
  Rng rng(seed);
  auto t = Tensor<float>::zeros({batch, 1, d.d, d.h, d.w});
  for (float& v : t.mutable_values()) v = static_cast<float>(rng.uniform());
  return t;
}

// Replaces every parameter (heads included) with small random values so the
// network output is non-trivial.
void randomize(ParameterStore<float>& params, std::uint64_t seed, double scale = 0.05) {
  Rng rng(seed);
  for (auto& [name, t] : params)
    for (float& v : t.mutable_values()) v = static_cast<float>(rng.uniform(-scale, scale));
}

std::vector<float> to_vec(const Tensor<float>& t) { return {t.values().begin(), t.values().end()}; }

TEST(RegNet, ParameterCountMatchesStore) {
  for (bool affine : {true, false}) {
    CascadeConfig cfg;
    cfg.affine.enabled = affine;
    const auto params = init_parameters<float>(cfg, Rng(1));
    EXPECT_EQ(params.scalar_count(), parameter_count(cfg));
  }
  EXPECT_EQ(parameter_count(CascadeConfig{}), 121801u);
}

TEST(RegNet, InitIsDeterministic) {
  const CascadeConfig cfg;
  EXPECT_EQ(init_parameters<float>(cfg, Rng(3)).checksum(), init_parameters<float>(cfg, Rng(3)).checksum());
  EXPECT_NE(init_parameters<float>(cfg, Rng(3)).checksum(), init_parameters<float>(cfg, Rng(4)).checksum());
}

TEST(RegNet, IdentityAtInit) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(5));
  Tape tape;
  ForwardContext ctx{tape};
  const auto fixed = random_input(d, 1, 2), moving = random_input(d, 2, 2);
  const auto out = cascade_forward(ctx, fixed, moving, params, cfg);
  EXPECT_EQ(out.flow.shape(), (Shape{2, 3, 16, 16, 16}));
  for (float v : out.flow.values()) ASSERT_EQ(v, 0.0f);
  float change = 0;
  for (std::size_t i = 0; i < moving.numel(); ++i)
    change = std::max(change, std::abs(out.warped.values()[i] - moving.values()[i]));
  EXPECT_LT(change, 1e-6f);
}

TEST(RegNet, RejectsIndivisibleExtents) {
  const CascadeConfig cfg;
  EXPECT_THROW(validate_config(cfg, Dims{16, 16, 12}), ConfigError);
  EXPECT_NO_THROW(validate_config(cfg, Dims{16, 16, 16}));
  auto params = init_parameters<float>(cfg, Rng(1));
  Tape tape;
  ForwardContext ctx{tape};
  const Dims bad{12, 16, 16};
  EXPECT_THROW(cascade_forward(ctx, random_input(bad, 1), random_input(bad, 2), params, cfg), ConfigError);
}

TEST(RegNet, ZeroHooksAreBitwiseNoOps) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto run = [&](bool with_zero_hooks) {
    auto params = init_parameters<float>(cfg, Rng(7));
    randomize(params, 8);
    Tape tape;
    Rng drop(99);
    ForwardContext ctx{tape};
    if (with_zero_hooks) {
      ctx.hooks = CurriculumHooks{0.0, 0.0};
      ctx.dropout_rng = &drop;
      ctx.training = true;
    }
    const auto fixed = random_input(d, 1), moving = random_input(d, 2);
    auto out = cascade_forward(ctx, fixed, moving, params, cfg);
    auto loss = similarity_loss(tape, out.warped, fixed);
    backward(loss, tape);
    std::vector<float> all = to_vec(out.flow);
    for (auto& [name, t] : params) all.insert(all.end(), t.grad().begin(), t.grad().end());
    return std::make_pair(all, drop);
  };
  const auto [plain, rng_plain] = run(false);
  const auto [hooked, rng_hooked] = run(true);
  EXPECT_EQ(plain, hooked);
  EXPECT_EQ(rng_hooked, Rng(99));  // no randomness consumed at rate 0
}

TEST(RegNet, DropoutNeedsRngWhenTraining) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(1));
  Tape tape;
  ForwardContext ctx{tape};
  ctx.hooks.dropout_rate = 0.3;
  ctx.training = true;
  EXPECT_THROW(cascade_forward(ctx, random_input(d, 1), random_input(d, 2), params, cfg), UsageError);
}

TEST(RegNet, DropoutInactiveOutsideTraining) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(2));
  randomize(params, 3);
  const auto f = random_input(d, 1), m = random_input(d, 2);
  Tape t1, t2;
  ForwardContext plain{t1};
  ForwardContext eval{t2};
  eval.hooks.dropout_rate = 0.5;
  EXPECT_EQ(to_vec(cascade_forward(plain, f, m, params, cfg).flow), to_vec(cascade_forward(eval, f, m, params, cfg).flow));
}

double slice_tv(const std::vector<double>& values, const Shape& shape) {
  const Dims d{shape[2], shape[3], shape[4]};
  const std::size_t n = d.voxels();
  double tv = 0;
  for (std::size_t off = 0; off < values.size(); off += n) {
    std::vector<float> slice(values.begin() + off, values.begin() + off + n);
    tv += total_variation(slice, d);
  }
  return tv;
}

TEST(RegNet, FeatureSmoothingLowersPreactivationVariation) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(11));
  const auto f = random_input(d, 1), m = random_input(d, 2);
  auto collect = [&](double sigma) {
    std::map<std::string, double> tv;
    Tape tape;
    tape.set_enabled(false);
    ForwardContext ctx{tape};
    ctx.hooks.feature_smoothing_sigma = sigma;
    ctx.preactivation_observer = [&](const std::string& block, const Shape& shape, const std::vector<double>& v) {
      tv[block] = slice_tv(v, shape);
    };
    cascade_forward(ctx, f, m, params, cfg);
    return tv;
  };
  const auto rough = collect(0.0), smooth = collect(1.0);
  ASSERT_FALSE(rough.empty());
  ASSERT_EQ(rough.size(), smooth.size());
  for (const auto& [block, tv] : rough) EXPECT_LT(smooth.at(block), tv) << block;
}

TEST(RegNet, DisabledAffineGivesDeformableFlow) {
  const Dims d{16, 16, 16};
  CascadeConfig cfg;
  cfg.affine.enabled = false;
  auto params = init_parameters<float>(cfg, Rng(4));
  randomize(params, 5);
  for (const auto& [name, t] : params) EXPECT_NE(name.rfind("aff.", 0), 0u) << name;
  Tape tape;
  ForwardContext ctx{tape};
  const auto out = cascade_forward(ctx, random_input(d, 1), random_input(d, 2), params, cfg);
  EXPECT_FALSE(out.affine_params.defined());
  EXPECT_EQ(to_vec(out.flow), to_vec(out.deformable_flow));
}

TEST(RegNet, AffineStaysNearIdentityOnIdenticalInputs) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(6));
  Optimizer<float> opt({OptimizerKind::kAdam, 1e-3});
  const PairSample p = generate_pair(3, d, DeformOptions{1.5});
  const auto img = volume_tensor<float>(p.fixed);
  Tensor<float> affine;
  for (int it = 0; it < 200; ++it) {
    Tape tape;
    ForwardContext ctx{tape};
    params.zero_grad();
    auto out = cascade_forward(ctx, img, img, params, cfg);
    auto loss = similarity_loss(tape, out.warped, img);
    backward(loss, tape);
    opt.step(params);
    affine = out.affine_params;
  }
  ASSERT_TRUE(affine.defined());
  for (int i = 0; i < 9; ++i) EXPECT_LT(std::abs(affine.values()[i]), 0.05f) << i;
  for (int i = 9; i < 12; ++i) EXPECT_LT(std::abs(affine.values()[i]), 0.5f) << i;
}

TEST(RegNet, OverfitsSinglePair) {
  const Dims d{16, 16, 16};
  const CascadeConfig cfg;
  auto params = init_parameters<float>(cfg, Rng(9));
  Optimizer<float> opt({OptimizerKind::kAdam, 1e-3});
  const PairSample p = generate_pair(21, d, DeformOptions{1.5});
  const auto fixed = volume_tensor<float>(p.fixed), moving = volume_tensor<float>(p.moving);
  auto loss_at = [&](bool update) {
    Tape tape;
    ForwardContext ctx{tape};
    params.zero_grad();
    auto out = cascade_forward(ctx, fixed, moving, params, cfg);
    auto sim = similarity_loss(tape, out.warped, fixed);
    const double v = sim.item();
    if (update) {
      backward(sim, tape);
      opt.step(params);
    }
    return v;
  };
  const double initial = loss_at(false);
  for (int it = 0; it < 500; ++it) loss_at(true);
  const double final_loss = loss_at(false);
  EXPECT_LT(final_loss, 0.5 * initial) << initial << " -> " << final_loss;
}

}  // namespace
}  // namespace curreg
