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

#include "curreg/regnet.hpp"

#include <cmath>
#include <string>

#include "curreg/error.hpp"
#include "curreg/gaussian.hpp"
#include "curreg/ops.hpp"

namespace curreg {
namespace {

constexpr int kInputChannels = 2;  // fixed + moving
constexpr int kAffineOutputs = 12;

struct ConvSpec {
  std::string name;
  int cin, cout, kernel;
  bool transposed;
  bool head;  // zero-initialized output layer
};

// Layer table shared by init_parameters and parameter_count.
std::vector<ConvSpec> deformable_layers(const DeformableNetConfig& c) {
  std::vector<ConvSpec> layers;
  const int b = c.base_channels;
  auto ch = [b](int level) { return b << (level - 1); };  // level >= 1
  for (int l = 1; l <= c.levels; ++l) {
    layers.push_back({"def.enc" + std::to_string(l), l == 1 ? kInputChannels : ch(l - 1), ch(l), 3, false, false});
  }
  layers.push_back({"def.bottleneck", ch(c.levels), ch(c.levels), 3, false, false});
  int cin = ch(c.levels);
  for (int l = c.levels; l >= 1; --l) {
    const int cout = l >= 2 ? ch(l - 1) : b;
    layers.push_back({"def.dec" + std::to_string(l), cin, cout, 4, true, false});
    cin = cout + (l >= 2 ? ch(l - 1) : kInputChannels);  // after skip concatenation
  }
  layers.push_back({"def.flow", cin, 3, 3, false, true});
  return layers;
}

std::vector<ConvSpec> affine_layers(const AffineNetConfig& c) {
  std::vector<ConvSpec> layers;
  for (int l = 1; l <= c.levels; ++l) {
    layers.push_back({"aff.enc" + std::to_string(l), l == 1 ? kInputChannels : c.base_channels << (l - 2),
                      c.base_channels << (l - 1), 3, false, false});
  }
  return layers;
}

int affine_features(const AffineNetConfig& c) { return c.base_channels << (c.levels - 1); }

template <typename T>
void add_conv(ParameterStore<T>& params, const ConvSpec& s, Rng& rng, double negative_slope) {
  // Weight layout (Cout,Cin,k,k,k) for conv, (Cin,Cout,k,k,k) for transposed conv.
  const Shape wshape = s.transposed ? Shape{s.cin, s.cout, s.kernel, s.kernel, s.kernel}
                                    : Shape{s.cout, s.cin, s.kernel, s.kernel, s.kernel};
  std::vector<T> w(wshape.numel(), T(0));
  if (!s.head) {
    // Inputs feeding one output: Cin * k^3, or Cin * (k/2)^3 for stride-2 transposed conv.
    const int taps = s.transposed ? (s.kernel / 2) * (s.kernel / 2) * (s.kernel / 2) : s.kernel * s.kernel * s.kernel;
    const double fan_in = static_cast<double>(s.cin) * taps;
    const double bound = std::sqrt(6.0 / ((1.0 + negative_slope * negative_slope) * fan_in));
    for (T& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  params.add(s.name + ".w", Tensor<T>::from(wshape, std::move(w), true));
  params.add(s.name + ".b", Tensor<T>::zeros(Shape{s.cout}, true));
}

enum class Resample { kDown, kSame, kUp };

// activation(smooth(w * h)) followed by optional dropout.
template <typename T>
Tensor<T> conv_block(ForwardContext& ctx, const Tensor<T>& x, ParameterStore<T>& params, const std::string& name,
                     Resample mode, double negative_slope) {
  const Tensor<T>& w = params.at(name + ".w");
  const Tensor<T>& b = params.at(name + ".b");
  Tensor<T> h = mode == Resample::kUp     ? conv_transpose3d(ctx.tape, x, w, b, 2, 1)
                : mode == Resample::kDown ? conv3d(ctx.tape, x, w, b, 2, 1)
                                          : conv3d(ctx.tape, x, w, b, 1, 1);
  if (ctx.hooks.feature_smoothing_sigma > 0.0) {
    h = ctx.smoothing_kernel ? smooth_featuremap(ctx.tape, h, *ctx.smoothing_kernel)
                             : smooth_featuremap(ctx.tape, h, ctx.hooks.feature_smoothing_sigma);
  }
  if (ctx.preactivation_observer) {
    ctx.preactivation_observer(name, h.shape(), std::vector<double>(h.values().begin(), h.values().end()));
  }
  if (ctx.training && ctx.hooks.dropout_rate > 0.0) {
    if (!ctx.dropout_rng) throw UsageError("dropout hook enabled without a dropout RNG stream");
    return leaky_relu_dropout(ctx.tape, h, negative_slope, ctx.hooks.dropout_rate, *ctx.dropout_rng);
  }
  return leaky_relu(ctx.tape, h, negative_slope);
}

void check_inputs(const Shape& fixed, const Shape& moving) {
  if (fixed.rank() != 5 || fixed[1] != 1) throw ConfigError("fixed image must be (N,1,D,H,W), got " + fixed.str());
  if (fixed != moving) throw ConfigError("fixed/moving shape mismatch: " + fixed.str() + " vs " + moving.str());
}

void check_divisible(const Dims& dims, int levels, const char* what) {
  if (levels < 1) throw ConfigError(std::string(what) + ": levels must be >= 1");
  const int f = 1 << levels;
  if (dims.d % f || dims.h % f || dims.w % f) {
    throw ConfigError(std::string(what) + ": volume extents " + dims.str() + " must be divisible by 2^levels = " +
                      std::to_string(f));
  }
}

}  // namespace

void validate_config(const CascadeConfig& cfg, const Dims& dims) {
  if (cfg.deformable.base_channels < 1 || cfg.affine.base_channels < 1) {
    throw ConfigError("base_channels must be >= 1");
  }
  check_divisible(dims, cfg.deformable.levels, "deformable net");
  if (cfg.affine.enabled) check_divisible(dims, cfg.affine.levels, "affine net");
}

template <typename T>
ParameterStore<T> init_parameters(const CascadeConfig& cfg, Rng rng) {
  if (cfg.deformable.levels < 1 || cfg.affine.levels < 1) throw ConfigError("levels must be >= 1");
  ParameterStore<T> params;
  for (const ConvSpec& s : deformable_layers(cfg.deformable)) add_conv(params, s, rng, cfg.deformable.negative_slope);
  if (cfg.affine.enabled) {
    for (const ConvSpec& s : affine_layers(cfg.affine)) add_conv(params, s, rng, cfg.affine.negative_slope);
    params.add("aff.head.w", Tensor<T>::zeros(Shape{kAffineOutputs, affine_features(cfg.affine)}, true));
    params.add("aff.head.b", Tensor<T>::zeros(Shape{kAffineOutputs}, true));
  }
  return params;
}

std::size_t parameter_count(const CascadeConfig& cfg) {
  std::size_t n = 0;
  auto conv = [&n](const ConvSpec& s) {
    n += static_cast<std::size_t>(s.cin) * s.cout * s.kernel * s.kernel * s.kernel + s.cout;
  };
  for (const ConvSpec& s : deformable_layers(cfg.deformable)) conv(s);
  if (cfg.affine.enabled) {
    for (const ConvSpec& s : affine_layers(cfg.affine)) conv(s);
    n += static_cast<std::size_t>(kAffineOutputs) * affine_features(cfg.affine) + kAffineOutputs;
  }
  return n;
}

template <typename T>
Tensor<T> deformable_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                             ParameterStore<T>& params, const DeformableNetConfig& cfg) {
  check_inputs(fixed.shape(), moving.shape());
  check_divisible(dims_of(fixed.shape()), cfg.levels, "deformable net");
  const double slope = cfg.negative_slope;
  const Tensor<T> input = concat_channels(ctx.tape, fixed, moving);
  std::vector<Tensor<T>> skips;
  skips.push_back(input);
  Tensor<T> h = input;
  for (int l = 1; l <= cfg.levels; ++l) {
    h = conv_block(ctx, h, params, "def.enc" + std::to_string(l), Resample::kDown, slope);
    skips.push_back(h);
  }
  h = conv_block(ctx, h, params, "def.bottleneck", Resample::kSame, slope);
  for (int l = cfg.levels; l >= 1; --l) {
    h = conv_block(ctx, h, params, "def.dec" + std::to_string(l), Resample::kUp, slope);
    h = concat_channels(ctx.tape, h, skips[l - 1]);
  }
  return conv3d(ctx.tape, h, params.at("def.flow.w"), params.at("def.flow.b"), 1, 1);
}

template <typename T>
Tensor<T> affine_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                         ParameterStore<T>& params, const AffineNetConfig& cfg) {
  check_inputs(fixed.shape(), moving.shape());
  check_divisible(dims_of(fixed.shape()), cfg.levels, "affine net");
  Tensor<T> h = concat_channels(ctx.tape, fixed, moving);
  for (int l = 1; l <= cfg.levels; ++l) {
    h = conv_block(ctx, h, params, "aff.enc" + std::to_string(l), Resample::kDown, cfg.negative_slope);
  }
  const Tensor<T> pooled = global_avg_pool(ctx.tape, h);
  return linear(ctx.tape, pooled, params.at("aff.head.w"), params.at("aff.head.b"));
}

template <typename T>
CascadeOutput<T> cascade_forward(ForwardContext& ctx, const Tensor<T>& fixed, const Tensor<T>& moving,
                                 ParameterStore<T>& params, const CascadeConfig& cfg) {
  check_inputs(fixed.shape(), moving.shape());
  const Dims dims = dims_of(fixed.shape());
  validate_config(cfg, dims);
  CascadeOutput<T> out;
  Tensor<T> moving1 = moving;
  if (cfg.affine.enabled) {
    out.affine_params = affine_forward(ctx, fixed, moving, params, cfg.affine);
    out.affine_flow = affine_flow(ctx.tape, out.affine_params, dims);
    moving1 = trilinear_warp(ctx.tape, moving, out.affine_flow);
  }
  out.deformable_flow = deformable_forward(ctx, fixed, moving1, params, cfg.deformable);
  out.flow = cfg.affine.enabled ? compose_flows(ctx.tape, out.affine_flow, out.deformable_flow) : out.deformable_flow;
  out.warped = trilinear_warp(ctx.tape, moving, out.flow);
  return out;
}

#define CURREG_INSTANTIATE_REGNET(T)                                                                     \
  template ParameterStore<T> init_parameters<T>(const CascadeConfig&, Rng);                              \
  template Tensor<T> deformable_forward(ForwardContext&, const Tensor<T>&, const Tensor<T>&,             \
                                        ParameterStore<T>&, const DeformableNetConfig&);                 \
  template Tensor<T> affine_forward(ForwardContext&, const Tensor<T>&, const Tensor<T>&, ParameterStore<T>&, \
                                    const AffineNetConfig&);                                             \
  template CascadeOutput<T> cascade_forward(ForwardContext&, const Tensor<T>&, const Tensor<T>&,         \
                                            ParameterStore<T>&, const CascadeConfig&);

CURREG_INSTANTIATE_REGNET(float)
CURREG_INSTANTIATE_REGNET(double)

}  // namespace curreg
