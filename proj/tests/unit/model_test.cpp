/* Copyright 2026 The TWNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "twnet/errors.hpp"
#include "twnet/model.hpp"
#include "twnet/ops.hpp"
#include "twnet/sequence.hpp"
#include "twnet/warp.hpp"

namespace twnet {
namespace {

using namespace testing;

BackboneConfig config_for(WarpLayer layer) {
  BackboneConfig c;
  c.warp_layer = layer;
  return c;
}

TEST(Backbone, LayerGeometry) {
  EXPECT_EQ(config_for(WarpLayer::kLayer1).retained_heads(), 2);
  EXPECT_EQ(config_for(WarpLayer::kLayer2).retained_heads(), 1);
  EXPECT_EQ(config_for(WarpLayer::kLayer3).retained_heads(), 0);
  EXPECT_EQ(config_for(WarpLayer::kLayer1).context_stride(), 4);
  EXPECT_EQ(config_for(WarpLayer::kLayer2).context_stride(), 2);
  EXPECT_EQ(config_for(WarpLayer::kLayer3).context_channels(), 4);
  EXPECT_THROW(warp_layer_from_int(4), ConfigError);
  BackboneConfig bad;
  bad.decoder_channels = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(KeyframeForward, ShapesAndContextStrides) {
  Rng rng(1, "init");
  const Tensor image = random_tensor({1, 3, 32, 48}, rng, 0, 1);
  for (auto layer : {WarpLayer::kLayer1, WarpLayer::kLayer2, WarpLayer::kLayer3}) {
    const BackboneConfig c = config_for(layer);
    const NetworkParams p = init_keyframe_params(c, rng);
    const KeyframeOutput out = keyframe_forward(image, p, c);
    EXPECT_EQ(out.logits.shape(), (Shape{1, 4, 32, 48}));
    const int s = c.context_stride();
    EXPECT_EQ(out.context.stride, s);
    EXPECT_EQ(out.context.tensor.shape(), (Shape{1, c.context_channels(), 32 / s, 48 / s}));
    const auto all = keyframe_contexts(image, p, c);
    EXPECT_EQ(all[static_cast<int>(layer) - 1].tensor.shape(), out.context.tensor.shape());
  }
}

TEST(KeyframeForward, RejectsIndivisibleImages) {
  Rng rng(2, "init");
  const BackboneConfig c;
  const NetworkParams p = init_keyframe_params(c, rng);
  EXPECT_THROW(keyframe_forward(Tensor::zeros({1, 3, 30, 32}), p, c), ShapeError);
  EXPECT_THROW(keyframe_forward(Tensor::zeros({1, 1, 32, 32}), p, c), ShapeError);
}

TEST(KeyframeForward, ZeroWeightsGiveLogK) {
  Rng rng(3, "init");
  const BackboneConfig c;
  NetworkParams p = init_keyframe_params(c, rng);
  for (const auto& [name, t] : p.tensors()) {
    Tensor h = t;
    for (double& v : h.mutable_values()) v = 0.0;
  }
  const Tensor image = random_tensor({1, 3, 16, 16}, rng, 0, 1);
  std::vector<std::uint8_t> labels(256);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  EXPECT_NEAR(softmax_cross_entropy(keyframe_forward(image, p, c).logits, labels).item(), std::log(4.0), 1e-12);
}

TEST(NkfcParams, CopiesRetainedHeadsOnly) {
  Rng rng(4, "init");
  for (auto layer : {WarpLayer::kLayer1, WarpLayer::kLayer2, WarpLayer::kLayer3}) {
    const BackboneConfig c = config_for(layer);
    const NetworkParams key = init_keyframe_params(c, rng);
    const NetworkParams p = init_nkfc_params(c, key);
    EXPECT_EQ(p.contains("nkfc.head1.conva.w"), c.retained_heads() >= 1);
    EXPECT_EQ(p.contains("nkfc.head2.conva.w"), c.retained_heads() >= 2);
    EXPECT_FALSE(p.contains("nkfc.head3.conva.w"));
    if (c.retained_heads() == 0) {
      EXPECT_FALSE(p.contains("cfr.w"));
      continue;
    }
    const auto a = p.get("nkfc.head1.conva.w").values();
    const auto b = key.get("key.head1.conva.w").values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    EXPECT_EQ(p.get("cfr.w").dim(0), c.context_channels());
    EXPECT_EQ(p.get("rga.w").dim(0), 1);
    for (double v : p.get("cfr.w").values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Cfr, ShapeAndZeroWeights) {
  Rng rng(5, "cfr");
  const BackboneConfig c;
  NetworkParams p = full_nkfc(c, rng);
  const FeatureMap warped{random_tensor({1, 8, 6, 8}, rng), 4};
  const FeatureMap spatial{random_tensor({1, 8, 6, 8}, rng), 4};
  EXPECT_EQ(cfr(warped, spatial, p).shape(), warped.tensor.shape());
  Tensor w = p.get("cfr.w"), b = p.get("cfr.b");
  for (double& v : w.mutable_values()) v = 0.0;
  for (double& v : b.mutable_values()) v = 0.0;
  const Tensor res = cfr(warped, spatial, p);
  for (double v : res.values()) EXPECT_EQ(v, 0.0);
  const FeatureMap applied = rga_apply(warped, res, Tensor::full({1, 1, 6, 8}, 0.7));
  for (std::size_t i = 0; i < res.numel(); ++i) EXPECT_EQ(applied.tensor.values()[i], warped.tensor.values()[i]);
  EXPECT_THROW(cfr(warped, {spatial.tensor, 2}, p), ShapeError);
}

TEST(Cfr, GradientReachesBothInputs) {
  Rng rng(6, "cfr");
  const BackboneConfig c;
  NetworkParams p = full_nkfc(c, rng);
  Tensor warped = random_tensor({1, 8, 4, 4}, rng, -1, 1, true);
  Tensor spatial = random_tensor({1, 8, 4, 4}, rng, -1, 1, true);
  sum_squares(std::vector<Tensor>{cfr({warped, 4}, {spatial, 4}, p)}).backward();
  auto nonzero = [](const Tensor& t) {
    for (double g : t.grad())
      if (g != 0.0) return true;
    return false;
  };
  EXPECT_TRUE(nonzero(warped));
  EXPECT_TRUE(nonzero(spatial));
}

TEST(Rga, AttentionExamples) {
  Rng rng(7, "rga");
  const BackboneConfig c;
  NetworkParams p = full_nkfc(c, rng);
  const FeatureMap target{Tensor::zeros({1, 8, 6, 8}), 4};
  const ResidualMap res = random_residual(24, 32, rng);

  const Tensor a = rga_attention(res, target, p);
  EXPECT_EQ(a.shape(), (Shape{1, 1, 6, 8}));
  for (double v : a.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }

  Tensor b = p.get("rga.b");
  b.mutable_values()[0] = 0.0;
  const Tensor zero_input = rga_attention(ResidualMap::zeros(24, 32), target, p);
  for (double v : zero_input.values()) EXPECT_EQ(v, 0.5);

  Tensor w = p.get("rga.w");
  for (double& v : w.mutable_values()) v = 0.0;
  const Tensor zero_weights = rga_attention(res, target, p);
  for (double v : zero_weights.values()) EXPECT_EQ(v, 0.5);
}

TEST(Rga, ApplyIsLinearInGate) {
  Rng rng(8, "rga");
  const FeatureMap warped{random_tensor({1, 3, 4, 5}, rng), 2};
  const Tensor res = random_tensor({1, 3, 4, 5}, rng);
  const auto base = warped.tensor.values();
  auto diff = [&](const FeatureMap& f, std::size_t i) { return f.tensor.values()[i] - base[i]; };

  const FeatureMap off = rga_apply(warped, res, Tensor::zeros({1, 1, 4, 5}));
  const FeatureMap on = rga_apply(warped, res, Tensor::full({1, 1, 4, 5}, 1.0));
  const FeatureMap half = rga_apply(warped, res, Tensor::full({1, 1, 4, 5}, 0.5));
  const Tensor gate = random_tensor({1, 1, 4, 5}, rng, 0, 1);
  const FeatureMap g1 = rga_apply(warped, res, gate);
  const FeatureMap g2 = rga_apply(warped, scale(res, 2.0), gate);
  for (std::size_t i = 0; i < res.numel(); ++i) {
    EXPECT_EQ(off.tensor.values()[i], base[i]);
    EXPECT_EQ(on.tensor.values()[i], base[i] + res.values()[i]);
    EXPECT_DOUBLE_EQ(diff(half, i), 0.5 * res.values()[i]);
    EXPECT_NEAR(diff(g2, i), 2.0 * diff(g1, i), 1e-12);
  }
  EXPECT_THROW(rga_apply(warped, Tensor::zeros({1, 2, 4, 5}), gate), ShapeError);
}

TEST(NkfcForward, ZeroCorrectionIsBitIdenticalToPlainWarping) {
  Rng rng(9, "nkfc");
  for (auto layer : {WarpLayer::kLayer1, WarpLayer::kLayer2}) {
    const BackboneConfig c = config_for(layer);
    NetworkParams p = full_nkfc(c, rng);
    Tensor w = p.get("cfr.w"), b = p.get("cfr.b");
    for (double& v : w.mutable_values()) v = 0.0;
    for (double& v : b.mutable_values()) v = 0.0;
    const int s = c.context_stride();
    const Tensor image = random_tensor({1, 3, 16, 24}, rng, 0, 1);
    const FeatureMap ctx{random_tensor({1, c.context_channels(), 16 / s, 24 / s}, rng), s};
    const MotionMap mv = small_motion(16, 24, rng);
    const ResidualMap res = random_residual(16, 24, rng);
    const NkfcOutput plain = nkfc_forward(image, ctx, mv, res, p, c, {false, false});
    for (NkfcFlags flags : {NkfcFlags{true, false}, NkfcFlags{true, true}}) {
      const NkfcOutput corrected = nkfc_forward(image, ctx, mv, res, p, c, flags);
      const auto a = plain.logits.values(), bv = corrected.logits.values();
      EXPECT_TRUE(std::equal(a.begin(), a.end(), bv.begin(), bv.end()));
    }
  }
}

TEST(NkfcForward, LayerThreeZeroMotionReproducesKeyFrame) {
  Rng rng(10, "nkfc");
  const BackboneConfig c = config_for(WarpLayer::kLayer3);
  const NetworkParams key = init_keyframe_params(c, rng);
  const NetworkParams p = init_nkfc_params(c, key);
  const Tensor image = random_tensor({1, 3, 16, 16}, rng, 0, 1);
  const KeyframeOutput k = keyframe_forward(image, key, c);
  const NkfcOutput n =
      nkfc_forward(image, k.context, MotionMap::zeros(16, 16), ResidualMap::zeros(16, 16), p, c, {false, false});
  const auto a = k.logits.values(), b = n.logits.values();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  EXPECT_THROW(nkfc_forward(image, k.context, MotionMap::zeros(16, 16), ResidualMap::zeros(16, 16), p, c,
                            {true, false}),
               ConfigError);
}

TEST(NkfcForward, ChainsElevenFrames) {
  const GopSequence seq = generate_sequence(default_scene(2), 1);
  Rng rng(11, "nkfc");
  const BackboneConfig c;
  const NetworkParams key = init_keyframe_params(c, rng);
  const NetworkParams p = init_nkfc_params(c, key);
  NoGradGuard no_grad;
  FeatureMap ctx = keyframe_forward(to_tensor(seq.frames[0].image), key, c).context;
  const Shape shape = ctx.tensor.shape();
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    const Frame& fr = seq.frames[f];
    const NkfcOutput out = nkfc_forward(to_tensor(fr.image), ctx, *fr.motion, *fr.residual, p, c, {true, true});
    EXPECT_EQ(out.context.tensor.shape(), shape);
    EXPECT_EQ(out.logits.shape(), (Shape{1, 4, 96, 128}));
    ctx = out.context;
  }
}

TEST(NkfcForward, RejectsBadInputs) {
  Rng rng(12, "nkfc");
  const BackboneConfig c;
  const NetworkParams p = full_nkfc(c, rng);
  const Tensor image = Tensor::zeros({1, 3, 16, 16});
  const MotionMap mv = MotionMap::zeros(16, 16);
  const ResidualMap res = ResidualMap::zeros(16, 16);
  const FeatureMap good{Tensor::zeros({1, 8, 4, 4}), 4};
  EXPECT_THROW(nkfc_forward(image, good, mv, res, p, c, {false, true}), ConfigError);
  EXPECT_THROW(nkfc_forward(image, {Tensor::zeros({1, 8, 8, 8}), 2}, mv, res, p, c, {}), ShapeError);
  EXPECT_THROW(nkfc_forward(image, {Tensor::zeros({1, 5, 4, 4}), 4}, mv, res, p, c, {}), ShapeError);
  EXPECT_NO_THROW(nkfc_forward(image, good, mv, res, p, c, {true, true}));
}

TEST(ArgmaxLabels, PicksLargestLogit) {
  const Tensor logits = Tensor::from({1, 3, 1, 2}, {0.1, 2.0, 0.5, -1.0, 0.2, 3.0});
  EXPECT_EQ(argmax_labels(logits).data, (std::vector<std::uint8_t>{1, 2}));
}

}  // namespace
}  // namespace twnet
