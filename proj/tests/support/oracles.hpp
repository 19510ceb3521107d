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

#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "twnet/model.hpp"
#include "twnet/ops.hpp"
#include "twnet/sequence.hpp"
#include "twnet/warp.hpp"

namespace twnet::testing {

inline Image random_image(int c, int h, int w, Rng& rng) {
  Image img = Image::zeros(c, h, w);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Pixel values on the 1/256 grid, as frames are stored.
inline Image quantized_image(int h, int w, Rng& rng) {
  Image img = Image::zeros(3, h, w);
  for (float& v : img.data) v = static_cast<float>(rng.uniform_int(0, 255)) / 256.0f;
  return img;
}

// Mixes integer, quarter-pel and arbitrary displacements, some far outside
// the frame so clamping is exercised.
inline MotionMap wild_motion(int h, int w, Rng& rng) {
  MotionMap mv = MotionMap::zeros(h, w);
  for (std::size_t i = 0; i < mv.dx.size(); ++i) {
    const int kind = rng.uniform_int(0, 2);
    auto draw = [&] {
      if (kind == 0) return static_cast<float>(rng.uniform_int(-4, 4));
      if (kind == 1) return static_cast<float>(rng.uniform_int(-20, 20)) * 0.25f;
      return static_cast<float>(rng.uniform(-1.5 * w, 1.5 * w));
    };
    mv.dx[i] = draw();
    mv.dy[i] = draw();
  }
  return mv;
}

inline MotionMap small_motion(int h, int w, Rng& rng) {
  MotionMap mv = MotionMap::zeros(h, w);
  for (std::size_t i = 0; i < mv.dx.size(); ++i) {
    mv.dx[i] = static_cast<float>(rng.uniform(-3, 3));
    mv.dy[i] = static_cast<float>(rng.uniform(-3, 3));
  }
  return mv;
}

inline ResidualMap random_residual(int h, int w, Rng& rng) {
  ResidualMap r = ResidualMap::zeros(h, w);
  for (float& v : r.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  return r;
}

inline double sample_bilinear(const std::vector<double>& plane, int h, int w, double sy, double sx) {
  sy = std::min(std::max(sy, 0.0), h - 1.0);
  sx = std::min(std::max(sx, 0.0), w - 1.0);
  const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
  const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - y0, fx = sx - x0;
  double acc = 0.0;
  acc += (1 - fy) * (1 - fx) * plane[y0 * w + x0];
  acc += (1 - fy) * fx * plane[y0 * w + x1];
  acc += fy * (1 - fx) * plane[y1 * w + x0];
  acc += fy * fx * plane[y1 * w + x1];
  return acc;
}

// Closest integer to v; ties go to the larger one.
inline int closest_int(double v) {
  const double lo = std::floor(v);
  return static_cast<int>(v - lo < 0.5 ? lo : lo + 1);
}

inline std::vector<double> plane_of(const Image& img, int c) {
  std::vector<double> p(img.plane_size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p[y * img.width + x] = img.at(c, y, x);
  return p;
}

struct WarpOracleResult {
  int image_instances = 0;
  int feature_instances = 0;
  std::int64_t nearest_mismatches = 0;
  double image_bilinear_error = 0.0;
  double feature_error = 0.0;
};

// Per-pixel loops against warp_image (both modes) and warp_features on
// random instances up to 16x16, 17 per seed.
inline WarpOracleResult run_warp_oracle(const std::vector<int>& seeds) {
  WarpOracleResult r;
  for (int seed : seeds) {
    Rng rng(seed, "warp-oracle");
    for (int n = 0; n < 17; ++n, ++r.image_instances) {
      const int h = rng.uniform_int(1, 16), w = rng.uniform_int(1, 16), c = rng.uniform_int(1, 3);
      const Image prev = random_image(c, h, w, rng);
      const MotionMap mv = wild_motion(h, w, rng);
      const Image nearest = warp_image(prev, mv, SampleMode::kNearest);
      const Image bilinear = warp_image(prev, mv, SampleMode::kBilinear);
      for (int ch = 0; ch < c; ++ch) {
        const auto plane = plane_of(prev, ch);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const double sx = x - static_cast<double>(mv.dx[mv.index(y, x)]);
            const double sy = y - static_cast<double>(mv.dy[mv.index(y, x)]);
            const int ix = std::clamp(closest_int(sx), 0, w - 1);
            const int iy = std::clamp(closest_int(sy), 0, h - 1);
            r.nearest_mismatches += nearest.at(ch, y, x) != prev.at(ch, iy, ix);
            const float ref = static_cast<float>(sample_bilinear(plane, h, w, sy, sx));
            r.image_bilinear_error =
                std::max(r.image_bilinear_error, std::abs(static_cast<double>(bilinear.at(ch, y, x)) - ref));
          }
      }
    }
    Rng frng(seed, "feature-oracle");
    for (int n = 0; n < 17; ++n, ++r.feature_instances) {
      const int s = 1 << frng.uniform_int(0, 2);
      const int h = frng.uniform_int(1, 16 / s), w = frng.uniform_int(1, 16 / s), c = frng.uniform_int(1, 4);
      const Tensor feat = random_tensor({1, c, h, w}, frng);
      const MotionMap mv = wild_motion(h * s, w * s, frng);
      const FeatureMap out = warp_features({feat, s}, mv);
      const auto fv = feat.values();
      const auto ov = out.tensor.values();
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double mx = 0, my = 0;
          for (int by = 0; by < s; ++by)
            for (int bx = 0; bx < s; ++bx) {
              mx += mv.dx[mv.index(y * s + by, x * s + bx)];
              my += mv.dy[mv.index(y * s + by, x * s + bx)];
            }
          mx /= s * s * s;
          my /= s * s * s;
          for (int ch = 0; ch < c; ++ch) {
            const std::vector<double> plane(fv.begin() + ch * h * w, fv.begin() + (ch + 1) * h * w);
            const double ref = sample_bilinear(plane, h, w, y - my, x - mx);
            r.feature_error = std::max(r.feature_error, std::abs(ov[(ch * h + y) * w + x] - ref));
          }
        }
    }
  }
  return r;
}

struct CodecResult {
  int frames_checked = 0;
  int mismatches = 0;
};

// Every P-frame of `sequences` default scenes rebuilt from its predecessor.
inline CodecResult run_codec_closure(int sequences) {
  CodecResult r;
  for (int seed = 0; seed < sequences; ++seed) {
    const GopSequence seq = generate_sequence(default_scene(static_cast<std::uint64_t>(seed)), 1);
    for (std::size_t f = 1; f < seq.frames.size(); ++f) {
      const Frame& fr = seq.frames[f];
      ++r.frames_checked;
      if (fr.is_intra() || !(reconstruct_frame(seq.frames[f - 1].image, *fr.motion, *fr.residual) == fr.image)) {
        ++r.mismatches;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------- gradients

inline BackboneConfig tiny_config(WarpLayer layer) {
  BackboneConfig c;
  c.head_channels = {2, 3, 4};
  c.decoder_channels = 3;
  c.class_count = 3;
  c.warp_layer = layer;
  return c;
}

inline void randomize(NetworkParams& p, Rng& rng, double scale = 0.5) {
  for (const auto& [name, t] : p.tensors()) {
    Tensor h = t;
    for (double& v : h.mutable_values()) v = rng.uniform(-scale, scale);
  }
}

// NKFC parameters with every tensor, correction modules included, randomised.
inline NetworkParams full_nkfc(const BackboneConfig& c, Rng& rng) {
  NetworkParams key = init_keyframe_params(c, rng);
  NetworkParams p = init_nkfc_params(c, key);
  randomize(p, rng);
  return p;
}

inline std::vector<std::uint8_t> random_labels(std::size_t n, int classes, Rng& rng) {
  std::vector<std::uint8_t> labels(n);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
  return labels;
}

struct GradCase {
  std::string name;
  std::function<GradReport(int seed)> run;
  double tolerance;
};

constexpr int kGradCases = 20;

// Op-level probes are quadratic and use a wide step. Whole-network paths use a
// narrow step and skip the rare entries whose step straddles a ReLU kink.
inline std::vector<GradCase> gradient_cases() {
  constexpr double kOpTol = 1e-6, kPathTol = 1e-5, kPathStep = 1e-6, kKink = 1e-3;
  using Fn = std::function<Tensor(const std::vector<Tensor>&)>;
  auto op = [](Fn f, std::vector<Tensor> in) { return gradcheck_report(f, std::move(in), 1e-4); };
  auto net = [](Fn f, std::vector<Tensor> in) { return gradcheck_report(f, std::move(in), kPathStep, 1e-3, kKink); };
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, std::function<Tensor(const Tensor&)> fn) {
    cases.push_back({name,
                     [=](int seed) {
                       Rng rng(seed, "grad-" + name);
                       const Tensor t = random_tensor({1, 3, 3, 4}, rng);
                       return op([&](const auto& x) { return probe(fn(x[0]), t); }, {random_tensor({1, 3, 3, 4}, rng)});
                     },
                     kOpTol});
  };
  auto binary = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> fn, Shape b_shape) {
    cases.push_back({name,
                     [=](int seed) {
                       Rng rng(seed, "grad-" + name);
                       const Tensor t = random_tensor({1, 3, 3, 4}, rng);
                       return op([&](const auto& x) { return probe(fn(x[0], x[1]), t); },
                                 {random_tensor({1, 3, 3, 4}, rng), random_tensor(b_shape, rng)});
                     },
                     kOpTol});
  };

  cases.push_back({"conv2d",
                   [=](int seed) {
                     Rng rng(seed, "grad-conv");
                     const int stride = 1 + seed % 2, pad = seed % 3 == 0 ? 0 : 1, k = seed % 4 == 0 ? 1 : 3;
                     const Tensor target = random_tensor(
                         conv2d(Tensor::zeros({1, 2, 5, 6}), Tensor::zeros({3, 2, k, k}), Tensor(), stride, pad)
                             .shape(),
                         rng);
                     return op([&](const auto& in) { return probe(conv2d(in[0], in[1], in[2], stride, pad), target); },
                               {random_tensor({1, 2, 5, 6}, rng), random_tensor({3, 2, k, k}, rng),
                                random_tensor({3}, rng)});
                   },
                   kOpTol});
  cases.push_back({"bilinear_resize",
                   [=](int seed) {
                     Rng rng(seed, "grad-resize");
                     const int oh = 2 + seed % 7, ow = 3 + seed % 5;
                     const Tensor t = random_tensor({1, 2, oh, ow}, rng);
                     return op([&](const auto& in) { return probe(bilinear_resize(in[0], oh, ow), t); },
                               {random_tensor({1, 2, 4, 5}, rng)});
                   },
                   kOpTol});
  for (bool nearest : {false, true}) {
    cases.push_back({nearest ? "upsample2x_nearest" : "upsample2x_bilinear",
                     [=](int seed) {
                       Rng rng(seed, nearest ? "grad-up-n" : "grad-up-b");
                       const Tensor t = random_tensor({1, 2, 8, 10}, rng);
                       return op(
                           [&](const auto& in) {
                             return probe(nearest ? upsample2x_nearest(in[0]) : upsample2x_bilinear(in[0]), t);
                           },
                           {random_tensor({1, 2, 4, 5}, rng)});
                     },
                     kOpTol});
  }
  unary("relu", [](const Tensor& x) { return relu(x); });
  unary("sigmoid", [](const Tensor& x) { return sigmoid(x); });
  unary("scale", [](const Tensor& x) { return scale(x, -2.5); });
  binary("add", [](const Tensor& a, const Tensor& b) { return add(a, b); }, {1, 3, 3, 4});
  binary("sub", [](const Tensor& a, const Tensor& b) { return sub(a, b); }, {1, 3, 3, 4});
  binary("mul", [](const Tensor& a, const Tensor& b) { return mul(a, b); }, {1, 3, 3, 4});
  binary("mul_broadcast", [](const Tensor& a, const Tensor& b) { return mul(a, b); }, {1, 1, 3, 4});
  cases.push_back({"concat_channels",
                   [=](int seed) {
                     Rng rng(seed, "grad-concat");
                     const Tensor t = random_tensor({1, 5, 3, 3}, rng);
                     return op([&](const auto& x) { return probe(concat_channels(x[0], x[1]), t); },
                               {random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 3, 3, 3}, rng)});
                   },
                   kOpTol});
  cases.push_back({"softmax_cross_entropy",
                   [=](int seed) {
                     Rng rng(seed, "grad-ce");
                     std::vector<std::uint8_t> labels = random_labels(12, 3, rng);
                     labels[seed % 12] = kIgnoreLabel;
                     return op([&](const auto& x) { return softmax_cross_entropy(x[0], labels); },
                               {random_tensor({1, 3, 3, 4}, rng, -3, 3)});
                   },
                   kOpTol});
  cases.push_back({"l2_consistency",
                   [=](int seed) {
                     Rng rng(seed, "grad-l2");
                     const Tensor target = random_tensor({1, 3, 3, 4}, rng);
                     return op([&](const auto& x) { return l2_consistency(x[0], target); },
                               {random_tensor({1, 3, 3, 4}, rng)});
                   },
                   kOpTol});
  cases.push_back({"sum_squares",
                   [=](int seed) {
                     Rng rng(seed, "grad-ss");
                     return op([&](const auto& x) { return sum_squares(x); },
                               {random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
                   },
                   kOpTol});
  cases.push_back({"warp_features",
                   [=](int seed) {
                     Rng rng(seed, "warp-grad");
                     const int s = 1 << (seed % 3);
                     const MotionMap mv = wild_motion(4 * s, 5 * s, rng);
                     const Tensor target = random_tensor({1, 2, 4, 5}, rng);
                     return op([&](const auto& in) { return probe(warp_features({in[0], s}, mv).tensor, target); },
                               {random_tensor({1, 2, 4, 5}, rng)});
                   },
                   kOpTol});
  cases.push_back({"cfr",
                   [=](int seed) {
                     Rng rng(seed, "grad-cfr");
                     const BackboneConfig c = tiny_config(WarpLayer::kLayer1);
                     const NetworkParams p = full_nkfc(c, rng);
                     const int ctx = c.context_channels();
                     const Tensor t = random_tensor({1, ctx, 4, 4}, rng);
                     return op(
                         [&](const auto& in) {
                           NetworkParams q = p;
                           q.set("cfr.w", in[2]);
                           q.set("cfr.b", in[3]);
                           return probe(cfr({in[0], 2}, {in[1], 2}, q), t);
                         },
                         {random_tensor({1, ctx, 4, 4}, rng), random_tensor({1, c.decoder_channels, 4, 4}, rng),
                          p.get("cfr.w").detach(), p.get("cfr.b").detach()});
                   },
                   kOpTol});
  cases.push_back({"rga",
                   [=](int seed) {
                     Rng rng(seed, "grad-rga");
                     const BackboneConfig c = tiny_config(WarpLayer::kLayer1);
                     const NetworkParams p = full_nkfc(c, rng);
                     const ResidualMap res = random_residual(8, 8, rng);
                     const Tensor t = random_tensor({1, 3, 4, 4}, rng);
                     return op(
                         [&](const auto& in) {
                           NetworkParams q = p;
                           q.set("rga.w", in[2]);
                           q.set("rga.b", in[3]);
                           const FeatureMap warped{in[0], 2};
                           return probe(rga_apply(warped, in[1], rga_attention(res, warped, q)).tensor, t);
                         },
                         {random_tensor({1, 3, 4, 4}, rng), random_tensor({1, 3, 4, 4}, rng),
                          p.get("rga.w").detach(), p.get("rga.b").detach()});
                   },
                   kOpTol});
  cases.push_back({"keyframe_path",
                   [=](int seed) {
                     Rng rng(seed, "grad-key");
                     const BackboneConfig c = tiny_config(WarpLayer::kLayer1);
                     NetworkParams p = init_keyframe_params(c, rng);
                     randomize(p, rng);
                     const Tensor image = random_tensor({1, 3, 8, 8}, rng, 0, 1);
                     const std::vector<std::uint8_t> labels = random_labels(64, 3, rng);
                     std::vector<std::string> names;
                     std::vector<Tensor> inputs;
                     for (const auto& [n, t] : p.tensors()) {
                       names.push_back(n);
                       inputs.push_back(t);
                     }
                     return net(
                         [&](const auto& in) {
                           NetworkParams q;
                           for (std::size_t i = 0; i < in.size(); ++i) q.set(names[i], in[i]);
                           return softmax_cross_entropy(keyframe_forward(image, q, c).logits, labels);
                         },
                         inputs);
                   },
                   kPathTol});
  // Context, spatial heads, CFR, RGA and fusion together under the NKFC
  // objective; alternates warp layers and drops RGA every fourth case.
  cases.push_back({"nkfc_path",
                   [=](int seed) {
                     Rng rng(seed, "grad-nkfc");
                     const WarpLayer layer = seed % 2 ? WarpLayer::kLayer2 : WarpLayer::kLayer1;
                     const BackboneConfig c = tiny_config(layer);
                     const NkfcFlags flags = seed % 4 == 3 ? NkfcFlags{true, false} : NkfcFlags{true, true};
                     const NetworkParams p = full_nkfc(c, rng);
                     const int s = c.context_stride();
                     const Tensor image = random_tensor({1, 3, 8, 8}, rng, 0, 1);
                     const Tensor target = random_tensor({1, c.context_channels(), 8 / s, 8 / s}, rng);
                     const MotionMap mv = small_motion(8, 8, rng);
                     const ResidualMap res = random_residual(8, 8, rng);
                     const std::vector<std::uint8_t> labels = random_labels(64, 3, rng);
                     std::vector<std::string> names;
                     std::vector<Tensor> inputs{random_tensor(target.shape(), rng)};
                     for (const auto& [n, t] : p.tensors()) {
                       names.push_back(n);
                       inputs.push_back(t);
                     }
                     return net(
                         [&](const auto& in) {
                           NetworkParams q;
                           for (std::size_t i = 1; i < in.size(); ++i) q.set(names[i - 1], in[i]);
                           const NkfcOutput out = nkfc_forward(image, {in[0], s}, mv, res, q, c, flags);
                           return add(softmax_cross_entropy(out.logits, labels),
                                      scale(l2_consistency(out.context.tensor, target), 10.0));
                         },
                         inputs);
                   },
                   kPathTol});
  return cases;
}

// A path case passes when its error is under tolerance and kink skips stay
// below 2% of the checked entries.
inline bool grad_case_ok(const GradReport& r, double tolerance) {
  return r.max_error < tolerance && r.skipped < r.checked / 50 + 1;
}

}  // namespace twnet::testing
