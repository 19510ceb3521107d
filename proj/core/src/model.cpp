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

#include "twnet/model.hpp"

#include <chrono>
#include <cmath>

#include "twnet/errors.hpp"
#include "twnet/ops.hpp"
#include "twnet/warp.hpp"

namespace twnet {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string head_name(const std::string& prefix, int stage, char conv) {
  return prefix + ".head" + std::to_string(stage) + ".conv" + conv;
}

std::string lat_name(const std::string& prefix, int level) { return prefix + ".lat" + std::to_string(level); }

Tensor kaiming_weights(int out_ch, int in_ch, int k, Rng& rng) {
  const double bound = std::sqrt(6.0 / (in_ch * k * k));
  Tensor w = Tensor::zeros({out_ch, in_ch, k, k}, true);
  for (double& v : w.mutable_values()) v = rng.uniform(-bound, bound);
  return w;
}

void add_conv(NetworkParams& p, const std::string& name, int out_ch, int in_ch, int k, Rng& rng) {
  p.set(name + ".w", kaiming_weights(out_ch, in_ch, k, rng));
  p.set(name + ".b", Tensor::zeros({out_ch}, true));
}

Tensor apply_conv(const NetworkParams& p, const std::string& name, const Tensor& x, int stride, int padding) {
  return conv2d(x, p.get(name + ".w"), p.get(name + ".b"), stride, padding);
}

Tensor head_stage(const NetworkParams& p, const std::string& prefix, int stage, const Tensor& x) {
  Tensor y = relu(apply_conv(p, head_name(prefix, stage, 'a'), x, 2, 1));
  return relu(apply_conv(p, head_name(prefix, stage, 'b'), y, 1, 1));
}

Tensor lateral(const NetworkParams& p, const std::string& prefix, int level, const Tensor& x) {
  return apply_conv(p, lat_name(prefix, level), x, 1, 0);
}

Tensor classify(const NetworkParams& p, const std::string& prefix, const Tensor& x) {
  return apply_conv(p, prefix + ".cls", relu(x), 1, 1);
}

void require_input(const Tensor& image, const BackboneConfig& config, const char* what) {
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3) {
    throw ShapeError(std::string(what) + ": expected a 1x3xHxW image, got " + to_string(image.shape()));
  }
  if (image.dim(2) % BackboneConfig::kMaxStride != 0 || image.dim(3) % BackboneConfig::kMaxStride != 0) {
    throw ShapeError(std::string(what) + ": image " + std::to_string(image.dim(2)) + "x" +
                     std::to_string(image.dim(3)) + " not divisible by stride " +
                     std::to_string(BackboneConfig::kMaxStride));
  }
  (void)config;
}

// Decoder levels: lat3 at stride 8 is upsampled into the Layer1 context at
// stride 4; adding lat2 and upsampling gives the Layer2 context at stride 2;
// adding lat1 and classifying gives the Layer3 context (class scores).
struct KeyTrace {
  std::array<FeatureMap, 3> contexts;
  Tensor logits;
};

KeyTrace trace_keyframe(const Tensor& image, const NetworkParams& p, const BackboneConfig& config) {
  require_input(image, config, "keyframe_forward");
  const Tensor e1 = head_stage(p, "key", 1, image);
  const Tensor e2 = head_stage(p, "key", 2, e1);
  const Tensor e3 = head_stage(p, "key", 3, e2);
  KeyTrace t;
  const Tensor c1 = upsample2x_bilinear(lateral(p, "key", 3, e3));
  const Tensor c2 = upsample2x_bilinear(add(c1, lateral(p, "key", 2, e2)));
  const Tensor scores = classify(p, "key", add(c2, lateral(p, "key", 1, e1)));
  t.contexts = {FeatureMap{c1, 4}, FeatureMap{c2, 2}, FeatureMap{scores, 2}};
  t.logits = upsample2x_bilinear(scores);
  return t;
}

}  // namespace

WarpLayer warp_layer_from_int(int layer) {
  if (layer < 1 || layer > 3) {
    throw ConfigError("warp layer must be 1, 2 or 3, got " + std::to_string(layer));
  }
  return static_cast<WarpLayer>(layer);
}

int BackboneConfig::retained_heads() const { return 3 - static_cast<int>(warp_layer); }

int BackboneConfig::context_stride() const { return warp_layer == WarpLayer::kLayer1 ? 4 : 2; }

int BackboneConfig::context_channels() const {
  return warp_layer == WarpLayer::kLayer3 ? class_count : decoder_channels;
}

void BackboneConfig::validate() const {
  for (int c : head_channels) {
    if (c < 1) throw ConfigError("backbone: head channels must be positive");
  }
  if (decoder_channels < 1) throw ConfigError("backbone: decoder_channels must be positive");
  if (class_count < 1 || class_count > 255) throw ConfigError("backbone: class_count must be in [1,255]");
  warp_layer_from_int(static_cast<int>(warp_layer));
}

void NetworkParams::set(const std::string& name, Tensor tensor) { tensors_[name] = std::move(tensor); }

const Tensor& NetworkParams::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("missing parameter tensor '" + name + "'");
  return it->second;
}

std::vector<std::string> NetworkParams::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, t] : tensors_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

std::vector<Tensor> NetworkParams::with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& name : names_with_prefix(prefix)) out.push_back(tensors_.at(name));
  return out;
}

NetworkParams NetworkParams::clone() const {
  NetworkParams out;
  for (const auto& [name, t] : tensors_) out.set(name, t.clone());
  return out;
}

void NetworkParams::merge(const NetworkParams& other) {
  for (const auto& [name, t] : other.tensors_) {
    if (contains(name)) throw ConfigError("duplicate parameter tensor '" + name + "'");
    set(name, t.clone());
  }
}

std::vector<std::string> required_keyframe_params(const BackboneConfig& config) {
  std::vector<std::string> names;
  for (int s = 1; s <= 3; ++s) {
    for (char c : {'a', 'b'}) {
      names.push_back(head_name("key", s, c) + ".w");
      names.push_back(head_name("key", s, c) + ".b");
    }
    names.push_back(lat_name("key", s) + ".w");
    names.push_back(lat_name("key", s) + ".b");
  }
  names.push_back("key.cls.w");
  names.push_back("key.cls.b");
  (void)config;
  return names;
}

NetworkParams init_keyframe_params(const BackboneConfig& config, Rng& rng) {
  config.validate();
  NetworkParams p;
  int in_ch = 3;
  for (int s = 1; s <= 3; ++s) {
    const int ch = config.head_channels[s - 1];
    add_conv(p, head_name("key", s, 'a'), ch, in_ch, 3, rng);
    add_conv(p, head_name("key", s, 'b'), ch, ch, 3, rng);
    add_conv(p, lat_name("key", s), config.decoder_channels, ch, 1, rng);
    in_ch = ch;
  }
  add_conv(p, "key.cls", config.class_count, config.decoder_channels, 3, rng);
  return p;
}

NetworkParams init_nkfc_params(const BackboneConfig& config, const NetworkParams& key_params) {
  config.validate();
  for (const auto& name : required_keyframe_params(config)) {
    if (!key_params.contains(name)) {
      throw ConfigError("key-frame parameters lack required tensor '" + name + "'");
    }
  }
  NetworkParams p;
  auto copy = [&](const std::string& base) {
    for (const char* suffix : {".w", ".b"}) {
      Tensor t = key_params.get("key" + base + suffix).clone();
      t.set_requires_grad(true);
      p.set("nkfc" + base + suffix, std::move(t));
    }
  };
  const int heads = config.retained_heads();
  for (int s = 1; s <= heads; ++s) {
    copy(".head" + std::to_string(s) + ".conva");
    copy(".head" + std::to_string(s) + ".convb");
    copy(".lat" + std::to_string(s));
  }
  if (heads > 0) {
    copy(".cls");
    const int ctx = config.context_channels();
    p.set("cfr.w", Tensor::zeros({ctx, ctx + config.decoder_channels, 3, 3}, true));
    p.set("cfr.b", Tensor::zeros({ctx}, true));
    p.set("rga.w", Tensor::zeros({1, 3, 1, 1}, true));
    p.set("rga.b", Tensor::zeros({1}, true));
  }
  return p;
}

KeyframeOutput keyframe_forward(const Tensor& image, const NetworkParams& params, const BackboneConfig& config) {
  KeyTrace t = trace_keyframe(image, params, config);
  return {t.logits, t.contexts[static_cast<int>(config.warp_layer) - 1]};
}

std::array<FeatureMap, 3> keyframe_contexts(const Tensor& image, const NetworkParams& params,
                                            const BackboneConfig& config) {
  return trace_keyframe(image, params, config).contexts;
}

Tensor cfr(const FeatureMap& warped, const FeatureMap& spatial, const NetworkParams& params) {
  if (warped.stride != spatial.stride) {
    throw ShapeError("cfr: warped features at stride " + std::to_string(warped.stride) +
                     " but spatial features at stride " + std::to_string(spatial.stride));
  }
  return conv2d(concat_channels(warped.tensor, spatial.tensor), params.get("cfr.w"), params.get("cfr.b"), 1, 1);
}

Tensor rga_attention(const ResidualMap& residual, const FeatureMap& target, const NetworkParams& params) {
  if (residual.height != target.height() * target.stride || residual.width != target.width() * target.stride) {
    throw ShapeError("rga_attention: residual " + std::to_string(residual.height) + "x" +
                     std::to_string(residual.width) + " does not match features " +
                     to_string(target.tensor.shape()) + " at stride " + std::to_string(target.stride));
  }
  const Tensor resized = bilinear_resize(to_tensor(residual), target.height(), target.width());
  return sigmoid(conv2d(resized, params.get("rga.w"), params.get("rga.b"), 1, 0));
}

FeatureMap rga_apply(const FeatureMap& warped, const Tensor& res_feat, const Tensor& attention) {
  if (res_feat.shape() != warped.tensor.shape()) {
    throw ShapeError("rga_apply: residual features " + to_string(res_feat.shape()) +
                     " do not match warped features " + to_string(warped.tensor.shape()));
  }
  return {add(warped.tensor, mul(res_feat, attention)), warped.stride};
}

void NkfcFlags::validate() const {
  if (use_rga && !use_cfr) throw ConfigError("RGA gates the CFR residual; use_rga requires use_cfr");
}

NkfcOutput nkfc_forward(const Tensor& image, const FeatureMap& prev_context, const MotionMap& mv,
                        const ResidualMap& residual, const NetworkParams& params,
                        const BackboneConfig& config, NkfcFlags flags, NkfcTimings* timings) {
  flags.validate();
  require_input(image, config, "nkfc_forward");
  if (prev_context.stride != config.context_stride() ||
      prev_context.channels() != config.context_channels()) {
    throw ShapeError("nkfc_forward: context " + to_string(prev_context.tensor.shape()) + " at stride " +
                     std::to_string(prev_context.stride) + " does not match warp layer " +
                     std::to_string(static_cast<int>(config.warp_layer)));
  }
  const int heads = config.retained_heads();
  if (heads == 0 && flags.use_cfr) {
    throw ConfigError("nkfc_forward: Layer3 keeps no spatial features, so CFR is unavailable");
  }
  NkfcTimings local;
  NkfcTimings& tm = timings ? *timings : local;

  auto t0 = Clock::now();
  Tensor e1, e2;
  FeatureMap spatial;
  if (heads >= 1) e1 = head_stage(params, "nkfc", 1, image);
  if (heads == 2) {
    e2 = head_stage(params, "nkfc", 2, e1);
    spatial = {lateral(params, "nkfc", 2, e2), 4};
  } else if (heads == 1) {
    spatial = {lateral(params, "nkfc", 1, e1), 2};
  }
  tm.heads += seconds_since(t0);

  t0 = Clock::now();
  NkfcOutput out;
  out.warped = warp_features(prev_context, mv);
  tm.warp += seconds_since(t0);

  t0 = Clock::now();
  out.context = out.warped;
  if (flags.use_cfr) {
    const Tensor res_feat = cfr(out.warped, spatial, params);
    if (flags.use_rga) {
      out.context = rga_apply(out.warped, res_feat, rga_attention(residual, out.warped, params));
    } else {
      out.context = {add(out.warped.tensor, res_feat), out.warped.stride};
    }
  }
  tm.correction += seconds_since(t0);

  t0 = Clock::now();
  Tensor scores;
  if (heads == 2) {
    const Tensor c2 = upsample2x_bilinear(add(out.context.tensor, spatial.tensor));
    scores = classify(params, "nkfc", add(c2, lateral(params, "nkfc", 1, e1)));
  } else if (heads == 1) {
    scores = classify(params, "nkfc", add(out.context.tensor, spatial.tensor));
  } else {
    scores = out.context.tensor;
  }
  out.logits = upsample2x_bilinear(scores);
  tm.fusion += seconds_since(t0);
  return out;
}

LabelMap argmax_labels(const Tensor& logits) {
  if (logits.rank() != 4 || logits.dim(0) != 1) {
    throw ShapeError("argmax_labels: expected 1xKxHxW logits, got " + to_string(logits.shape()));
  }
  const int k = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  LabelMap out = LabelMap::filled(h, w, 0);
  auto v = logits.values();
  for (std::size_t p = 0; p < plane; ++p) {
    int best = 0;
    for (int c = 1; c < k; ++c) {
      if (v[c * plane + p] > v[best * plane + p]) best = c;
    }
    out.data[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace twnet
