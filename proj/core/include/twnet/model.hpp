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

#include <array>
#include <map>
#include <string>
#include <vector>

#include "twnet/frame.hpp"
#include "twnet/rng.hpp"
#include "twnet/tensor.hpp"

namespace twnet {

// Interior layer whose features are propagated between frames. Deeper choices
// leave fewer head stages to run on non-key frames.
enum class WarpLayer : int { kLayer1 = 1, kLayer2 = 2, kLayer3 = 3 };

WarpLayer warp_layer_from_int(int layer);

struct BackboneConfig {
  std::array<int, 3> head_channels{16, 32, 64};  // head stages at strides 2, 4, 8
  int decoder_channels = 8;
  int class_count = 4;
  WarpLayer warp_layer = WarpLayer::kLayer1;

  static constexpr int kMaxStride = 8;

  // Head stages the non-key-frame CNN still runs (Layer1: 2, Layer2: 1, Layer3: 0).
  int retained_heads() const;
  int context_stride() const;
  int context_channels() const;
  void validate() const;
};

// Named parameter tensors. Keys are prefixed "key." (key-frame CNN), "nkfc."
// (non-key-frame heads and decoder), "cfr." and "rga.".
class NetworkParams {
 public:
  void set(const std::string& name, Tensor tensor);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::vector<Tensor> with_prefix(const std::string& prefix) const;

  // Deep copy; gradient flags are preserved.
  NetworkParams clone() const;
  // Adds every tensor of `other` (deep-copied); names must not collide.
  void merge(const NetworkParams& other);

 private:
  std::map<std::string, Tensor> tensors_;
};

// Kaiming-uniform (fan-in) conv weights, zero biases.
NetworkParams init_keyframe_params(const BackboneConfig& config, Rng& rng);

// Copies the retained heads and decoder of the key-frame CNN into "nkfc.*" and
// adds the correction modules. phi_r starts at zero so the corrected network
// initially reproduces plain warping; phi_a starts at zero, a uniform 0.5 gate.
NetworkParams init_nkfc_params(const BackboneConfig& config, const NetworkParams& key_params);

// Names the key-frame CNN must provide for `config`.
std::vector<std::string> required_keyframe_params(const BackboneConfig& config);

struct KeyframeOutput {
  Tensor logits;          // 1 x K x H x W
  FeatureMap context;     // at config.warp_layer
};

KeyframeOutput keyframe_forward(const Tensor& image, const NetworkParams& params,
                                const BackboneConfig& config);

// Context features of the key-frame CNN at every warp layer (index 0 = Layer1).
std::array<FeatureMap, 3> keyframe_contexts(const Tensor& image, const NetworkParams& params,
                                            const BackboneConfig& config);

// ResF = phi_r([warped, spatial]), a single 3x3 conv.
Tensor cfr(const FeatureMap& warped, const FeatureMap& spatial, const NetworkParams& params);

// A = sigmoid(phi_a(resize(residual))), phi_a a 1x1 conv to one channel.
Tensor rga_attention(const ResidualMap& residual, const FeatureMap& target, const NetworkParams& params);

// F = warped + attention (.) res_feat, attention broadcast over channels.
FeatureMap rga_apply(const FeatureMap& warped, const Tensor& res_feat, const Tensor& attention);

struct NkfcFlags {
  bool use_cfr = false;
  bool use_rga = false;

  void validate() const;
};

// Wall-clock split of one non-key-frame pass, in seconds.
struct NkfcTimings {
  double heads = 0.0;
  double warp = 0.0;
  double correction = 0.0;
  double fusion = 0.0;
};

struct NkfcOutput {
  Tensor logits;
  FeatureMap context;  // corrected context, propagated to the next frame
  FeatureMap warped;   // plain warped context
};

NkfcOutput nkfc_forward(const Tensor& image, const FeatureMap& prev_context, const MotionMap& mv,
                        const ResidualMap& residual, const NetworkParams& params,
                        const BackboneConfig& config, NkfcFlags flags, NkfcTimings* timings = nullptr);

// Per-pixel argmax of 1 x K x H x W logits.
LabelMap argmax_labels(const Tensor& logits);

}  // namespace twnet
