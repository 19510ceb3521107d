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

#include "twnet/train.hpp"

#include <algorithm>
#include <cstdio>

#include "twnet/adam.hpp"
#include "twnet/errors.hpp"
#include "twnet/ops.hpp"
#include "twnet/rng.hpp"
#include "twnet/warp.hpp"

namespace twnet {
namespace {

struct FrameRef {
  std::size_t seq;
  std::size_t frame;
};

std::vector<Tensor> weights_only(const NetworkParams& p, const std::vector<std::string>& names) {
  std::vector<Tensor> out;
  for (const auto& n : names) {
    if (n.size() > 2 && n.compare(n.size() - 2, 2, ".w") == 0) out.push_back(p.get(n));
  }
  return out;
}

Tensor weighted_total(const Tensor& cls, const Tensor& reg, const Tensor& consist, const TrainConfig& t) {
  Tensor total = add(cls, scale(reg, t.lambda0));
  if (consist.defined()) total = add(total, scale(consist, t.lambda1));
  return total;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (lambda0 < 0.0) throw ConfigError("train: lambda0 must be >= 0");
  if (lambda1 < 0.0) throw ConfigError("train: lambda1 must be >= 0");
  if (iterations <= 0) throw ConfigError("train: iterations must be > 0");
  if (batch_size <= 0) throw ConfigError("train: batch_size must be > 0");
  flags.validate();
}

TrainResult train_keyframe(std::span<const GopSequence> data, const BackboneConfig& config,
                           const TrainConfig& train) {
  train.validate();
  config.validate();
  std::vector<FrameRef> samples;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t f = 0; f < data[s].frames.size(); ++f) {
      if (data[s].frames[f].label) samples.push_back({s, f});
    }
  }
  if (samples.empty()) throw ConfigError("train_keyframe: no labelled frames in the training data");

  Rng init_rng(train.seed, "init");
  Rng shuffle_rng(train.seed, "shuffle");
  TrainResult result;
  result.params = init_keyframe_params(config, init_rng);
  std::vector<std::string> names = result.params.names_with_prefix("key.");
  std::vector<Tensor> trainable;
  for (const auto& n : names) trainable.push_back(result.params.get(n));
  const std::vector<Tensor> decay = weights_only(result.params, names);
  Adam adam(trainable, {train.lr});

  for (int it = 0; it < train.iterations; ++it) {
    Tensor cls_sum;
    for (int b = 0; b < train.batch_size; ++b) {
      const FrameRef ref = samples[shuffle_rng.uniform_int(0, static_cast<int>(samples.size()) - 1)];
      const Frame& frame = data[ref.seq].frames[ref.frame];
      const KeyframeOutput out = keyframe_forward(to_tensor(frame.image), result.params, config);
      const Tensor cls = softmax_cross_entropy(out.logits, frame.label->data);
      cls_sum = cls_sum.defined() ? add(cls_sum, cls) : cls;
    }
    const Tensor cls = scale(cls_sum, 1.0 / train.batch_size);
    const Tensor reg = sum_squares(decay);
    const Tensor total = weighted_total(cls, reg, Tensor(), train);
    result.curve.push_back({it, cls.item(), reg.item(), 0.0, total.item()});
    adam.zero_grad();
    total.backward();
    adam.step();
  }
  for (auto& t : trainable) t.zero_grad();
  return result;
}

TrainResult train_nkfc(std::span<const GopSequence> data, const NetworkParams& key_params,
                       const BackboneConfig& config, const TrainConfig& train) {
  train.validate();
  config.validate();
  if (config.retained_heads() == 0) {
    throw ConfigError("train_nkfc: Layer3 warping has no trainable non-key-frame modules");
  }
  for (const auto& name : required_keyframe_params(config)) {
    if (!key_params.contains(name)) {
      throw ConfigError("train_nkfc: key-frame parameters lack required tensor '" + name + "'");
    }
  }

  std::vector<FrameRef> pairs;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t f = 1; f < data[s].frames.size(); ++f) {
      const Frame& fr = data[s].frames[f];
      if (!fr.is_intra() && fr.label) pairs.push_back({s, f});
    }
  }
  if (pairs.empty()) throw ConfigError("train_nkfc: no labelled P-frames in the training data");

  // The key-frame CNN is frozen, so its context features are fixed per frame.
  const int layer_index = static_cast<int>(config.warp_layer) - 1;
  std::vector<std::vector<FeatureMap>> key_context(data.size());
  {
    NoGradGuard no_grad;
    for (std::size_t s = 0; s < data.size(); ++s) {
      for (const Frame& f : data[s].frames) {
        key_context[s].push_back(keyframe_contexts(to_tensor(f.image), key_params, config)[layer_index]);
      }
    }
  }

  Rng shuffle_rng(train.seed, "shuffle");
  TrainResult result;
  result.params = init_nkfc_params(config, key_params);

  std::vector<std::string> names;
  for (const auto& n : result.params.names_with_prefix("nkfc.")) {
    const bool is_head = n.starts_with("nkfc.head");
    if (!is_head || train.fine_tune_heads) names.push_back(n);
  }
  if (train.flags.use_cfr) {
    for (const auto& n : result.params.names_with_prefix("cfr.")) names.push_back(n);
  }
  if (train.flags.use_rga) {
    for (const auto& n : result.params.names_with_prefix("rga.")) names.push_back(n);
  }
  std::vector<Tensor> trainable;
  for (auto& [name, t] : result.params.tensors()) {
    const bool train_it = std::find(names.begin(), names.end(), name) != names.end();
    Tensor handle = t;
    handle.set_requires_grad(train_it);
    if (train_it) trainable.push_back(handle);
  }
  const std::vector<Tensor> decay = weights_only(result.params, names);
  Adam adam(trainable, {train.lr});

  for (int it = 0; it < train.iterations; ++it) {
    Tensor cls_sum, consist_sum;
    for (int b = 0; b < train.batch_size; ++b) {
      const FrameRef ref = pairs[shuffle_rng.uniform_int(0, static_cast<int>(pairs.size()) - 1)];
      const Frame& frame = data[ref.seq].frames[ref.frame];
      const NkfcOutput out = nkfc_forward(to_tensor(frame.image), key_context[ref.seq][ref.frame - 1],
                                          *frame.motion, *frame.residual, result.params, config, train.flags);
      const Tensor cls = softmax_cross_entropy(out.logits, frame.label->data);
      const Tensor consist = l2_consistency(out.context.tensor, key_context[ref.seq][ref.frame].tensor);
      cls_sum = cls_sum.defined() ? add(cls_sum, cls) : cls;
      consist_sum = consist_sum.defined() ? add(consist_sum, consist) : consist;
    }
    const Tensor cls = scale(cls_sum, 1.0 / train.batch_size);
    const Tensor consist = scale(consist_sum, 1.0 / train.batch_size);
    const Tensor reg = sum_squares(decay);
    const Tensor total = weighted_total(cls, reg, consist, train);
    result.curve.push_back({it, cls.item(), reg.item(), consist.item(), total.item()});
    adam.zero_grad();
    total.backward();
    adam.step();
  }
  for (auto& t : trainable) t.zero_grad();
  for (auto& [name, t] : result.params.tensors()) {
    Tensor handle = t;
    handle.set_requires_grad(true);
  }
  return result;
}

std::string loss_curve_csv(std::span<const LossRecord> curve) {
  std::string out = "iteration,L_cls,L_reg,L_consist,total\n";
  char line[160];
  for (const auto& r : curve) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.cls, r.reg, r.consist,
                  r.total);
    out += line;
  }
  return out;
}

}  // namespace twnet
