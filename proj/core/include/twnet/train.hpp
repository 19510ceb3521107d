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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twnet/model.hpp"
#include "twnet/sequence.hpp"

namespace twnet {

struct TrainConfig {
  double lr = 1e-3;
  double lambda0 = 1e-7;  // weight decay
  double lambda1 = 10.0;  // consistency weight
  int iterations = 500;
  int batch_size = 1;
  std::uint64_t seed = 0;
  NkfcFlags flags{true, true};
  bool fine_tune_heads = true;

  void validate() const;
};

// One row of the loss curve. `total` is the optimised objective
// cls + lambda0 * reg + lambda1 * consist, evaluated before the update.
struct LossRecord {
  int iteration = 0;
  double cls = 0.0;
  double reg = 0.0;
  double consist = 0.0;
  double total = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<LossRecord> curve;
};

// Step one: the per-frame (key-frame) CNN on every labelled frame, minimising
// L_cls + lambda0 * L_reg.
TrainResult train_keyframe(std::span<const GopSequence> data, const BackboneConfig& config,
                           const TrainConfig& train);

// Step two: the non-key-frame CNN on consecutive frame pairs with the key-frame
// CNN frozen. Context for frame t-1 and the consistency target for frame t both
// come from the frozen key-frame CNN. Returns the "nkfc.", "cfr." and "rga."
// tensors.
TrainResult train_nkfc(std::span<const GopSequence> data, const NetworkParams& key_params,
                       const BackboneConfig& config, const TrainConfig& train);

// "iteration,L_cls,L_reg,L_consist,total" followed by one row per record.
std::string loss_curve_csv(std::span<const LossRecord> curve);

}  // namespace twnet
