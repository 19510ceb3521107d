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

#include <vector>

#include "twnet/frame.hpp"

namespace twnet {

enum class SampleMode { kNearest, kBilinear };

// Backward warp: out[p] = prev[p - mv[p]], with source coordinates clamped to
// the image rectangle. Works for any channel count.
Image warp_image(const Image& prev, const MotionMap& mv, SampleMode mode);

// Motion at feature resolution: mean over each stride x stride block, divided
// by the stride.
struct PooledMotion {
  int height = 0;
  int width = 0;
  std::vector<double> dx;
  std::vector<double> dy;
};

PooledMotion pool_motion(const MotionMap& mv, int stride);

// Warps a feature map by full-resolution motion using bilinear sampling with
// clamped sources. Differentiable with respect to the features.
FeatureMap warp_features(const FeatureMap& prev, const MotionMap& mv);

// warp_image(prev, mv, nearest) + res.
Image reconstruct_frame(const Image& prev, const MotionMap& mv, const ResidualMap& res);

// current - warp_image(prev, mv, nearest); the inverse of reconstruct_frame.
ResidualMap compute_residual(const Image& current, const Image& prev, const MotionMap& mv);

}  // namespace twnet
