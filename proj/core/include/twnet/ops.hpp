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

#include "twnet/tensor.hpp"

namespace twnet {

inline constexpr int kIgnoreLabel = 255;

// 2-D cross-correlation. input N x C x H x W, weights O x C x K x K, bias O
// (or undefined). Output N x O x H' x W' with H' = (H + 2 pad - K) / stride + 1.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, int stride,
              int padding);

// Bilinear resampling with the align-corners-false convention.
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w);
Tensor upsample2x_bilinear(const Tensor& input);
Tensor upsample2x_nearest(const Tensor& input);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise product. `b` may be N x 1 x H x W against an N x C x H x W `a`,
// in which case it broadcasts over channels.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Concatenates two N x C x H x W tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Mean negative log-softmax of the labelled class over pixels whose label is not
// `ignore_index`. logits N x K x H x W, labels N*H*W in row-major order. Returns
// a zero loss with zero gradient when every pixel is ignored.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels,
                             int ignore_index = kIgnoreLabel);

// mean((a - b)^2); `b` is treated as a constant.
Tensor l2_consistency(const Tensor& a, const Tensor& b);

// Sum of squared entries over all tensors (weight-decay term).
Tensor sum_squares(std::span<const Tensor> tensors);

}  // namespace twnet
