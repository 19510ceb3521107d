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
#include <optional>
#include <vector>

#include "twnet/tensor.hpp"

namespace twnet {

// Planar float image, channel-major (C x H x W). Frame pixels live in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  static Image zeros(int channels, int height, int width);

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  float& at(int c, int y, int x) { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const {
    return data[c * plane_size() + static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const Image&) const = default;
};

// Signed per-pixel colour correction (delta r, delta g, delta b).
struct ResidualMap : Image {
  static ResidualMap zeros(int height, int width);
  bool operator==(const ResidualMap&) const = default;
};

// Per-pixel displacement from the previous frame to the current one, in
// full-resolution pixels. Source of pixel p is p - (dx, dy).
struct MotionMap {
  int height = 0;
  int width = 0;
  std::vector<float> dx;
  std::vector<float> dy;

  static MotionMap zeros(int height, int width);
  static MotionMap uniform(int height, int width, float dx, float dy);

  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  bool operator==(const MotionMap&) const = default;
};

struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  static LabelMap filled(int height, int width, std::uint8_t value);

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

enum class FrameKind : std::uint8_t { kIntra = 0, kPredicted = 1 };

struct Frame {
  FrameKind kind = FrameKind::kIntra;
  Image image;
  std::optional<MotionMap> motion;      // P-frames only
  std::optional<ResidualMap> residual;  // P-frames only
  std::optional<LabelMap> label;

  bool is_intra() const { return kind == FrameKind::kIntra; }
  bool operator==(const Frame&) const = default;
};

// Activation tensor (1 x C x h x w) with the number of full-resolution pixels
// per feature cell.
struct FeatureMap {
  Tensor tensor;
  int stride = 1;

  int channels() const { return tensor.dim(1); }
  int height() const { return tensor.dim(2); }
  int width() const { return tensor.dim(3); }
};

// 1 x C x H x W f64 tensor holding the image values.
Tensor to_tensor(const Image& image);

}  // namespace twnet
