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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "twnet/frame.hpp"

namespace twnet {

inline constexpr int kDefaultGopLength = 12;

// Frames in display order. Frame i is an I-frame iff i % gop_length == 0; the
// other frames of a GOP are P-frames carrying motion and residual side data.
struct GopSequence {
  int gop_length = kDefaultGopLength;
  int class_count = 0;
  int height = 0;
  int width = 0;
  std::vector<Frame> frames;

  // Throws DataError(kIncompatible) describing the first violated invariant.
  void validate() const;

  bool operator==(const GopSequence&) const = default;
};

enum class SpriteShape : std::uint8_t { kRectangle, kEllipse };

struct SpriteSpec {
  int class_id = 1;
  SpriteShape shape = SpriteShape::kRectangle;
  bool rigid = true;
  double x = 0.0;  // initial centre
  double y = 0.0;
  double vx = 0.0;  // displacement per frame
  double vy = 0.0;
  double half_w = 8.0;  // half extent (rectangle) or semi-axis (ellipse)
  double half_h = 8.0;
  std::array<float, 3> color{0.8f, 0.2f, 0.2f};
  // Non-rigid sprites: each frame the semi-axes take a random multiplicative
  // step of up to +/- jitter, bounded to [0.6, 1.4] of their initial size.
  double jitter = 0.0;
};

struct SceneSpec {
  int height = 96;
  int width = 128;
  int class_count = 4;
  int background_class = 0;
  int gop_length = kDefaultGopLength;
  std::array<float, 3> background_color{0.15f, 0.15f, 0.2f};
  double background_texture = 0.05;
  double noise = 0.0;  // per-frame uniform noise amplitude
  // 0 for dense motion, otherwise motion is constant over block_size^2 blocks.
  int block_size = 0;
  std::uint64_t seed = 0;
  std::vector<SpriteSpec> sprites;  // later sprites are drawn on top

  void validate() const;
};

// The default synthetic benchmark scene: 96x128 canvas with background, two
// rigid boxes, two rigid balls and two non-rigid blobs, all randomly placed
// from `seed`.
SceneSpec default_scene(std::uint64_t seed);

// Renders num_gops * gop_length frames. Motion of a pixel is the per-frame
// translation of the topmost sprite covering it (zero on background); the
// residual is current - warp(previous, motion), so reconstruction is exact.
GopSequence generate_sequence(const SceneSpec& spec, int num_gops);

// Lossless binary container. Throws DataError with a distinct kind for
// I/O failures, bad headers, unsupported versions, truncation and checksums.
inline constexpr std::uint32_t kContainerVersion = 1;
void save_sequence(const GopSequence& seq, const std::filesystem::path& path);
GopSequence load_sequence(const std::filesystem::path& path);

// I-frames are key frames, P-frames are non-key frames.
struct ScheduledFrame {
  std::size_t index;
  const Frame* frame;
  bool is_key;
};

class Schedule {
 public:
  class iterator {
   public:
    using value_type = ScheduledFrame;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const std::vector<Frame>* frames, std::size_t index) : frames_(frames), index_(index) {}

    ScheduledFrame operator*() const {
      const Frame& f = (*frames_)[index_];
      return {index_, &f, f.is_intra()};
    }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++index_;
      return old;
    }
    bool operator==(const iterator& other) const { return index_ == other.index_; }

   private:
    const std::vector<Frame>* frames_ = nullptr;
    std::size_t index_ = 0;
  };

  explicit Schedule(const GopSequence& seq) : frames_(&seq.frames) {}

  iterator begin() const { return {frames_, 0}; }
  iterator end() const { return {frames_, frames_->size()}; }

 private:
  const std::vector<Frame>* frames_;
};

inline Schedule schedule(const GopSequence& seq) { return Schedule(seq); }

}  // namespace twnet
