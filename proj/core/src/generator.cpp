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

#include <algorithm>
#include <cmath>
#include <string>

#include "twnet/errors.hpp"
#include "twnet/ops.hpp"
#include "twnet/rng.hpp"
#include "twnet/sequence.hpp"
#include "twnet/warp.hpp"

namespace twnet {
namespace {

// Pixel values are multiples of 1/256 in [0, 255/256]; sums and differences of
// such values are exact in float, which keeps codec reconstruction bit-exact.
float quantize(double v) {
  const double q = std::clamp(std::round(v * 256.0), 0.0, 255.0);
  return static_cast<float>(q / 256.0);
}

struct SpriteState {
  double x, y, vx, vy, half_w, half_h;
};

bool covers(const SpriteSpec& spec, const SpriteState& s, int px, int py) {
  const double dx = px - s.x;
  const double dy = py - s.y;
  if (spec.shape == SpriteShape::kRectangle) {
    return std::abs(dx) <= s.half_w && std::abs(dy) <= s.half_h;
  }
  const double u = dx / s.half_w;
  const double v = dy / s.half_h;
  return u * u + v * v <= 1.0;
}

// Sprite-local stripe texture; anchored to the centre so it translates exactly.
double texture(int sprite_index, double lx, double ly) {
  const int period = 3 + sprite_index % 3;
  const long band = static_cast<long>(std::floor((lx + ly) / period));
  return (band & 1) ? 1.0 : 0.8;
}

// Advances a sprite one frame, reflecting its velocity at the canvas border.
void step(SpriteState& s, const SpriteSpec& spec, const SceneSpec& scene, Rng& rng) {
  if (!spec.rigid && spec.jitter > 0.0) {
    const double lo = 0.6, hi = 1.4;
    s.half_w = std::clamp(s.half_w * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0)),
                          lo * spec.half_w, hi * spec.half_w);
    s.half_h = std::clamp(s.half_h * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0)),
                          lo * spec.half_h, hi * spec.half_h);
  }
  auto advance = [](double& pos, double& vel, double size) {
    const double next = pos + vel;
    if (next < 0.0 || next > size - 1.0) vel = -vel;
    pos += vel;
  };
  advance(s.x, s.vx, scene.width);
  advance(s.y, s.vy, scene.height);
}

struct Rendered {
  Image image;
  LabelMap label;
  std::vector<int> owner;  // topmost sprite index per pixel, -1 for background
};

Rendered render(const SceneSpec& scene, const std::vector<SpriteState>& states, Rng& noise_rng) {
  Rendered r;
  r.image = Image::zeros(3, scene.height, scene.width);
  r.label = LabelMap::filled(scene.height, scene.width, static_cast<std::uint8_t>(scene.background_class));
  r.owner.assign(static_cast<std::size_t>(scene.height) * scene.width, -1);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      int top = -1;
      for (int i = static_cast<int>(scene.sprites.size()) - 1; i >= 0; --i) {
        if (covers(scene.sprites[i], states[i], x, y)) {
          top = i;
          break;
        }
      }
      r.owner[static_cast<std::size_t>(y) * scene.width + x] = top;
      double rgb[3];
      if (top < 0) {
        const double t = scene.background_texture * std::sin(0.37 * x) * std::cos(0.23 * y);
        for (int c = 0; c < 3; ++c) rgb[c] = scene.background_color[c] + t;
      } else {
        const auto& sp = scene.sprites[top];
        const double shade = texture(top, x - states[top].x, y - states[top].y);
        for (int c = 0; c < 3; ++c) rgb[c] = sp.color[c] * shade;
        r.label.at(y, x) = static_cast<std::uint8_t>(sp.class_id);
      }
      for (int c = 0; c < 3; ++c) {
        double v = rgb[c];
        if (scene.noise > 0.0) v += scene.noise * noise_rng.uniform(-1.0, 1.0);
        r.image.at(c, y, x) = quantize(v);
      }
    }
  }
  return r;
}

MotionMap motion_field(const SceneSpec& scene, const std::vector<int>& owner,
                       const std::vector<SpriteState>& prev, const std::vector<SpriteState>& cur) {
  MotionMap mv = MotionMap::zeros(scene.height, scene.width);
  for (std::size_t i = 0; i < owner.size(); ++i) {
    const int s = owner[i];
    if (s < 0) continue;
    mv.dx[i] = static_cast<float>(cur[s].x - prev[s].x);
    mv.dy[i] = static_cast<float>(cur[s].y - prev[s].y);
  }
  if (scene.block_size > 0) {
    const int b = scene.block_size;
    for (int by = 0; by < scene.height; by += b) {
      for (int bx = 0; bx < scene.width; bx += b) {
        const int cy = std::min(by + b / 2, scene.height - 1);
        const int cx = std::min(bx + b / 2, scene.width - 1);
        const float dx = mv.dx[mv.index(cy, cx)];
        const float dy = mv.dy[mv.index(cy, cx)];
        for (int y = by; y < std::min(by + b, scene.height); ++y) {
          for (int x = bx; x < std::min(bx + b, scene.width); ++x) {
            mv.dx[mv.index(y, x)] = dx;
            mv.dy[mv.index(y, x)] = dy;
          }
        }
      }
    }
  }
  return mv;
}

}  // namespace

void SceneSpec::validate() const {
  if (height < 1 || width < 1) throw ConfigError("scene: canvas must be at least 1x1");
  if (class_count < 1 || class_count > 255) throw ConfigError("scene: class_count must be in [1,255]");
  if (background_class < 0 || background_class >= class_count) {
    throw ConfigError("scene: background_class " + std::to_string(background_class) +
                      " >= class_count " + std::to_string(class_count));
  }
  if (gop_length < 1) throw ConfigError("scene: gop_length must be >= 1");
  if (noise < 0.0) throw ConfigError("scene: noise must be >= 0");
  if (block_size < 0) throw ConfigError("scene: block_size must be >= 0");
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    const auto& s = sprites[i];
    if (s.class_id < 0 || s.class_id >= class_count) {
      throw ConfigError("scene: sprite " + std::to_string(i) + " has class " +
                        std::to_string(s.class_id) + " >= class_count " + std::to_string(class_count));
    }
    if (s.half_w <= 0.0 || s.half_h <= 0.0) {
      throw ConfigError("scene: sprite " + std::to_string(i) + " has non-positive size");
    }
    if (s.jitter < 0.0 || s.jitter >= 1.0) {
      throw ConfigError("scene: sprite " + std::to_string(i) + " jitter must be in [0,1)");
    }
  }
}

SceneSpec default_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.noise = 0.01;
  Rng rng(seed, "scene");
  struct Kind {
    int class_id;
    SpriteShape shape;
    bool rigid;
    int min_half, max_half;
    std::array<double, 3> color;  // centre of the class colour family
  };
  // Colour families overlap, so colour alone does not identify the class.
  const Kind kinds[] = {{1, SpriteShape::kRectangle, true, 6, 12, {0.75, 0.5, 0.4}},
                        {2, SpriteShape::kEllipse, true, 5, 7, {0.5, 0.7, 0.45}},
                        {3, SpriteShape::kEllipse, false, 11, 15, {0.5, 0.5, 0.75}}};
  for (int copy = 0; copy < 2; ++copy) {
    for (const Kind& k : kinds) {
      SpriteSpec s;
      s.class_id = k.class_id;
      s.shape = k.shape;
      s.rigid = k.rigid;
      s.half_w = rng.uniform_int(k.min_half, k.max_half);
      s.half_h = rng.uniform_int(k.min_half, k.max_half);
      s.x = rng.uniform_int(16, spec.width - 17);
      s.y = rng.uniform_int(16, spec.height - 17);
      do {
        s.vx = rng.uniform_int(-3, 3);
        s.vy = rng.uniform_int(-2, 2);
      } while (s.vx == 0 && s.vy == 0);
      for (int c = 0; c < 3; ++c) s.color[c] = static_cast<float>(k.color[c] + rng.uniform(-0.2, 0.2));
      s.jitter = k.rigid ? 0.0 : 0.12;
      spec.sprites.push_back(s);
    }
  }
  return spec;
}

GopSequence generate_sequence(const SceneSpec& spec, int num_gops) {
  spec.validate();
  if (num_gops < 1) throw ConfigError("generate_sequence: num_gops must be >= 1");
  Rng noise_rng(spec.seed, "data.noise");
  Rng shape_rng(spec.seed, "data.shape");

  GopSequence seq;
  seq.gop_length = spec.gop_length;
  seq.class_count = spec.class_count;
  seq.height = spec.height;
  seq.width = spec.width;

  std::vector<SpriteState> states;
  for (const auto& s : spec.sprites) states.push_back({s.x, s.y, s.vx, s.vy, s.half_w, s.half_h});

  const int total = num_gops * spec.gop_length;
  Image prev_image;
  std::vector<SpriteState> prev_states;
  for (int t = 0; t < total; ++t) {
    if (t > 0) {
      prev_states = states;
      for (std::size_t i = 0; i < states.size(); ++i) step(states[i], spec.sprites[i], spec, shape_rng);
    }
    Rendered r = render(spec, states, noise_rng);
    Frame f;
    f.kind = (t % spec.gop_length == 0) ? FrameKind::kIntra : FrameKind::kPredicted;
    if (f.kind == FrameKind::kPredicted) {
      MotionMap mv = motion_field(spec, r.owner, prev_states, states);
      f.residual = compute_residual(r.image, prev_image, mv);
      f.motion = std::move(mv);
    }
    f.label = std::move(r.label);
    prev_image = r.image;
    f.image = std::move(r.image);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void GopSequence::validate() const {
  auto fail = [](const std::string& what) { throw DataError(DataErrorKind::kIncompatible, what); };
  if (gop_length < 1) fail("sequence: gop_length must be >= 1");
  if (class_count < 1 || class_count > 255) fail("sequence: class_count must be in [1,255]");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    const std::string at = "sequence frame " + std::to_string(i) + ": ";
    const bool intra = i % static_cast<std::size_t>(gop_length) == 0;
    if (intra != f.is_intra()) fail(at + "frame kind does not follow the GOP structure");
    if (f.image.channels != 3 || f.image.height != height || f.image.width != width) {
      fail(at + "image dims do not match the sequence");
    }
    if (f.is_intra() && (f.motion || f.residual)) fail(at + "I-frame carries motion or residual");
    if (!f.is_intra()) {
      if (!f.motion || !f.residual) fail(at + "P-frame lacks motion or residual");
      if (f.motion->height != height || f.motion->width != width) fail(at + "motion dims mismatch");
      if (f.residual->channels != 3 || f.residual->height != height || f.residual->width != width) {
        fail(at + "residual dims mismatch");
      }
    }
    if (f.label) {
      if (f.label->height != height || f.label->width != width) fail(at + "label dims mismatch");
      for (std::uint8_t v : f.label->data) {
        if (v != kIgnoreLabel && v >= class_count) fail(at + "label " + std::to_string(v) + " out of range");
      }
    }
  }
}

}  // namespace twnet
