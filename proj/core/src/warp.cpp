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

#include "twnet/warp.hpp"

#include <algorithm>
#include <cmath>

#include "twnet/errors.hpp"

namespace twnet {
namespace {

void require_dims(const Image& img, const MotionMap& mv, const char* what) {
  if (img.height != mv.height || img.width != mv.width) {
    throw ShapeError(std::string(what) + ": image is " + std::to_string(img.height) + "x" +
                     std::to_string(img.width) + " but motion is " + std::to_string(mv.height) +
                     "x" + std::to_string(mv.width));
  }
}

// Bilinear tap: two indices and the weight of the upper one along one axis.
struct Tap {
  int lo, hi;
  double frac;
};

Tap clamp_tap(double src, int size) {
  src = std::clamp(src, 0.0, static_cast<double>(size - 1));
  const int lo = static_cast<int>(std::floor(src));
  return {lo, std::min(lo + 1, size - 1), src - lo};
}

int nearest_index(double src, int size) {
  const int i = static_cast<int>(std::floor(src + 0.5));
  return std::clamp(i, 0, size - 1);
}

}  // namespace

Image warp_image(const Image& prev, const MotionMap& mv, SampleMode mode) {
  require_dims(prev, mv, "warp_image");
  Image out = Image::zeros(prev.channels, prev.height, prev.width);
  for (int y = 0; y < prev.height; ++y) {
    for (int x = 0; x < prev.width; ++x) {
      const std::size_t m = mv.index(y, x);
      const double sx = x - static_cast<double>(mv.dx[m]);
      const double sy = y - static_cast<double>(mv.dy[m]);
      if (mode == SampleMode::kNearest) {
        const int ix = nearest_index(sx, prev.width);
        const int iy = nearest_index(sy, prev.height);
        for (int c = 0; c < prev.channels; ++c) out.at(c, y, x) = prev.at(c, iy, ix);
      } else {
        const Tap tx = clamp_tap(sx, prev.width);
        const Tap ty = clamp_tap(sy, prev.height);
        for (int c = 0; c < prev.channels; ++c) {
          const double top = (1.0 - tx.frac) * prev.at(c, ty.lo, tx.lo) + tx.frac * prev.at(c, ty.lo, tx.hi);
          const double bot = (1.0 - tx.frac) * prev.at(c, ty.hi, tx.lo) + tx.frac * prev.at(c, ty.hi, tx.hi);
          out.at(c, y, x) = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bot);
        }
      }
    }
  }
  return out;
}

PooledMotion pool_motion(const MotionMap& mv, int stride) {
  if (stride < 1) throw ShapeError("pool_motion: stride must be >= 1");
  if (mv.height % stride != 0 || mv.width % stride != 0) {
    throw ShapeError("pool_motion: stride " + std::to_string(stride) + " does not divide " +
                     std::to_string(mv.height) + "x" + std::to_string(mv.width));
  }
  PooledMotion p;
  p.height = mv.height / stride;
  p.width = mv.width / stride;
  p.dx.assign(static_cast<std::size_t>(p.height) * p.width, 0.0);
  p.dy.assign(p.dx.size(), 0.0);
  const double norm = 1.0 / (static_cast<double>(stride) * stride * stride);
  for (int y = 0; y < mv.height; ++y) {
    for (int x = 0; x < mv.width; ++x) {
      const std::size_t cell = static_cast<std::size_t>(y / stride) * p.width + x / stride;
      p.dx[cell] += mv.dx[mv.index(y, x)];
      p.dy[cell] += mv.dy[mv.index(y, x)];
    }
  }
  for (std::size_t i = 0; i < p.dx.size(); ++i) {
    p.dx[i] *= norm;
    p.dy[i] *= norm;
  }
  return p;
}

FeatureMap warp_features(const FeatureMap& prev, const MotionMap& mv) {
  const Tensor& in = prev.tensor;
  if (in.rank() != 4 || in.dim(0) != 1) {
    throw ShapeError("warp_features: expected 1xCxhxw features, got " + to_string(in.shape()));
  }
  const int s = prev.stride;
  if (s < 1 || mv.height % s != 0 || mv.width % s != 0) {
    throw ShapeError("warp_features: stride " + std::to_string(s) + " does not divide image " +
                     std::to_string(mv.height) + "x" + std::to_string(mv.width));
  }
  const int h = in.dim(2), w = in.dim(3), c = in.dim(1);
  if (h * s != mv.height || w * s != mv.width) {
    throw ShapeError("warp_features: features " + to_string(in.shape()) + " at stride " +
                     std::to_string(s) + " do not cover motion " + std::to_string(mv.height) +
                     "x" + std::to_string(mv.width));
  }
  const PooledMotion pm = pool_motion(mv, s);
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  // Sampling taps are shared by every channel.
  struct CellTaps {
    Tap x, y;
  };
  std::vector<CellTaps> taps(plane);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      taps[i] = {clamp_tap(x - pm.dx[i], w), clamp_tap(y - pm.dy[i], h)};
    }
  }

  std::vector<double> out(in.numel());
  auto v = in.values();
  for (int ch = 0; ch < c; ++ch) {
    const double* src = v.data() + ch * plane;
    double* dst = out.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const auto& [tx, ty] = taps[i];
      const double top = (1.0 - tx.frac) * src[ty.lo * w + tx.lo] + tx.frac * src[ty.lo * w + tx.hi];
      const double bot = (1.0 - tx.frac) * src[ty.hi * w + tx.lo] + tx.frac * src[ty.hi * w + tx.hi];
      dst[i] = (1.0 - ty.frac) * top + ty.frac * bot;
    }
  }

  Tensor result = Tensor::make_result(
      in.shape(), std::move(out), {in}, [taps = std::move(taps), c, w, plane](detail::Node& self) {
        auto& d = self.parents[0]->grad_buffer();
        for (int ch = 0; ch < c; ++ch) {
          const double* g = self.grad.data() + ch * plane;
          double* dst = d.data() + ch * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const auto& [tx, ty] = taps[i];
            dst[ty.lo * w + tx.lo] += (1.0 - ty.frac) * (1.0 - tx.frac) * g[i];
            dst[ty.lo * w + tx.hi] += (1.0 - ty.frac) * tx.frac * g[i];
            dst[ty.hi * w + tx.lo] += ty.frac * (1.0 - tx.frac) * g[i];
            dst[ty.hi * w + tx.hi] += ty.frac * tx.frac * g[i];
          }
        }
      });
  return {std::move(result), s};
}

Image reconstruct_frame(const Image& prev, const MotionMap& mv, const ResidualMap& res) {
  require_dims(prev, mv, "reconstruct_frame");
  if (res.height != prev.height || res.width != prev.width || res.channels != prev.channels) {
    throw ShapeError("reconstruct_frame: residual dims do not match the image");
  }
  Image out = warp_image(prev, mv, SampleMode::kNearest);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += res.data[i];
  return out;
}

ResidualMap compute_residual(const Image& current, const Image& prev, const MotionMap& mv) {
  require_dims(prev, mv, "compute_residual");
  if (current.height != prev.height || current.width != prev.width ||
      current.channels != prev.channels) {
    throw ShapeError("compute_residual: frame dims do not match");
  }
  const Image warped = warp_image(prev, mv, SampleMode::kNearest);
  ResidualMap res;
  static_cast<Image&>(res) = Image::zeros(current.channels, current.height, current.width);
  for (std::size_t i = 0; i < res.data.size(); ++i) res.data[i] = current.data[i] - warped.data[i];
  return res;
}

}  // namespace twnet
