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

#include "twnet/frame.hpp"

namespace twnet {

Image Image::zeros(int channels, int height, int width) {
  Image img;
  img.channels = channels;
  img.height = height;
  img.width = width;
  img.data.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
  return img;
}

ResidualMap ResidualMap::zeros(int height, int width) {
  ResidualMap r;
  static_cast<Image&>(r) = Image::zeros(3, height, width);
  return r;
}

MotionMap MotionMap::zeros(int height, int width) { return uniform(height, width, 0.0f, 0.0f); }

MotionMap MotionMap::uniform(int height, int width, float dx, float dy) {
  MotionMap m;
  m.height = height;
  m.width = width;
  m.dx.assign(static_cast<std::size_t>(height) * width, dx);
  m.dy.assign(static_cast<std::size_t>(height) * width, dy);
  return m;
}

LabelMap LabelMap::filled(int height, int width, std::uint8_t value) {
  LabelMap l;
  l.height = height;
  l.width = width;
  l.data.assign(static_cast<std::size_t>(height) * width, value);
  return l;
}

Tensor to_tensor(const Image& image) {
  std::vector<double> v(image.data.begin(), image.data.end());
  return Tensor::from({1, image.channels, image.height, image.width}, std::move(v));
}

}  // namespace twnet
