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

#include "twnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace twnet {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)) {
  state_.options = options;
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(p.numel(), 0.0);
    state_.second_moment.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw std::logic_error("adam: parameter " + std::to_string(i) + " of shape " +
                             to_string(params_[i].shape()) + " has no gradient");
    }
  }
  const AdamOptions& o = state_.options;
  ++state_.step_count;
  const double t = static_cast<double>(state_.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i].grad();
    auto v = params_[i].mutable_values();
    auto& m1 = state_.first_moment[i];
    auto& m2 = state_.second_moment[i];
    for (std::size_t j = 0; j < v.size(); ++j) {
      m1[j] = o.beta1 * m1[j] + (1.0 - o.beta1) * g[j];
      m2[j] = o.beta2 * m2[j] + (1.0 - o.beta2) * g[j] * g[j];
      v[j] -= o.lr * (m1[j] / c1) / (std::sqrt(m2[j] / c2) + o.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace twnet
