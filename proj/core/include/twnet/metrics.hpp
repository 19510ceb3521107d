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
#include <span>
#include <vector>

#include "twnet/frame.hpp"

namespace twnet {

// K x K pixel counts; rows are ground truth, columns predictions. Pixels whose
// ground truth is the ignore label are not counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  void add(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);

  int class_count() const { return k_; }
  std::int64_t at(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * k_ + pred]; }
  std::int64_t total() const;

  // TP / (TP + FP + FN); empty when the class has zero union.
  std::optional<double> iou(int cls) const;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

struct IouReport {
  std::vector<std::optional<double>> per_class_iou;
  double miou = 0.0;  // mean over classes with nonzero union
  double pixel_accuracy = 0.0;
  std::int64_t scored_pixels = 0;
};

// Throws DataError(kEmpty) when nothing was scored.
IouReport summarize(const ConfusionMatrix& cm);

IouReport miou(std::span<const LabelMap> preds, std::span<const LabelMap> gts, int class_count);

}  // namespace twnet
