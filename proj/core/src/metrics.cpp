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

#include "twnet/metrics.hpp"

#include <numeric>
#include <string>

#include "twnet/errors.hpp"
#include "twnet/ops.hpp"

namespace twnet {

ConfusionMatrix::ConfusionMatrix(int class_count) : k_(class_count) {
  if (class_count < 1) throw ConfigError("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(k_) * k_, 0);
}

void ConfusionMatrix::add(const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ShapeError("confusion matrix: prediction " + std::to_string(pred.height) + "x" +
                     std::to_string(pred.width) + " vs ground truth " + std::to_string(gt.height) + "x" +
                     std::to_string(gt.width));
  }
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const int g = gt.data[i];
    if (g == kIgnoreLabel) continue;
    const int p = pred.data[i];
    if (g >= k_ || p >= k_) {
      throw ShapeError("confusion matrix: label " + std::to_string(g >= k_ ? g : p) + " outside [0," +
                       std::to_string(k_) + ")");
    }
    ++counts_[static_cast<std::size_t>(g) * k_ + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ShapeError("confusion matrix: cannot merge different class counts");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::optional<double> ConfusionMatrix::iou(int cls) const {
  std::int64_t row = 0, col = 0;
  for (int j = 0; j < k_; ++j) {
    row += at(cls, j);
    col += at(j, cls);
  }
  const std::int64_t tp = at(cls, cls);
  const std::int64_t uni = row + col - tp;
  if (uni == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(uni);
}

IouReport summarize(const ConfusionMatrix& cm) {
  IouReport r;
  r.scored_pixels = cm.total();
  if (r.scored_pixels == 0) throw DataError(DataErrorKind::kEmpty, "evaluation scored no pixels");
  double sum = 0.0;
  int present = 0;
  std::int64_t correct = 0;
  for (int k = 0; k < cm.class_count(); ++k) {
    r.per_class_iou.push_back(cm.iou(k));
    if (r.per_class_iou.back()) {
      sum += *r.per_class_iou.back();
      ++present;
    }
    correct += cm.at(k, k);
  }
  r.miou = sum / present;
  r.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(r.scored_pixels);
  return r;
}

IouReport miou(std::span<const LabelMap> preds, std::span<const LabelMap> gts, int class_count) {
  if (preds.empty() || preds.size() != gts.size()) {
    throw DataError(DataErrorKind::kEmpty, "miou: need equally many (non-zero) predictions and ground truths");
  }
  ConfusionMatrix cm(class_count);
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(preds[i], gts[i]);
  return summarize(cm);
}

}  // namespace twnet
