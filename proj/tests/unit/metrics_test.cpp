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

#include <gtest/gtest.h>

#include "twnet/errors.hpp"
#include "twnet/metrics.hpp"
#include "twnet/ops.hpp"
#include "twnet/rng.hpp"

namespace twnet {
namespace {

LabelMap labels(int h, int w, std::vector<std::uint8_t> v) {
  LabelMap m = LabelMap::filled(h, w, 0);
  m.data = std::move(v);
  return m;
}

TEST(Miou, TwoClassHandCount) {
  const LabelMap gt = labels(2, 2, {0, 0, 1, 1});
  const LabelMap pred = labels(2, 2, {0, 1, 1, 1});
  const IouReport r = miou(std::span(&pred, 1), std::span(&gt, 1), 2);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[1], 2.0 / 3.0);
  EXPECT_NEAR(r.miou, 7.0 / 12.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, 0.75);
  EXPECT_EQ(r.scored_pixels, 4);
}

TEST(Miou, PerfectPredictionAndAbsentClasses) {
  const LabelMap gt = labels(1, 4, {0, 2, 2, 0});
  const IouReport r = miou(std::span(&gt, 1), std::span(&gt, 1), 4);
  EXPECT_EQ(r.miou, 1.0);
  EXPECT_FALSE(r.per_class_iou[1].has_value());
  EXPECT_FALSE(r.per_class_iou[3].has_value());
}

TEST(Miou, IgnoredPixelsAreNotScored) {
  const LabelMap gt = labels(1, 4, {0, kIgnoreLabel, 1, kIgnoreLabel});
  const LabelMap pred = labels(1, 4, {0, 1, 1, 0});
  const IouReport r = miou(std::span(&pred, 1), std::span(&gt, 1), 2);
  EXPECT_EQ(r.scored_pixels, 2);
  EXPECT_EQ(r.miou, 1.0);

  const LabelMap none = labels(1, 2, {kIgnoreLabel, kIgnoreLabel});
  const LabelMap p2 = labels(1, 2, {0, 1});
  try {
    miou(std::span(&p2, 1), std::span(&none, 1), 2);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kEmpty);
  }
  EXPECT_THROW(miou(std::span<const LabelMap>(), std::span<const LabelMap>(), 2), DataError);
}

TEST(ConfusionMatrix, TotalsAndMerging) {
  Rng rng(1, "cm");
  ConfusionMatrix all(3), a(3), b(3);
  std::int64_t scored = 0;
  for (int n = 0; n < 6; ++n) {
    LabelMap gt = LabelMap::filled(5, 7, 0), pred = LabelMap::filled(5, 7, 0);
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
      gt.data[i] = rng.uniform() < 0.1 ? kIgnoreLabel : static_cast<std::uint8_t>(rng.uniform_int(0, 2));
      pred.data[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
      scored += gt.data[i] != kIgnoreLabel;
    }
    all.add(pred, gt);
    (n % 2 ? a : b).add(pred, gt);
  }
  EXPECT_EQ(all.total(), scored);
  a.merge(b);
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p) EXPECT_EQ(a.at(g, p), all.at(g, p));
  EXPECT_EQ(summarize(all).scored_pixels, scored);
}

TEST(ConfusionMatrix, RejectsMismatches) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(cm.add(LabelMap::filled(2, 2, 0), LabelMap::filled(2, 3, 0)), ShapeError);
  EXPECT_THROW(cm.add(LabelMap::filled(2, 2, 2), LabelMap::filled(2, 2, 0)), ShapeError);
  ConfusionMatrix other(3);
  EXPECT_THROW(cm.merge(other), ShapeError);
  EXPECT_THROW(ConfusionMatrix(0), ConfigError);
}

}  // namespace
}  // namespace twnet
