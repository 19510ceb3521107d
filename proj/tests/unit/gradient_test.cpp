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

#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace twnet {
namespace {

using testing::GradCase;

class Gradients : public ::testing::TestWithParam<GradCase> {};

TEST_P(Gradients, AgreeWithCentralDifferences) {
  const GradCase& c = GetParam();
  for (int seed = 0; seed < testing::kGradCases; ++seed) {
    const testing::GradReport r = c.run(seed);
    EXPECT_GT(r.checked, 0) << "seed " << seed;
    EXPECT_LT(r.max_error, c.tolerance) << "seed " << seed;
    EXPECT_LT(r.skipped, r.checked / 50 + 1) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(All, Gradients, ::testing::ValuesIn(testing::gradient_cases()),
                         [](const ::testing::TestParamInfo<GradCase>& info) { return info.param.name; });

}  // namespace
}  // namespace twnet
