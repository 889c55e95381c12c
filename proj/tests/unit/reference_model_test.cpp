// Copyright 2026 The fms Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The oracle itself is checked against numbers worked out by hand, so the
// comparisons elsewhere are not circular.

#include "reference_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace fms::testing {
namespace {

TEST(ReferenceModelTest, ThreeStepsByHand) {
  const std::vector<RefStep> steps{{1, 0.8, 1.0}, {1, 0.8, 1.0}, {0, 0.8, 1.0}};
  const auto rows = ref_rollout(steps, {0.5, 0.1, 1.0, 1e-6, 0.0});
  ASSERT_EQ(rows.size(), 3u);
  // step 1: CF = -1, P = sigma(-1), bel = log(1 + 1 - P)
  EXPECT_NEAR(rows[0].p, 1.0 / (1.0 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(rows[0].bel, std::log(2.0 - rows[0].p), 1e-15);
  EXPECT_NEAR(rows[1].cf, 0.5 * rows[0].bel * 0.8 - 1.0, 1e-15);
  EXPECT_EQ(rows[2].r_prev, 0);
  EXPECT_EQ(rows[2].r, 1);
}

TEST(ReferenceModelTest, SigmoidOfOne) {
  const auto rows = ref_rollout({{1, 1.0, 1.0}}, {2.0, 0.0, 0.0, 1e-6, 1.0});
  EXPECT_NEAR(rows[0].p, 0.731059, 1e-6);
}

TEST(ReferenceModelTest, NllAtEvenOdds) {
  EXPECT_NEAR(ref_nll({{1, 1.0, 1.0}}, {1.0, 0.0, 0.0, 1e-6, 1.0}), 0.693147, 1e-6);
}

}  // namespace
}  // namespace fms::testing
