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

// Deliberately naive scalar version of the belief model, written from the
// equations without sharing any code with fms::belief. Used as an oracle.

#pragma once

#include <vector>

namespace fms::testing {

struct RefStep {
  int y = 0;        // 1 reject
  double e = 0.0;   // unfairness
  double t = 1.0;   // temperature
};

struct RefParams {
  double b1 = 0.0;
  double b2 = 0.0;
  double gamma = 1.0;
  double eps = 1e-6;
  double bel0 = 0.0;
};

struct RefRow {
  double bel_prev, cf, p, bdf, bel;
  int r_prev, r;
};

std::vector<RefRow> ref_rollout(const std::vector<RefStep>& steps, const RefParams& p);
double ref_nll(const std::vector<RefStep>& steps, const RefParams& p);

/// NLL with beliefs pinned to `beliefs_prev` (one per step).
double ref_frozen_nll(const std::vector<RefStep>& steps, const std::vector<double>& beliefs_prev,
                      double b1, double b2);

/// Central differences of ref_frozen_nll around the rolled-out beliefs.
void ref_fd_gradient(const std::vector<RefStep>& steps, const RefParams& p, double h,
                     double out[2]);

}  // namespace fms::testing
