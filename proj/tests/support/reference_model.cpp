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

#include "reference_model.hpp"

#include <cmath>

namespace fms::testing {

namespace {

double clamp_p(double p) {
  if (p < 1e-12) return 1e-12;
  if (p > 1 - 1e-12) return 1 - 1e-12;
  return p;
}

}  // namespace

std::vector<RefRow> ref_rollout(const std::vector<RefStep>& steps, const RefParams& p) {
  std::vector<RefRow> rows;
  double bel = p.bel0;
  int r = 0;
  for (const auto& s : steps) {
    RefRow row{};
    row.bel_prev = bel;
    row.r_prev = r;
    row.cf = p.b1 * bel * s.e + p.b2 * r - 1.0;
    row.p = 1.0 / (1.0 + std::exp(-row.cf / s.t));
    row.bdf = s.y - row.p;
    double inner = std::exp(bel) + p.gamma * row.bdf;
    if (inner < p.eps) inner = p.eps;
    bel = std::log(inner);
    if (s.y == 0) r += 1;
    row.bel = bel;
    row.r = r;
    rows.push_back(row);
  }
  return rows;
}

double ref_nll(const std::vector<RefStep>& steps, const RefParams& p) {
  double total = 0;
  const auto rows = ref_rollout(steps, p);
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const double pj = clamp_p(rows[j].p);
    total += steps[j].y == 1 ? -std::log(pj) : -std::log(1 - pj);
  }
  return total;
}

double ref_frozen_nll(const std::vector<RefStep>& steps, const std::vector<double>& beliefs_prev,
                      double b1, double b2) {
  double total = 0;
  int r = 0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const double cf = b1 * beliefs_prev[j] * steps[j].e + b2 * r - 1.0;
    // log(1 + e^x) written out twice so large |x| stays finite.
    const double x = cf / steps[j].t;
    const double softplus_pos = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    const double softplus_neg = softplus_pos - x;
    total += steps[j].y == 1 ? softplus_neg : softplus_pos;
    if (steps[j].y == 0) r += 1;
  }
  return total;
}

void ref_fd_gradient(const std::vector<RefStep>& steps, const RefParams& p, double h,
                     double out[2]) {
  std::vector<double> beliefs;
  for (const auto& row : ref_rollout(steps, p)) beliefs.push_back(row.bel_prev);
  out[0] = (ref_frozen_nll(steps, beliefs, p.b1 + h, p.b2) -
            ref_frozen_nll(steps, beliefs, p.b1 - h, p.b2)) / (2 * h);
  out[1] = (ref_frozen_nll(steps, beliefs, p.b1, p.b2 + h) -
            ref_frozen_nll(steps, beliefs, p.b1, p.b2 - h)) / (2 * h);
}

}  // namespace fms::testing
