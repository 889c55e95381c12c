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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fms/analysis.hpp"
#include "fms/belief_model.hpp"
#include "fms/participants.hpp"

namespace {

using namespace fms;

std::vector<belief::StepInputs> random_steps(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<belief::StepInputs> steps;
  for (int j = 1; j <= n; ++j) steps.push_back({j, u(rng) < 0.4 ? 1 : 0, u(rng), u(rng)});
  return steps;
}

void BM_Rollout(benchmark::State& state) {
  const auto steps = random_steps(static_cast<int>(state.range(0)), 1);
  belief::Params p;
  p.beta1 = 0.8;
  p.beta2 = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(belief::rollout(steps, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rollout)->Arg(20)->Arg(200)->Arg(2000);

void BM_Fit(benchmark::State& state) {
  const auto steps = random_steps(static_cast<int>(state.range(0)), 2);
  belief::FitConfig c;
  c.gamma_grid = {0.0, 0.5, 1.0};
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(belief::fit(steps, c));
    } catch (const std::exception&) {
    }
  }
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ParseResponse(benchmark::State& state) {
  const ParsedTurn turn{{EmotionPhase::PostAllocation, -35, 60},
                        {EmotionPhase::PreDecision, -40, 70},
                        Decision::Reject,
                        {EmotionPhase::PostDecision, 10, 20}};
  const auto text = "Sure, here is my answer.\n" + render_response(turn);
  for (auto _ : state) benchmark::DoNotOptimize(parse_response(text));
}
BENCHMARK(BM_ParseResponse);

void BM_Entropy(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(analysis::entropy(v, 20));
}
BENCHMARK(BM_Entropy)->Arg(120)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
