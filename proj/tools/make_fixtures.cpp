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

// Writes the synthetic profile set and a trace bundle whose per-group,
// per-gender, per-condition reward totals match the published score table.
// Everything is a pure function of the seed.

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <numeric>
#include <random>

#include "fms/analysis.hpp"
#include "fms/cohort.hpp"
#include "fms/error.hpp"
#include "fms/trace.hpp"

namespace {

using fms::Gender;

struct GroupSpec {
  std::string name;
  std::string kind;   // provenance participant_kind
  std::string agent;  // model name
  std::int64_t id_offset;
  // Accepts per cell: female C1, female C2, male C1, male C2.
  std::array<int, 4> cells;
  // Share of non-accepted trials recorded as Missing.
  double missing_share;
};

const std::vector<GroupSpec> kGroups = {
    {"Human", "human", "human", 0, {418, 306, 289, 154}, 0.0},
    {"GPT-3.5", "llm", "gpt-3.5-turbo-0125", 3000, {480, 457, 426, 235}, 0.10},
    {"GPT-4 Turbo", "llm", "gpt-4-1106-preview", 4000, {508, 421, 433, 244}, 0.02},
    {"GPT-4o", "llm", "gpt-4o", 5000, {348, 2, 252, 1}, 0.30},
};

// Persona ids per condition and the number of women among them, in id order.
std::vector<std::int64_t> condition_ids(int condition) {
  std::vector<std::int64_t> ids;
  if (condition == 1) {
    for (int i = 1; i <= 35; ++i) ids.push_back(i);
    for (int i = 71; i <= 85; ++i) ids.push_back(i);
  } else {
    for (int i = 101; i <= 150; ++i) ids.push_back(i);
  }
  return ids;
}
constexpr int kFemalesC1 = 28;
constexpr int kFemalesC2 = 31;

Gender gender_of(std::int64_t persona_id) {
  if (persona_id <= 85) {
    const auto ids = condition_ids(1);
    const auto pos = std::find(ids.begin(), ids.end(), persona_id) - ids.begin();
    return pos < kFemalesC1 ? Gender::Female : Gender::Male;
  }
  return persona_id - 101 < kFemalesC2 ? Gender::Female : Gender::Male;
}

// Splits `total` accepts over `n` people, each in [0, 20], with spread.
std::vector<int> split_accepts(int total, int n, std::mt19937_64& gen) {
  if (total > 20 * n || total < 0) throw std::runtime_error("infeasible cell total");
  std::vector<int> a(static_cast<std::size_t>(n), total / n);
  for (int i = 0; i < total % n; ++i) ++a[static_cast<std::size_t>(i)];
  std::uniform_int_distribution<int> pick(0, n - 1), amount(1, 4);
  for (int k = 0; k < 8 * n; ++k) {
    auto& from = a[static_cast<std::size_t>(pick(gen))];
    auto& to = a[static_cast<std::size_t>(pick(gen))];
    const int d = std::min({amount(gen), from, 20 - to});
    from -= d;
    to += d;
  }
  std::shuffle(a.begin(), a.end(), gen);
  return a;
}

int clamp_score(double v) { return std::clamp(static_cast<int>(std::lround(v)), -100, 100); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic profile set and score-table fixture traces"};
  std::string conditions_dir = "data/conditions", traces_out, profiles_out;
  std::uint64_t seed = 20240601;
  app.add_option("--conditions", conditions_dir, "Directory with condition1.csv and condition2.csv");
  app.add_option("--traces", traces_out, "Trace bundle to write (.traces.jsonl)");
  app.add_option("--profiles", profiles_out, "Profile set to write (.jsonl)");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    std::mt19937_64 gen(seed);

    // Profiles for every human id; agents borrow them by id modulo 1000.
    std::map<std::int64_t, fms::Profile> profiles;
    std::normal_distribution<double> age(29.0, 5.7);
    std::uniform_int_distribution<int> answer(1, 4);
    for (int c : {1, 2}) {
      for (auto id : condition_ids(c)) {
        std::vector<int> aq(fms::kAqItemCount), sds(fms::kSdsItemCount);
        for (auto& v : aq) v = answer(gen);
        for (auto& v : sds) v = answer(gen);
        const int years = std::clamp(static_cast<int>(std::lround(age(gen))), 18, 60);
        profiles.emplace(id, fms::Profile::create(id, years, gender_of(id), aq, sds));
      }
    }
    if (!profiles_out.empty()) {
      std::string text;
      for (const auto& [_, p] : profiles) text += fms::to_json(p).dump() + "\n";
      fms::write_text_atomic(profiles_out, text);
      std::cerr << "wrote " << profiles.size() << " profiles to " << profiles_out << "\n";
    }
    if (traces_out.empty()) return 0;

    const std::filesystem::path cdir(conditions_dir);
    const auto c1 = fms::load_condition_file(cdir / "condition1.csv", fms::ConditionId::condition1());
    const auto c2 = fms::load_condition_file(cdir / "condition2.csv", fms::ConditionId::condition2());

    std::string bundle;
    std::size_t count = 0;
    for (const auto& g : kGroups) {
      for (int c : {1, 2}) {
        const auto& schedule = c == 1 ? c1 : c2;
        for (auto gender : {Gender::Female, Gender::Male}) {
          std::vector<std::int64_t> members;
          for (auto id : condition_ids(c)) {
            if (gender_of(id) == gender) members.push_back(id);
          }
          const int cell = g.cells[static_cast<std::size_t>((gender == Gender::Female ? 0 : 2) + (c - 1))];
          const auto accepts = split_accepts(cell, static_cast<int>(members.size()), gen);

          for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& src = profiles.at(members[m]);
            const auto id = g.id_offset + src.id();
            const auto profile = fms::Profile::create(id, src.age(), src.gender(), src.aq_answers(), src.sds_answers());

            // Which trials are accepted, rejected or missing.
            std::vector<int> order(fms::kTrialsPerSession);
            std::iota(order.begin(), order.end(), 1);
            std::shuffle(order.begin(), order.end(), gen);
            std::vector<fms::Decision> decisions(fms::kTrialsPerSession + 1, fms::Decision::Reject);
            for (int k = 0; k < accepts[m]; ++k) decisions[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = fms::Decision::Accept;
            std::bernoulli_distribution missing(g.missing_share);
            for (int k = accepts[m]; k < fms::kTrialsPerSession; ++k) {
              if (missing(gen)) decisions[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = fms::Decision::Missing;
            }

            fms::SessionState state(fms::group_slug(g.name) + "-" + std::to_string(id), id, schedule,
                                    fms::PenaltyMode::zero_out());
            std::normal_distribution<double> noise(0.0, 18.0);
            for (int t = 1; t <= fms::kTrialsPerSession; ++t) {
              const auto d = decisions[static_cast<std::size_t>(t)];
              if (d == fms::Decision::Missing) {
                state = fms::advance(state, fms::ForfeitEvent{});
                continue;
              }
              const double z = schedule.at(t).p2_get.as_double();
              const double mood = (z - 0.75) / 0.45 * 50.0;
              state = fms::advance(state, fms::EmotionEvent{clamp_score(mood + noise(gen)), clamp_score(20 + noise(gen))});
              state = fms::advance(state, fms::EmotionEvent{clamp_score(mood + noise(gen)), clamp_score(35 + noise(gen))});
              state = fms::advance(state, fms::DecideEvent{d});
              const double relief = d == fms::Decision::Reject ? 10.0 : 0.0;
              state = fms::advance(state, fms::EmotionEvent{clamp_score(mood + relief + noise(gen)), clamp_score(10 + noise(gen))});
            }
            fms::TraceFile trace{std::string(fms::kTraceSchema), state.session_id(), profile,
                                 schedule.condition(), state.penalty_mode(), state.records(),
                                 fms::Provenance{g.kind, g.agent, g.name, "", "", seed}};
            trace.validate();
            if (trace.final_reward() != accepts[m]) throw std::runtime_error("reward mismatch");
            bundle += fms::to_json(trace).dump() + "\n";
            ++count;
          }
        }
      }
    }
    fms::write_text_atomic(traces_out, bundle);
    std::cerr << "wrote " << count << " traces to " << traces_out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
