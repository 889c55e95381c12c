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

#include "fms/commands.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fms/error.hpp"
#include "test_util.hpp"

namespace fms::commands {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Decision> pattern(std::uint64_t seed, double p_reject) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution rej(p_reject);
  std::vector<Decision> d(20);
  for (auto& x : d) x = rej(rng) ? Decision::Reject : Decision::Accept;
  return d;
}

TEST(StepsFromTraceTest, SkipsMissingTrials) {
  auto d = pattern(1, 0.5);
  d[4] = Decision::Missing;
  const auto trace = testing::play_trace("s", testing::make_profile(1), testing::condition1(), d);
  const auto steps = steps_from_trace(trace);
  ASSERT_EQ(steps.size(), 19u);
  EXPECT_EQ(steps[4].trial_index, 6);
  for (const auto& s : steps) {
    EXPECT_GE(s.unfairness, 0.0);
    EXPECT_LE(s.unfairness, 1.0);
    ASSERT_TRUE(s.arousal.has_value());
    // play_trace reports arousal 40 before every decision.
    EXPECT_DOUBLE_EQ(*s.arousal, 0.7);
  }
  EXPECT_EQ(steps[0].rejected, d[0] == Decision::Reject ? 1 : 0);
}

TEST(FitConfigJsonTest, RoundTrip) {
  belief::FitConfig c;
  c.gamma_grid = {0.0, 0.5, 1.0};
  c.bel0_grid = {0.0, 1.0};
  c.temperature = belief::EmotionTemperature{0.4, 1.6};
  c.max_outer_iterations = 12;
  c.seed = 9;
  const auto back = fit_config_from_json(to_json(c));
  EXPECT_EQ(back.gamma_grid, c.gamma_grid);
  EXPECT_EQ(back.bel0_grid, c.bel0_grid);
  EXPECT_EQ(back.temperature, c.temperature);
  EXPECT_EQ(back.max_outer_iterations, 12);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_THROW(fit_config_from_json(json{{"gamma_grid", json::array()}}), Error);
}

TEST(FitRecordJsonTest, RoundTrip) {
  const auto trace = testing::play_trace("s1", testing::make_profile(4, Gender::Male),
                                         testing::condition2(), pattern(3, 0.4), PenaltyMode::zero_out(),
                                         "GPT-4o");
  belief::FitConfig c;
  c.gamma_grid = {0.0};
  c.bel0_grid = {1.0};
  const auto rec = fit_trace(trace, c);
  ASSERT_TRUE(rec.result.has_value()) << rec.error;
  EXPECT_EQ(rec.group, "GPT-4o");
  EXPECT_EQ(rec.condition, "Condition2");
  EXPECT_EQ(rec.gender, Gender::Male);
  EXPECT_EQ(rec.belief_by_trial.size(), 20u);

  const auto back = fit_record_from_json(json::parse(to_json(rec).dump()));
  EXPECT_EQ(back.session_id, rec.session_id);
  EXPECT_EQ(back.result->params, rec.result->params);
  EXPECT_DOUBLE_EQ(back.result->nll, rec.result->nll);
  EXPECT_EQ(back.belief_by_trial, rec.belief_by_trial);
  EXPECT_EQ(back.decision_by_trial, rec.decision_by_trial);
  EXPECT_EQ(to_json(back), to_json(rec));
}

TEST(FitCommandTest, UnfittableTraceExitsThreeUnlessSkipped) {
  testing::TempDir dir;
  write_trace(dir / "a.trace.json",
              testing::play_trace("a", testing::make_profile(1), testing::condition1(), pattern(5, 0.5)));
  // Every trial missing: nothing to fit.
  write_trace(dir / "b.trace.json",
              testing::play_trace("b", testing::make_profile(2), testing::condition1(),
                                  std::vector<Decision>(20, Decision::Missing)));
  FitArgs args;
  args.traces = {dir.path()};
  args.output = dir / "fits.jsonl";
  std::ostringstream log;
  EXPECT_EQ(fit_command(args, log), 3);
  EXPECT_EQ(read_fit_file(args.output).size(), 2u);
  args.skip_unfittable = true;
  EXPECT_EQ(fit_command(args, log), 0);
  const auto records = read_fit_file(args.output);
  EXPECT_EQ(belief_series(records).size(), 1u);
}

TEST(AnalyzeCommandTest, FixtureScores) {
  testing::TempDir dir;
  AnalyzeArgs args;
  args.traces = {testing::fixture_dir() / "table2"};
  args.output = dir / "analysis.json";
  args.tables_dir = dir / "tables";
  std::ostringstream log;
  ASSERT_EQ(analyze_command(args, log), 0);
  const auto j = json::parse(read_text(args.output));
  std::vector<int> scores;
  for (const auto& row : j.at("table2")) scores.push_back(row.at("score").get<int>());
  EXPECT_EQ(scores, (std::vector<int>{1167, 1598, 1606, 603}));
  EXPECT_TRUE(fs::exists(dir / "tables" / "table2.csv"));
}

TEST(AnalyzeCommandTest, ZeroGammaGivesFlatCurves) {
  testing::TempDir dir;
  const auto schedule = testing::condition2();
  for (int i = 1; i <= 6; ++i) {
    write_trace(dir / ("t" + std::to_string(i) + ".trace.json"),
                testing::play_trace("t" + std::to_string(i), testing::make_profile(i), schedule,
                                    pattern(100 + i, 0.3 + 0.05 * i), PenaltyMode::zero_out(), "GPT-4o"));
  }
  FitArgs fit;
  fit.traces = {dir.path()};
  fit.output = dir / "fits.jsonl";
  fit.config.gamma_grid = {0.0};
  fit.config.bel0_grid = {0.5};
  std::ostringstream log;
  ASSERT_EQ(fit_command(fit, log), 0) << log.str();

  AnalyzeArgs args;
  args.traces = {dir.path()};
  args.fits = fit.output;
  args.output = dir / "analysis.json";
  ASSERT_EQ(analyze_command(args, log), 0);
  const auto report = analysis::report_from_json(json::parse(read_text(args.output)));
  ASSERT_EQ(report.belief_curves.size(), 1u);
  ASSERT_EQ(report.belief_curves[0].points.size(), 20u);
  for (const auto& p : report.belief_curves[0].points) {
    EXPECT_NEAR(p.mean, 0.5, 1e-12);
    EXPECT_NEAR(p.sd, 0.0, 1e-12);
  }
}

TEST(ExportCommandTest, ReexportIsStable) {
  testing::TempDir dir;
  AnalyzeArgs args;
  args.traces = {testing::fixture_dir() / "table2"};
  args.output = dir / "analysis.json";
  args.tables_dir = dir / "first";
  std::ostringstream log;
  ASSERT_EQ(analyze_command(args, log), 0);

  ExportArgs ex;
  ex.report = args.output;
  ex.output_dir = dir / "second";
  ASSERT_EQ(export_command(ex, log), 0);
  for (const auto& entry : fs::directory_iterator(dir / "first")) {
    EXPECT_EQ(read_text(entry.path()), read_text(dir / "second" / entry.path().filename()))
        << entry.path();
  }
  ex.format = analysis::ExportFormat::Tsv;
  ex.output_dir = dir / "tsv";
  ASSERT_EQ(export_command(ex, log), 0);
  EXPECT_TRUE(fs::exists(dir / "tsv" / "table2.tsv"));

  ex.report = dir / "missing.json";
  EXPECT_THROW(export_command(ex, log), Error);
}

}  // namespace
}  // namespace fms::commands
