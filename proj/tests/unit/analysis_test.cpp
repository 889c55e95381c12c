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

#include "fms/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fms/error.hpp"
#include "test_util.hpp"

namespace fms::analysis {
namespace {

namespace fs = std::filesystem;

std::vector<Decision> decisions(int rejects, int missing) {
  std::vector<Decision> d(20, Decision::Accept);
  for (int i = 0; i < rejects; ++i) d[static_cast<std::size_t>(i)] = Decision::Reject;
  for (int i = 0; i < missing; ++i) d[static_cast<std::size_t>(19 - i)] = Decision::Missing;
  return d;
}

TraceFile trace(const std::string& id, std::int64_t pid, int rejects, int missing,
                const std::string& group = "Human", Gender g = Gender::Female,
                const AllocationSchedule& schedule = testing::condition1()) {
  return testing::play_trace(id, testing::make_profile(pid, g), schedule,
                             decisions(rejects, missing), PenaltyMode::zero_out(), group);
}

const std::vector<TraceFile>& table2_fixture() {
  static const auto traces = load_traces(testing::fixture_dir() / "table2");
  return traces;
}

TEST(GroupTest, LabelsAndOrder) {
  EXPECT_EQ(Group::from_label("human"), Group::human());
  EXPECT_EQ(Group::from_label("gpt-3.5-turbo-0125"), Group::gpt35());
  EXPECT_EQ(Group::from_label("GPT-4 Turbo"), Group::gpt4_turbo());
  EXPECT_EQ(Group::from_label("gpt-4-1106-preview"), Group::gpt4_turbo());
  EXPECT_EQ(Group::from_label("gpt-4o"), Group::gpt4o());
  EXPECT_EQ(Group::from_label("llama").name(), "llama");
  EXPECT_LT(Group::human(), Group::gpt35());
  EXPECT_LT(Group::gpt4_turbo(), Group::gpt4o());
  EXPECT_LT(Group::gpt4o(), Group::custom("a"));
}

TEST(GroupScoreTest, Table2FixtureCells) {
  const auto& traces = table2_fixture();
  ASSERT_EQ(traces.size(), 400u);
  const auto c1 = ConditionId::condition1(), c2 = ConditionId::condition2();
  auto cell = [&](Group g, ConditionId c, Gender s) {
    return group_score(traces, GroupKey{g, c, s});
  };
  EXPECT_EQ(cell(Group::human(), c1, Gender::Female), 418);
  EXPECT_EQ(cell(Group::human(), c2, Gender::Female), 306);
  EXPECT_EQ(cell(Group::human(), c1, Gender::Male), 289);
  EXPECT_EQ(cell(Group::human(), c2, Gender::Male), 154);
  EXPECT_EQ(group_score(traces, GroupKey{Group::human()}), 1167);
  EXPECT_EQ(group_score(traces, GroupKey{Group::gpt4o()}), 603);
  EXPECT_EQ(cell(Group::gpt4o(), c2, Gender::Female), 2);
}

TEST(GroupScoreTest, EmptyGroupScoresZero) {
  EXPECT_EQ(group_score({}, GroupKey{Group::human()}), 0);
  EXPECT_EQ(group_score(table2_fixture(), GroupKey{Group::custom("nobody")}), 0);
}

TEST(Table2Test, ScoreIsTheSumOfCells) {
  const auto rows = table2(table2_fixture());
  ASSERT_EQ(rows.size(), 4u);
  const int expected[] = {1167, 1598, 1606, 603};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    EXPECT_EQ(r.score, expected[i]) << r.group.name();
    EXPECT_EQ(r.score, r.female_condition1 + r.female_condition2 + r.male_condition1 +
                           r.male_condition2);
  }
}

TEST(RatesTest, SimpleCounts) {
  const std::vector<TraceFile> one{trace("a", 1, 5, 0)};
  const auto s = rates(one, GroupKey{Group::human()});
  EXPECT_DOUBLE_EQ(s.rejection_rate, 0.25);
  EXPECT_EQ(s.score, 15);

  const std::vector<TraceFile> all_missing{trace("b", 2, 0, 20)};
  const auto m = rates(all_missing, GroupKey{Group::human()});
  EXPECT_DOUBLE_EQ(m.missing_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.rejection_rate, 0.0);
}

TEST(RatesTest, PooledOverIndividuals) {
  const std::vector<TraceFile> two{trace("a", 1, 4, 1), trace("b", 2, 0, 0)};
  const auto s = rates(two, GroupKey{Group::human()});
  EXPECT_EQ(s.n_trials, 40);
  EXPECT_NEAR(s.rejection_rate, 0.10, 1e-12);
  EXPECT_NEAR(s.missing_rate, 0.025, 1e-12);
  EXPECT_NEAR(s.acceptance_rate + s.rejection_rate + s.missing_rate, 1.0, 1e-9);
}

TEST(RatesTest, ScoreMatchesRateWithoutMissing) {
  for (const auto& g : {Group::human()}) {
    const auto s = rates(table2_fixture(), GroupKey{g});
    ASSERT_EQ(s.n_missing, 0);
    EXPECT_EQ(s.score, static_cast<int>(std::lround(s.n_trials * (1.0 - s.rejection_rate))));
  }
}

TEST(RatesTest, EmptyGroupIsAllZero) {
  const auto s = rates({}, GroupKey{Group::gpt35()});
  EXPECT_EQ(s.n_trials, 0);
  EXPECT_EQ(s.rejection_rate, 0.0);
}

TEST(EmotionTest, Normalisation) {
  EXPECT_DOUBLE_EQ(normalize_emotion(-100), 0.0);
  EXPECT_DOUBLE_EQ(normalize_emotion(0), 0.5);
  EXPECT_DOUBLE_EQ(normalize_emotion(37), 0.685);
  EXPECT_DOUBLE_EQ(normalize_emotion(100), 1.0);
}

TEST(EmotionTest, PoolsAllPhasesAndSkipsMissing) {
  const auto t = trace("a", 1, 2, 3);
  const auto v = normalize_emotions(t, EmotionDimension::Valence);
  const auto a = normalize_emotions(t, EmotionDimension::Arousal);
  const auto c = normalize_emotions(t, EmotionDimension::Combined);
  EXPECT_EQ(v.size(), 17u * 3);
  EXPECT_EQ(a.size(), 17u * 3);
  EXPECT_EQ(c.size(), 17u * 6);
  EXPECT_DOUBLE_EQ(v[0], normalize_emotion(10));
  EXPECT_DOUBLE_EQ(v[1], normalize_emotion(-30));
  EXPECT_DOUBLE_EQ(a[2], normalize_emotion(60));
}

TEST(EntropyTest, DegenerateInputIsZero) {
  const std::vector<double> same(50, 0.42);
  EXPECT_DOUBLE_EQ(entropy(same).entropy, 0.0);
}

TEST(EntropyTest, UniformOverBinsIsLogB) {
  for (int b : {1, 2, 5, 20, 37}) {
    std::vector<double> v;
    for (int k = 0; k < b; ++k) v.push_back((k + 0.5) / b);
    const auto r = entropy(v, b);
    EXPECT_NEAR(r.entropy, std::log(static_cast<double>(b)), 1e-9) << b;
    EXPECT_EQ(r.edges.size(), static_cast<std::size_t>(b) + 1);
  }
}

TEST(EntropyTest, TwoEqualHalves) {
  const std::vector<double> v{0.1, 0.9};
  EXPECT_NEAR(entropy(v, 2).entropy, 0.693147, 1e-6);
}

TEST(EntropyTest, UpperEdgeGoesInLastBin) {
  const std::vector<double> v{1.0, 0.99};
  const auto r = entropy(v, 10);
  EXPECT_DOUBLE_EQ(r.probabilities.back(), 1.0);
}

TEST(EntropyTest, BoundsOnRandomInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int b = 1 + static_cast<int>(rng() % 30);
    std::vector<double> v(1 + rng() % 80);
    for (auto& x : v) x = u(rng);
    const auto r = entropy(v, b);
    double sum = 0;
    for (double p : r.probabilities) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_GE(r.entropy, 0.0);
    EXPECT_LE(r.entropy, std::log(static_cast<double>(b)) + 1e-12);
  }
}

TEST(EntropyTest, Errors) {
  try {
    entropy({}, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  const std::vector<double> v{0.5};
  EXPECT_THROW(entropy(v, 0), Error);
}

BeliefSeries series(const std::string& id, std::vector<double> belief,
                    std::vector<std::optional<int>> y = {}) {
  BeliefSeries s;
  s.session_id = id;
  s.belief_by_trial = std::move(belief);
  s.decision_by_trial = y.empty() ? std::vector<std::optional<int>>(s.belief_by_trial.size(), 0)
                                  : std::move(y);
  return s;
}

TEST(BeliefCurveTest, OneMemberIsItsTrajectory) {
  const std::vector<BeliefSeries> one{series("a", {0.1, 0.2, 0.4})};
  const auto curve = group_belief_curve(one, GroupKey{Group::human()});
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[2].mean, 0.4);
  EXPECT_DOUBLE_EQ(curve[2].sd, 0.0);
  EXPECT_EQ(curve[0].trial, 1);
}

TEST(BeliefCurveTest, TwoConstantMembers) {
  const std::vector<BeliefSeries> two{series("a", std::vector<double>(20, 0.0)),
                                      series("b", std::vector<double>(20, 1.0))};
  for (const auto& p : group_belief_curve(two, GroupKey{Group::human()})) {
    EXPECT_DOUBLE_EQ(p.mean, 0.5);
    EXPECT_DOUBLE_EQ(p.sd, 0.5);
  }
}

TEST(BeliefCurveTest, MixedLengthsRejected) {
  const std::vector<BeliefSeries> mixed{series("a", {0.0, 1.0}), series("b", {0.0})};
  try {
    group_belief_curve(mixed, GroupKey{Group::human()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedLengths);
  }
}

TEST(CorrelationTest, Pearson) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, flat{1, 1, 1, 1};
  EXPECT_NEAR(*pearson(x, y), 1.0, 1e-12);
  EXPECT_NEAR(*pearson(x, z), -1.0, 1e-12);
  EXPECT_FALSE(pearson(x, flat));
  EXPECT_FALSE(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}));
}

TEST(CorrelationTest, AlignedAndAntiAlignedFixtures) {
  // Belief tracks the decisions exactly (r = 1) or mirrors them (r = -1).
  std::vector<std::optional<int>> y;
  std::vector<double> up, down;
  for (int j = 0; j < 20; ++j) {
    const int d = j % 3 == 0 ? 1 : 0;
    y.push_back(d);
    up.push_back(0.2 + 0.5 * d);
    down.push_back(-static_cast<double>(d));
  }
  const std::vector<BeliefSeries> aligned{series("a", up, y)};
  const std::vector<BeliefSeries> anti{series("b", down, y)};
  EXPECT_NEAR(*belief_behavior_correlation(aligned, GroupKey{Group::human()}).pooled, 1.0, 1e-12);
  EXPECT_NEAR(*belief_behavior_correlation(anti, GroupKey{Group::human()}).individuals[0].r, -1.0,
              1e-12);
}

TEST(CorrelationTest, ConstantBeliefIsUndefined) {
  std::vector<std::optional<int>> y{0, 1, 0, 1};
  const std::vector<BeliefSeries> flat{series("a", {0.3, 0.3, 0.3, 0.3}, y)};
  const auto r = belief_behavior_correlation(flat, GroupKey{Group::human()});
  EXPECT_FALSE(r.individuals[0].r);
  EXPECT_FALSE(r.mean_individual);
}

TEST(CorrelationTest, MissingTrialsAreDropped) {
  std::vector<std::optional<int>> y{0, 1, std::nullopt, 1};
  const std::vector<BeliefSeries> s{series("a", {0.0, 1.0, 57.0, 1.0}, y)};
  EXPECT_NEAR(*belief_behavior_correlation(s, GroupKey{Group::human()}).pooled, 1.0, 1e-12);
}

TEST(CorrelationTest, InsufficientData) {
  const std::vector<BeliefSeries> s{series("a", {0.0}, {1})};
  EXPECT_THROW(belief_behavior_correlation(s, GroupKey{Group::human()}), Error);
}

class ExportTest : public ::testing::Test {
 protected:
  testing::TempDir dir_;
};

TEST_F(ExportTest, Table2ScoreCell) {
  const auto report = analyze(table2_fixture(), {});
  const auto paths = export_tables(report, dir_.path());
  const auto text = read_text(dir_ / "table2.csv");
  EXPECT_NE(text.find("Human,418,306,289,154,1167\n"), std::string::npos) << text;
  EXPECT_NE(text.find("GPT-4o,348,2,252,1,603\n"), std::string::npos);
  EXPECT_EQ(paths.size(), 6u);
}

TEST_F(ExportTest, EmptyReportGivesHeadersOnly) {
  export_tables(AnalysisReport{}, dir_.path(), ExportFormat::Tsv);
  EXPECT_EQ(read_text(dir_ / "table2.tsv"),
            "group\tfemale_condition1\tfemale_condition2\tmale_condition1\tmale_condition2\tscore\n");
  EXPECT_EQ(read_text(dir_ / "long.tsv"), "group\tcondition\ttrial\tmetric\tvalue\n");
}

TEST_F(ExportTest, ByteIdenticalOnReexport) {
  const std::vector<TraceFile> traces{trace("a", 1, 4, 1), trace("b", 2, 0, 0)};
  const auto report = analyze(traces, {});
  export_tables(report, dir_ / "one");
  export_tables(report_from_json(to_json(report)), dir_ / "two");
  for (const auto& name : {"table2.csv", "rates.csv", "entropy.csv", "belief_curves.csv",
                           "correlations.csv", "long.csv"}) {
    EXPECT_EQ(read_text(dir_ / "one" / name), read_text(dir_ / "two" / name)) << name;
  }
}

TEST(AnalyzeTest, FlatCurvesForFlatBeliefs) {
  std::vector<BeliefSeries> s{series("a", std::vector<double>(20, 0.25)),
                              series("b", std::vector<double>(20, 0.75))};
  const std::vector<TraceFile> traces{trace("a", 1, 0, 0), trace("b", 2, 0, 0)};
  const auto report = analyze(traces, s);
  ASSERT_FALSE(report.belief_curves.empty());
  for (const auto& p : report.belief_curves[0].points) EXPECT_DOUBLE_EQ(p.mean, 0.5);
  // Constant decisions leave no defined correlation, which is skipped quietly.
  EXPECT_EQ(report.entropy.size(), 6u);
}

}  // namespace
}  // namespace fms::analysis
