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

#include "fms/cohort.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "fms/error.hpp"
#include "fms/mock_chat.hpp"
#include "test_util.hpp"

namespace fms {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_profiles(const fs::path& path, std::initializer_list<std::int64_t> ids) {
  std::ofstream out(path);
  for (auto id : ids) out << to_json(testing::make_profile(id, id % 2 ? Gender::Male : Gender::Female)).dump() << "\n";
}

class CohortTest : public ::testing::Test {
 protected:
  RunConfig base(const fs::path& out) {
    write_profiles(dir_ / "profiles.jsonl", {1, 2, 3, 4});
    RunConfig c;
    c.output_dir = out;
    c.profiles = dir_ / "profiles.jsonl";
    c.condition_files = {{"condition1", testing::data_dir() / "conditions" / "condition1.csv"},
                         {"condition2", testing::data_dir() / "conditions" / "condition2.csv"}};
    c.concurrency = 2;
    c.seed = 7;
    c.timestamps = false;
    return c;
  }

  CohortSpec mock_cohort(const std::string& url, std::int64_t lo, std::int64_t hi) {
    CohortSpec s;
    s.group = "GPT-4o";
    s.id_ranges = {{lo, hi}};
    s.condition = "condition2";
    s.participant.kind = ParticipantSpec::Kind::Llm;
    s.participant.endpoint.url = url;
    s.participant.endpoint.model = "gpt-4o";
    s.participant.retry = {3, {}};
    return s;
  }

  testing::TempDir dir_;
};

TEST_F(CohortTest, ScriptedAlwaysAccept) {
  auto c = base(dir_ / "run");
  CohortSpec s;
  s.group = "Scripted";
  s.id_ranges = {{1, 2}};
  s.condition = "condition1";
  s.participant.policy = ScriptedPolicy::always_accept();
  c.cohorts = {s};
  const auto r = run_llm_cohort(c);
  ASSERT_EQ(r.traces.size(), 2u);
  for (const auto& t : r.traces) {
    EXPECT_EQ(t.final_reward(), 20);
    EXPECT_EQ(t.provenance.participant_kind, "scripted");
    EXPECT_EQ(t.provenance.agent, "always_accept");
  }
  EXPECT_EQ(r.trials_played, 40);
  for (const auto& p : r.trace_paths) EXPECT_TRUE(fs::exists(p));
}

TEST_F(CohortTest, OneGarbageTrialBecomesMissing) {
  auto c = base(dir_ / "run");
  c.cohorts = {mock_cohort("mock://?garbage=0", 3, 3)};
  CohortHooks hooks;
  hooks.client_factory = [](const EndpointConfig&) {
    MockChatConfig m;
    m.garbage_rate = 0.0;
    m.always_garbage = {{3, 6}};
    return std::make_shared<MockChatClient>(m);
  };
  const auto r = run_llm_cohort(c, hooks);
  ASSERT_EQ(r.traces.size(), 1u);
  EXPECT_EQ(r.missing, 1);
  EXPECT_EQ(r.traces[0].records[5].decision, Decision::Missing);
  EXPECT_EQ(r.traces[0].records.size(), 20u);
  EXPECT_EQ(r.traces[0].provenance.participant_kind, "llm");
}

TEST_F(CohortTest, ResumeAfterInterruptionMatchesUninterruptedRun) {
  const std::string url = "mock://?seed=4&garbage=0.2";
  auto whole = base(dir_ / "whole");
  whole.cohorts = {mock_cohort(url, 1, 2)};
  const auto a = run_llm_cohort(whole);

  auto split = base(dir_ / "split");
  split.cohorts = {mock_cohort(url, 1, 2)};
  CohortHooks stop;
  stop.stop_after_trials = 10;
  const auto first = run_llm_cohort(split, stop);
  EXPECT_EQ(first.trials_played, 20);
  for (const auto& t : first.traces) EXPECT_EQ(t.records.size(), 10u);
  const auto b = run_llm_cohort(split);
  EXPECT_EQ(b.trials_resumed, 20);
  EXPECT_EQ(b.trials_played, 20);

  ASSERT_EQ(a.trace_paths.size(), b.trace_paths.size());
  for (std::size_t i = 0; i < a.trace_paths.size(); ++i) {
    EXPECT_EQ(read_text(a.trace_paths[i]), read_text(b.trace_paths[i]));
    auto log_a = a.trace_paths[i];
    auto log_b = b.trace_paths[i];
    const auto stem = log_a.filename().string();
    const auto id = stem.substr(0, stem.find('.'));
    EXPECT_EQ(read_text(log_a.replace_filename(id + ".exchanges.jsonl")),
              read_text(log_b.replace_filename(id + ".exchanges.jsonl")));
  }

  // A third run finds everything complete and queries nothing.
  const auto c = run_llm_cohort(split);
  EXPECT_EQ(c.agents_skipped, 2);
  EXPECT_EQ(c.trials_played, 0);
}

TEST_F(CohortTest, ConcurrencyCapIsRespected) {
  auto c = base(dir_ / "run");
  c.concurrency = 4;
  auto cohort = mock_cohort("mock://x", 1, 4);
  cohort.participant.endpoint.max_concurrent = 1;
  c.cohorts = {cohort};
  const auto r = run_llm_cohort(c);
  EXPECT_EQ(r.traces.size(), 4u);
}

TEST_F(CohortTest, AuthErrorAborts) {
  class Denied : public ChatClient {
   public:
    std::string complete(const ChatRequest&) override {
      throw Error(ErrorCode::AuthError, "denied");
    }
  };
  auto c = base(dir_ / "run");
  c.cohorts = {mock_cohort("https://example.invalid/v1", 1, 2)};
  CohortHooks hooks;
  hooks.client_factory = [](const EndpointConfig&) { return std::make_shared<Denied>(); };
  try {
    run_llm_cohort(c, hooks);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AuthError);
  }
}

TEST(RunConfigTest, ParsesJson) {
  const json j = {
      {"output_dir", "out"},
      {"profiles", "profiles.jsonl"},
      {"conditions", {{"condition1", "c1.csv"}}},
      {"penalty_mode", "deduct"},
      {"concurrency", 3},
      {"seed", 11},
      {"cohorts",
       {{{"group", "GPT-4o"},
         {"condition", "condition1"},
         {"ids", {"1-35", "71-85"}},
         {"participant",
          {{"kind", "llm"},
           {"endpoint", {{"url", "mock://"}, {"model", "gpt-4o"}, {"api_key_env", "MY_KEY"}}},
           {"retry", {{"max_attempts", 2}, {"backoff_ms", {100}}}}}}}}}};
  const auto c = run_config_from_json(j, "/base");
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.condition_files.at("condition1"), fs::path("/base/c1.csv"));
  EXPECT_EQ(c.penalty_mode, PenaltyMode::deduct());
  ASSERT_EQ(c.cohorts.size(), 1u);
  EXPECT_EQ(c.cohorts[0].ids().size(), 50u);
  EXPECT_EQ(c.cohorts[0].participant.endpoint.api_key_env, "MY_KEY");
  EXPECT_EQ(c.cohorts[0].participant.retry.max_attempts, 2);
}

TEST(RunConfigTest, RejectsInlineKeysAndOverlaps) {
  json j = {{"profiles", "p"},
            {"conditions", {{"condition1", "c1.csv"}}},
            {"cohorts",
             {{{"group", "A"},
               {"condition", "condition1"},
               {"ids", {"1-10"}},
               {"participant", {{"kind", "llm"}, {"endpoint", {{"api_key", "sk-x"}}}}}}}}};
  EXPECT_THROW(run_config_from_json(j), Error);

  j["cohorts"] = {{{"group", "A"}, {"condition", "condition1"}, {"ids", {"1-10"}},
                   {"participant", {{"kind", "scripted"}, {"policy", "always_accept"}}}},
                  {{"group", "B"}, {"condition", "condition1"}, {"ids", {"5-20"}},
                   {"participant", {{"kind", "scripted"}, {"policy", "always_reject"}}}}};
  try {
    run_config_from_json(j).validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
}

TEST(CohortHelpersTest, IdsAndSlugs) {
  EXPECT_EQ(parse_id_range("1-35"), (std::pair<std::int64_t, std::int64_t>{1, 35}));
  EXPECT_EQ(parse_id_range("7"), (std::pair<std::int64_t, std::int64_t>{7, 7}));
  EXPECT_THROW(parse_id_range("9-3"), Error);
  EXPECT_EQ(persona_source_id(3012), 12);
  EXPECT_EQ(persona_source_id(12), 12);
  EXPECT_EQ(group_slug("GPT-4 Turbo"), "gpt-4-turbo");
}

}  // namespace
}  // namespace fms
