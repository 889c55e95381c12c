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

#include "fms/session_store.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "fms/error.hpp"
#include "test_util.hpp"

namespace fms {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fms::Error thrown";
  return ErrorCode::BadRequest;
}

class SessionStoreTest : public ::testing::Test {
 protected:
  SessionStoreOptions options() {
    SessionStoreOptions o;
    o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    o.new_id = [this] { return "sess" + std::to_string(next_id_++); };
    return o;
  }

  void play_trial(SessionStore& store, const std::string& id, Decision d) {
    store.submit(id, EmotionEvent{10, 20});
    store.submit(id, EmotionEvent{-10, 30});
    store.submit(id, DecideEvent{d});
    store.submit(id, EmotionEvent{0, 5});
  }

  testing::TempDir dir_;
  int next_id_ = 1;
};

TEST_F(SessionStoreTest, CreateStartsAtFirstStage) {
  SessionStore store(dir_.path(), options());
  const auto s = store.create(testing::make_profile(1, Gender::Male, 28), testing::condition1(),
                              PenaltyMode::zero_out());
  EXPECT_EQ(s.stage, Stage::AwaitingEmotion1);
  EXPECT_EQ(s.trial, 1);
  ASSERT_TRUE(s.allocation);
  EXPECT_EQ(s.allocation->p2_get, Money::tenths(10));
  EXPECT_TRUE(std::filesystem::exists(dir_ / s.session_id / "session.json"));
}

TEST_F(SessionStoreTest, DefaultIdsAreDistinct) {
  SessionStore store(dir_.path());
  const auto a = store.create(testing::make_profile(1), testing::condition1(), {});
  const auto b = store.create(testing::make_profile(1), testing::condition1(), {});
  EXPECT_NE(a.session_id, b.session_id);
  EXPECT_EQ(a.session_id.size(), 32u);
}

TEST_F(SessionStoreTest, TrialEchoesPayoff) {
  SessionStore store(dir_.path(), options());
  const auto id = store.create(testing::make_profile(1), testing::condition1(), {}).session_id;
  play_trial(store, id, Decision::Reject);
  const auto s = store.get(id);
  EXPECT_EQ(s.stage, Stage::TrialComplete);
  ASSERT_TRUE(s.last_trial);
  EXPECT_EQ(s.last_trial->payoff.p1_final, Money());
  EXPECT_EQ(s.last_trial->payoff.p3_reward, 0);
  EXPECT_EQ(s.trial, 2);
  const auto j = to_json(s);
  EXPECT_EQ(j["last_trial"]["payoff"]["p2_final"], "1.0");
  EXPECT_EQ(j["stage"], "trial_complete");
  EXPECT_FALSE(j.contains("cumulative_reward"));
}

TEST_F(SessionStoreTest, DecisionAtWrongStage) {
  SessionStore store(dir_.path(), options());
  const auto id = store.create(testing::make_profile(1), testing::condition1(), {}).session_id;
  EXPECT_EQ(code_of([&] { store.submit(id, DecideEvent{Decision::Accept}); }),
            ErrorCode::StageMismatch);
  EXPECT_EQ(code_of([&] { store.submit("nope", EmotionEvent{}); }), ErrorCode::UnknownSession);
  EXPECT_EQ(code_of([&] { store.submit(id, EmotionEvent{101, 0}); }),
            ErrorCode::EmotionOutOfRange);
  // Rejected events leave nothing in the log.
  EXPECT_EQ(store.get(id).stage, Stage::AwaitingEmotion1);
}

TEST_F(SessionStoreTest, FullSessionFinalisesTrace) {
  SessionStore store(dir_.path(), options());
  const auto id = store.create(testing::make_profile(1), testing::condition2(), {}).session_id;
  EXPECT_EQ(code_of([&] { store.trace(id); }), ErrorCode::SessionIncomplete);
  for (int j = 0; j < 20; ++j) play_trial(store, id, j % 4 ? Decision::Accept : Decision::Reject);
  const auto s = store.get(id);
  EXPECT_EQ(s.stage, Stage::SessionComplete);
  EXPECT_TRUE(s.complete);
  const auto t = store.trace(id);
  EXPECT_EQ(t.records.size(), 20u);
  EXPECT_EQ(t.final_reward(), 15);
  EXPECT_EQ(t.provenance.participant_kind, "human");
  EXPECT_TRUE(std::filesystem::exists(dir_ / id / (id + ".trace.json")));
  EXPECT_EQ(read_trace(dir_ / id / (id + ".trace.json")), t);
}

TEST_F(SessionStoreTest, ReopenResumesAtRecordedStage) {
  std::string id;
  {
    SessionStore store(dir_.path(), options());
    id = store.create(testing::make_profile(1), testing::condition1(), {}).session_id;
    play_trial(store, id, Decision::Accept);
    store.submit(id, EmotionEvent{1, 1});
    store.submit(id, EmotionEvent{2, 2});
  }
  SessionStore reopened(dir_.path(), options());
  const auto s = reopened.get(id);
  EXPECT_EQ(s.stage, Stage::AwaitingDecision);
  EXPECT_EQ(s.trial, 2);
  EXPECT_EQ(s.trials_completed, 1);
  reopened.submit(id, DecideEvent{Decision::Accept});
  EXPECT_EQ(reopened.list(), std::vector<std::string>{id});
}

TEST_F(SessionStoreTest, TornLogTailIsDiscarded) {
  std::string id;
  {
    SessionStore store(dir_.path(), options());
    id = store.create(testing::make_profile(1), testing::condition1(), {}).session_id;
    store.submit(id, EmotionEvent{1, 1});
  }
  {
    std::ofstream log(dir_ / id / "events.jsonl", std::ios::app);
    log << R"({"type":"emotion","val)";
  }
  SessionStore reopened(dir_.path(), options());
  EXPECT_EQ(reopened.get(id).stage, Stage::AwaitingEmotion2);
  reopened.submit(id, EmotionEvent{2, 2});
  SessionStore again(dir_.path(), options());
  EXPECT_EQ(again.get(id).stage, Stage::AwaitingDecision);
}

TEST_F(SessionStoreTest, ConcurrentEventsAreSerialised) {
  SessionStoreOptions o = options();
  o.in_flight = InFlightPolicy::Queue;
  SessionStore store(dir_.path(), o);
  const auto id = store.create(testing::make_profile(1), testing::condition1(), {}).session_id;
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      try {
        store.submit(id, EmotionEvent{0, 0});
        ++ok;
      } catch (const Error&) {
      }
    });
  }
  for (auto& t : threads) t.join();
  // Two emotions fit before the decision; the rest must fail cleanly.
  EXPECT_EQ(ok.load(), 2);
  EXPECT_EQ(store.get(id).stage, Stage::AwaitingDecision);
}

TEST(SessionEventJsonTest, RoundTrip) {
  for (const SessionEvent& ev : {SessionEvent{EmotionEvent{3, -4}},
                                 SessionEvent{DecideEvent{Decision::Reject}},
                                 SessionEvent{ForfeitEvent{}}}) {
    const auto back = event_from_json(event_to_json(ev));
    EXPECT_EQ(back.index(), ev.index());
  }
  EXPECT_THROW(event_from_json(nlohmann::json{{"type", "dance"}}), Error);
}

}  // namespace
}  // namespace fms
