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

#include "fms/http_service.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "test_util.hpp"

namespace fms {
namespace {

using nlohmann::json;

class HttpServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig cfg;
    cfg.store_root = dir_.path();
    cfg.conditions.emplace("condition1", testing::condition1());
    cfg.conditions.emplace("condition2", testing::condition2());
    cfg.profiles.emplace(1, testing::make_profile(1, Gender::Male, 28));
    service_ = std::make_unique<HttpService>(cfg);
    port_ = service_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { service_->stop(); }

  std::pair<int, json> post(const std::string& path, const json& body) {
    auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) return {0, {}};
    return {res->status, res->body.empty() ? json{} : json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body)};
  }

  std::string create() {
    auto [status, body] = post("/sessions", {{"profile_id", 1}, {"condition", "Condition1"}});
    EXPECT_EQ(status, 201) << body.dump();
    return body.value("session_id", "");
  }

  testing::TempDir dir_;
  std::unique_ptr<HttpService> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(HttpServiceTest, CreateAndGet) {
  const auto id = create();
  auto [status, body] = get("/sessions/" + id);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["stage"], "awaiting_emotion1");
  EXPECT_EQ(body["allocation"]["p1_keep"], "2.0");
  EXPECT_EQ(body["allocation"]["p2_get"], "1.0");
  EXPECT_EQ(body["trials_total"], 20);
  EXPECT_NE(create(), id);
}

TEST_F(HttpServiceTest, InlineProfileAndCsv) {
  const auto csv = format_condition_csv(testing::condition2());
  auto [status, body] = post("/sessions", {{"profile", to_json(testing::make_profile(9))},
                                           {"condition_csv", csv},
                                           {"penalty_mode", "deduct"}});
  EXPECT_EQ(status, 201) << body.dump();
  EXPECT_EQ(body["penalty_mode"], "deduct:3.0");
}

TEST_F(HttpServiceTest, BadCreateRequests) {
  auto [s1, b1] = post("/sessions", {{"profile_id", 1}, {"condition_csv", "trial,p1_keep\n"}});
  EXPECT_EQ(s1, 422);
  EXPECT_EQ(b1["error"]["code"], "InvalidCondition");
  auto [s2, b2] = post("/sessions", {{"profile_id", 77}, {"condition", "condition1"}});
  EXPECT_EQ(b2["error"]["code"], "InvalidProfile");
  auto res = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpServiceTest, FullSessionOverHttp) {
  const auto id = create();
  const std::string base = "/sessions/" + id;
  for (int j = 1; j <= 20; ++j) {
    EXPECT_EQ(post(base + "/emotions", {{"valence", 10}, {"arousal", 20}}).first, 200);
    EXPECT_EQ(post(base + "/emotions", {{"valence", -5}, {"arousal", 30}}).first, 200);
    auto [ds, db] = post(base + "/decision", {{"decision", j % 2 ? "accept" : "reject"}});
    EXPECT_EQ(ds, 200);
    EXPECT_EQ(db["stage"], "awaiting_emotion3");
    auto [es, eb] = post(base + "/emotions", {{"valence", 0}, {"arousal", 0}});
    EXPECT_EQ(es, 200);
    EXPECT_EQ(eb["last_trial"]["trial"], j);
    EXPECT_EQ(eb["last_trial"]["payoff"]["p3_reward"], j % 2);
  }
  auto [status, trace] = get(base + "/trace");
  EXPECT_EQ(status, 200);
  const auto t = trace_from_json(trace);
  EXPECT_EQ(t.records.size(), 20u);
  EXPECT_EQ(t.final_reward(), 10);
  for (const auto& r : t.records) EXPECT_NE(r.decision, Decision::Missing);
}

TEST_F(HttpServiceTest, ErrorCodes) {
  const auto id = create();
  auto [s1, b1] = post("/sessions/" + id + "/decision", {{"decision", "accept"}});
  EXPECT_EQ(s1, 409);
  EXPECT_EQ(b1["error"]["code"], "StageMismatch");
  auto [s2, b2] = get("/sessions/unknown123");
  EXPECT_EQ(s2, 404);
  EXPECT_EQ(b2["error"]["code"], "UnknownSession");
  auto [s3, b3] = post("/sessions/" + id + "/emotions", {{"valence", 150}, {"arousal", 0}});
  EXPECT_EQ(s3, 422);
  EXPECT_EQ(b3["error"]["code"], "EmotionOutOfRange");
  auto [s4, b4] = get("/sessions/" + id + "/trace");
  EXPECT_EQ(s4, 409);
  EXPECT_EQ(b4["error"]["code"], "SessionIncomplete");
  auto [s5, b5] = post("/sessions/" + id + "/emotions", {{"valence", "high"}});
  EXPECT_EQ(s5, 400);
}

TEST_F(HttpServiceTest, CorsPreflight) {
  auto res = client_->Options("/sessions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(HttpStatusTest, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::UnknownSession), 404);
  EXPECT_EQ(http_status(ErrorCode::StageMismatch), 409);
  EXPECT_EQ(http_status(ErrorCode::SessionAlreadyComplete), 409);
  EXPECT_EQ(http_status(ErrorCode::BadRequest), 400);
  EXPECT_EQ(http_status(ErrorCode::InvalidProfile), 422);
}

}  // namespace
}  // namespace fms
