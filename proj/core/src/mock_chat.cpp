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

#include "fms/mock_chat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::int64_t id, int trial, int attempt, std::uint64_t salt) {
  std::uint64_t h = splitmix(seed ^ 0x6d6f636bULL);
  h = splitmix(h ^ static_cast<std::uint64_t>(id));
  h = splitmix(h ^ static_cast<std::uint64_t>(trial));
  h = splitmix(h ^ static_cast<std::uint64_t>(attempt));
  return splitmix(h ^ salt);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

struct PromptInfo {
  std::int64_t id = 0;
  int trial = 0;
  double give = 0.0;
  int attempt = 1;
};

double number_after(std::string_view text, std::string_view marker) {
  const auto pos = text.find(marker);
  if (pos == std::string_view::npos) return 0.0;
  return std::strtod(std::string(text.substr(pos + marker.size(), 16)).c_str(), nullptr);
}

std::optional<PromptInfo> find_prompt(const std::vector<ChatMessage>& messages) {
  static constexpr std::string_view kRound = ": Round_";
  int reminders = 0;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role != "user") continue;
    const auto pos = it->content.find(kRound);
    if (pos == std::string::npos) {
      ++reminders;
      continue;
    }
    PromptInfo info;
    const auto& c = it->content;
    std::from_chars(c.data(), c.data() + pos, info.id);
    const char* t = c.data() + pos + kRound.size();
    std::from_chars(t, c.data() + c.size(), info.trial);
    info.give = number_after(c, "allocated to player2 ");
    info.attempt = reminders + 1;
    return info;
  }
  return std::nullopt;
}

int score(double u) { return static_cast<int>(std::lround(-100.0 + 200.0 * std::clamp(u, 0.0, 1.0))); }

}  // namespace

bool MockChatClient::is_garbage(std::int64_t agent_id, int trial, int attempt) const {
  if (config_.always_garbage.count({agent_id, trial})) return true;
  return unit(mix(config_.seed, agent_id, trial, attempt, 1)) < config_.garbage_rate;
}

bool MockChatClient::trial_missing(std::int64_t agent_id, int trial, int max_attempts) const {
  for (int a = 1; a <= std::max(1, max_attempts); ++a) {
    if (!is_garbage(agent_id, trial, a)) return false;
  }
  return true;
}

std::string MockChatClient::complete(const ChatRequest& request) {
  ++calls_;
  const auto info = find_prompt(request.messages);
  if (!info) return "Hello! I am ready to play. Please send the first round.";

  const auto h = [&](std::uint64_t salt) { return mix(config_.seed, info->id, info->trial, info->attempt, salt); };
  if (is_garbage(info->id, info->trial, info->attempt)) {
    if (h(2) & 1) return "I'm sorry, I would prefer not to rate my feelings for this round.";
    // A reply that stops before the decision section.
    auto text = render_response(ParsedTurn{});
    return text.substr(0, text.find("- After rendering"));
  }

  // Attempt number is excluded so a retried trial gets the same answer.
  const auto k = [&](std::uint64_t salt) { return unit(mix(config_.seed, info->id, info->trial, 0, salt)); };
  const double fairness = std::clamp((info->give - 0.3) / 0.9, 0.0, 1.0);
  const double p_reject =
      config_.reject_prob_unfair + (config_.reject_prob_fair - config_.reject_prob_unfair) * fairness;
  const bool reject = k(3) < p_reject;

  ParsedTurn turn;
  const double mood = 0.25 + 0.5 * fairness;  // fairer offers feel better
  turn.post_allocation = {EmotionPhase::PostAllocation, score(mood + 0.4 * (k(4) - 0.5)), score(k(5))};
  turn.pre_decision = {EmotionPhase::PreDecision, score(mood + 0.4 * (k(6) - 0.5)), score(k(7))};
  turn.decision = reject ? Decision::Reject : Decision::Accept;
  turn.post_decision = {EmotionPhase::PostDecision, score(mood + 0.4 * (k(8) - 0.5)), score(k(9))};
  return "Here is my response for this round.\n\n" + render_response(turn);
}

MockChatConfig parse_mock_url(std::string_view url) {
  if (url.substr(0, 7) != "mock://") throw Error(ErrorCode::BadConfig, "not a mock url");
  MockChatConfig cfg;
  const auto q = url.find('?');
  if (q == std::string_view::npos) return cfg;
  for (auto kv : detail::split(url.substr(q + 1), '&')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    const auto key = kv.substr(0, eq);
    const std::string value(eq == std::string_view::npos ? "" : kv.substr(eq + 1));
    char* end = nullptr;
    if (key == "seed") {
      cfg.seed = std::strtoull(value.c_str(), &end, 10);
    } else if (key == "garbage") {
      cfg.garbage_rate = std::strtod(value.c_str(), &end);
    } else if (key == "reject_fair") {
      cfg.reject_prob_fair = std::strtod(value.c_str(), &end);
    } else if (key == "reject_unfair") {
      cfg.reject_prob_unfair = std::strtod(value.c_str(), &end);
    } else {
      throw Error(ErrorCode::BadConfig, "unknown mock parameter '" + std::string(key) + "'");
    }
    if (value.empty() || end != value.c_str() + value.size()) {
      throw Error(ErrorCode::BadConfig, "bad value for mock parameter '" + std::string(key) + "'");
    }
  }
  return cfg;
}

std::shared_ptr<ChatClient> make_chat_client(const EndpointConfig& endpoint) {
  if (endpoint.url.rfind("mock://", 0) == 0) {
    return std::make_shared<MockChatClient>(parse_mock_url(endpoint.url));
  }
  return std::make_shared<HttpChatClient>(endpoint);
}

}  // namespace fms
