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

// Offline chat endpoint for dry runs and tests.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>

#include "fms/llm_agent.hpp"

namespace fms {

struct MockChatConfig {
  std::uint64_t seed = 0;
  /// Probability that a given (agent, trial, attempt) gets an off-template reply.
  double garbage_rate = 0.05;
  /// (agent id, trial) pairs whose every attempt is garbage.
  std::set<std::pair<std::int64_t, int>> always_garbage;
  /// Rejection probability at the fairest (z = 1.2) and least fair (z = 0.3)
  /// offer; linear in between.
  double reject_prob_fair = 0.1;
  double reject_prob_unfair = 0.8;
};

/// Deterministic stand-in for a chat model. Each reply depends only on the
/// seed, the agent id and trial found in the last trial prompt, and the
/// attempt number (1 + reminders sent since that prompt), so reruns and
/// resumed runs see identical answers regardless of scheduling.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(MockChatConfig config) : config_(std::move(config)) {}

  std::string complete(const ChatRequest& request) override;

  /// Whether the given attempt receives garbage.
  bool is_garbage(std::int64_t agent_id, int trial, int attempt) const;
  /// True when all `max_attempts` attempts fail, i.e. the trial ends Missing.
  bool trial_missing(std::int64_t agent_id, int trial, int max_attempts) const;

  std::uint64_t calls() const { return calls_.load(); }

 private:
  MockChatConfig config_;
  std::atomic<std::uint64_t> calls_{0};
};

/// "mock://?seed=7&garbage=0.05" -> MockChatConfig. Throws Error{BadConfig}.
MockChatConfig parse_mock_url(std::string_view url);

/// A MockChatClient for mock:// urls, an HttpChatClient otherwise.
std::shared_ptr<ChatClient> make_chat_client(const EndpointConfig& endpoint);

}  // namespace fms
