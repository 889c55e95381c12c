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

#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fms/participants.hpp"

namespace fms {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  std::vector<ChatMessage> messages;
};

/// Message-list in, single completion out. Implementations throw
/// Error{TransportError} for retryable failures and Error{AuthError} for
/// credential problems.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct EndpointConfig {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 1.0;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;
  int max_concurrent = 4;
  /// Minimum spacing between request starts on this endpoint.
  double min_interval_seconds = 0.0;
};

/// OpenAI-compatible chat-completions client. The bearer token is read from
/// the environment variable named in the config at construction time.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
};

/// Bounds outstanding requests and spaces request starts for one endpoint.
class ThrottledChatClient : public ChatClient {
 public:
  ThrottledChatClient(std::shared_ptr<ChatClient> inner, int max_concurrent,
                      std::chrono::nanoseconds min_interval);
  std::string complete(const ChatRequest& request) override;

  int peak_in_flight() const;

 private:
  std::shared_ptr<ChatClient> inner_;
  int max_concurrent_;
  std::chrono::nanoseconds min_interval_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

struct RetryPolicy {
  int max_attempts = 3;
  /// Wait before attempt k+2 is backoff[min(k, size-1)]; empty means no wait.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500),
                                                 std::chrono::milliseconds(2000)};
};

/// One request/response pair, persisted verbatim for audit.
struct Exchange {
  int trial = 0;
  int attempt = 0;
  std::vector<ChatMessage> request;
  std::optional<std::string> response;
  std::optional<std::string> error;
};

struct LlmTurnResult {
  std::optional<ParsedTurn> turn;  // nullopt: Missing
  int attempts = 0;
  /// Last completion text received, empty if none arrived.
  std::string reply;
  std::vector<Exchange> exchanges;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Conversation opening for one agent: persona followed by the game rules.
std::vector<ChatMessage> initial_history(const std::string& persona_text,
                                         const std::string& system_prompt);

/// Sends history + trial prompt, parses the reply and retries with a format
/// reminder on parse failure or with the same messages on transport failure.
/// Returns a Missing turn once attempts are exhausted. AuthError propagates.
LlmTurnResult llm_turn(ChatClient& client, const EndpointConfig& endpoint,
                       const std::vector<ChatMessage>& history, const std::string& trial_prompt,
                       const RetryPolicy& retry, int trial, const Sleeper& sleep = {});

/// A participant produces one turn per trial; nullopt is a Missing trial.
class Participant {
 public:
  virtual ~Participant() = default;
  virtual std::optional<ParsedTurn> play(const SessionState& state, int trial) = 0;
};

class ScriptedParticipant : public Participant {
 public:
  explicit ScriptedParticipant(ScriptedPolicy policy) : policy_(policy) {}
  std::optional<ParsedTurn> play(const SessionState& state, int trial) override;

 private:
  ScriptedPolicy policy_;
};

/// LLM-backed agent with full conversation replay as its memory.
class LlmParticipant : public Participant {
 public:
  using ExchangeSink = std::function<void(const Exchange&)>;

  LlmParticipant(std::shared_ptr<ChatClient> client, EndpointConfig endpoint, RetryPolicy retry,
                 std::vector<ChatMessage> history, ExchangeSink sink = {}, Sleeper sleep = {});

  std::optional<ParsedTurn> play(const SessionState& state, int trial) override;

  const std::vector<ChatMessage>& history() const { return history_; }
  int last_attempts() const { return last_attempts_; }

  /// Appends a finished trial to memory, used when resuming from a log.
  void remember(const std::string& trial_prompt, const std::string& reply);

 private:
  std::shared_ptr<ChatClient> client_;
  EndpointConfig endpoint_;
  RetryPolicy retry_;
  std::vector<ChatMessage> history_;
  ExchangeSink sink_;
  Sleeper sleep_;
  int last_attempts_ = 0;
};

}  // namespace fms
