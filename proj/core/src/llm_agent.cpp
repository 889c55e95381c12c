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

#include "fms/llm_agent.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "fms/error.hpp"

namespace fms {

using nlohmann::json;

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::BadConfig, "endpoint url needs a scheme: " + config_.url);
  }
  const auto path_start = config_.url.find('/', scheme_end + 3);
  origin_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }

  httplib::Client cli(origin_);
  cli.set_connection_timeout(config_.timeout_seconds);
  cli.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::TransportError,
                "request to " + origin_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " +
                                          std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(res->status));
  }
  try {
    const auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TransportError, std::string("malformed completion: ") + e.what());
  }
}

ThrottledChatClient::ThrottledChatClient(std::shared_ptr<ChatClient> inner, int max_concurrent,
                                         std::chrono::nanoseconds min_interval)
    : inner_(std::move(inner)),
      max_concurrent_(std::max(1, max_concurrent)),
      min_interval_(min_interval) {}

std::string ThrottledChatClient::complete(const ChatRequest& request) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_concurrent_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
    const auto now = std::chrono::steady_clock::now();
    const auto start = std::max(now, next_start_);
    next_start_ = start + min_interval_;
    if (start > now) {
      lock.unlock();
      std::this_thread::sleep_until(start);
    }
  }
  struct Release {
    ThrottledChatClient* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request);
}

int ThrottledChatClient::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::vector<ChatMessage> initial_history(const std::string& persona_text,
                                         const std::string& system_prompt) {
  return {ChatMessage{"system", persona_text + "\n" + system_prompt}};
}

LlmTurnResult llm_turn(ChatClient& client, const EndpointConfig& endpoint,
                       const std::vector<ChatMessage>& history, const std::string& trial_prompt,
                       const RetryPolicy& retry, int trial, const Sleeper& sleep) {
  LlmTurnResult result;
  std::vector<ChatMessage> messages = history;
  messages.push_back({"user", trial_prompt});
  const int attempts = std::max(1, retry.max_attempts);

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1 && !retry.backoff.empty()) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 2),
                                             retry.backoff.size() - 1);
      if (sleep) {
        sleep(retry.backoff[idx]);
      } else {
        std::this_thread::sleep_for(retry.backoff[idx]);
      }
    }
    result.attempts = attempt;
    Exchange ex{trial, attempt, messages, std::nullopt, std::nullopt};
    std::string reply;
    try {
      reply = client.complete(ChatRequest{endpoint.model, endpoint.temperature, messages});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AuthError) throw;
      ex.error = e.what();
      result.exchanges.push_back(std::move(ex));
      continue;
    }
    ex.response = reply;
    result.reply = reply;
    try {
      result.turn = parse_response(reply);
      result.exchanges.push_back(std::move(ex));
      return result;
    } catch (const Error& e) {
      ex.error = e.what();
      result.exchanges.push_back(std::move(ex));
      messages.push_back({"assistant", reply});
      messages.push_back({"user", std::string(format_reminder())});
    }
  }
  return result;
}

std::optional<ParsedTurn> ScriptedParticipant::play(const SessionState& state, int trial) {
  return scripted_turn(policy_, state.schedule().at(trial));
}

LlmParticipant::LlmParticipant(std::shared_ptr<ChatClient> client, EndpointConfig endpoint,
                               RetryPolicy retry, std::vector<ChatMessage> history,
                               ExchangeSink sink, Sleeper sleep)
    : client_(std::move(client)),
      endpoint_(std::move(endpoint)),
      retry_(std::move(retry)),
      history_(std::move(history)),
      sink_(std::move(sink)),
      sleep_(std::move(sleep)) {}

std::optional<ParsedTurn> LlmParticipant::play(const SessionState& state, int trial) {
  const std::string prompt = render_trial_prompt(state, trial);
  auto result = llm_turn(*client_, endpoint_, history_, prompt, retry_, trial, sleep_);
  last_attempts_ = result.attempts;
  if (sink_) {
    for (const auto& ex : result.exchanges) sink_(ex);
  }
  remember(prompt, result.reply);
  return result.turn;
}

void LlmParticipant::remember(const std::string& trial_prompt, const std::string& reply) {
  history_.push_back({"user", trial_prompt});
  if (!reply.empty()) history_.push_back({"assistant", reply});
}

}  // namespace fms
