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

// Durable live sessions. Each session directory holds
//
//   session.json   creation record (profile, schedule, penalty, provenance)
//   events.jsonl   append-only event log, one event per line
//   snapshot.json  materialised public state after the last event
//   <id>.trace.json  written once the 20th trial is sealed
//
// The event log is the source of truth; the snapshot is a convenience for
// readers. A torn final line (crash mid-append) is ignored on replay.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fms/participants.hpp"
#include "fms/protocol.hpp"
#include "fms/trace.hpp"

namespace fms {

/// What a participant may see: no cumulative totals mid-session.
struct PublicState {
  std::string session_id;
  std::int64_t profile_id = 0;
  std::string condition;
  PenaltyMode penalty_mode;
  Stage stage = Stage::AwaitingEmotion1;
  /// Trial the next event applies to; 0 when complete.
  int trial = 1;
  int trials_completed = 0;
  /// Allocation of `trial`; absent when complete.
  std::optional<Allocation> allocation;
  /// Payoff of the trial just sealed, present at TrialComplete / SessionComplete.
  std::optional<TrialRecord> last_trial;
  bool complete = false;
};

PublicState public_state(const SessionState& state);
nlohmann::json to_json(const PublicState& s);

/// A second event arriving while one is being applied to the same session
/// is either rejected with StageMismatch or waits its turn.
enum class InFlightPolicy { Reject, Queue };

struct SessionStoreOptions {
  InFlightPolicy in_flight = InFlightPolicy::Reject;
  std::function<std::string()> clock = iso8601_now;
  /// Session id generator; random 128-bit hex by default.
  std::function<std::string()> new_id;
};

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root, SessionStoreOptions options = {});

  /// Throws Error{InvalidProfile | InvalidCondition} via its inputs' validation.
  PublicState create(const Profile& profile, const AllocationSchedule& schedule,
                     PenaltyMode penalty_mode);

  /// Throws Error{UnknownSession}.
  PublicState get(const std::string& id);

  /// Applies and persists one event.
  /// Throws Error{UnknownSession | StageMismatch | SessionAlreadyComplete |
  /// EmotionOutOfRange | MissingDecision}.
  PublicState submit(const std::string& id, const SessionEvent& event);

  /// Throws Error{UnknownSession | SessionIncomplete}.
  TraceFile trace(const std::string& id);

  /// Ids of all sessions on disk, sorted.
  std::vector<std::string> list() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  struct Entry {
    std::string id;
    Profile profile;
    std::string started_at;
    SessionState state;
    std::size_t events = 0;
    std::mutex mu;  // serialises events on this session
  };

  std::shared_ptr<Entry> entry(const std::string& id);
  std::shared_ptr<Entry> load(const std::string& id);
  std::filesystem::path dir(const std::string& id) const { return root_ / id; }
  void write_snapshot(const Entry& e);
  TraceFile make_trace(const Entry& e, const std::string& finished_at) const;

  std::filesystem::path root_;
  SessionStoreOptions options_;
  std::mutex mu_;  // guards open_ and id generation
  std::map<std::string, std::shared_ptr<Entry>> open_;
};

nlohmann::json event_to_json(const SessionEvent& event);
/// Throws Error{BadRequest}.
SessionEvent event_from_json(const nlohmann::json& j);

}  // namespace fms
