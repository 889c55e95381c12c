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

// Game data model for the third-party ultimatum game: allocations, payoffs,
// emotion reports and the per-trial state machine. Everything here is a
// value type; advance() returns a new state and never mutates its input.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "fms/money.hpp"

namespace fms {

inline constexpr int kTrialsPerSession = 20;
inline constexpr Money kMinUnfairGive = Money::tenths(3);   // 0.3 RMB
inline constexpr Money kMaxUnfairGive = Money::tenths(12);  // 1.2 RMB
inline constexpr int kEmotionMin = -100;
inline constexpr int kEmotionMax = 100;

struct Allocation {
  int trial_index = 0;  // 1-based
  Money p1_keep;
  Money p2_get;

  bool operator==(const Allocation&) const = default;
};

class ConditionId {
 public:
  enum class Kind { Condition1, Condition2, Custom };

  static ConditionId condition1() { return ConditionId(Kind::Condition1, {}); }
  static ConditionId condition2() { return ConditionId(Kind::Condition2, {}); }
  static ConditionId custom(std::string label) { return ConditionId(Kind::Custom, std::move(label)); }
  /// "condition1", "condition2" (case-insensitive); anything else is Custom.
  static ConditionId parse(std::string_view name);

  Kind kind() const { return kind_; }
  /// "Condition1", "Condition2" or the custom label.
  std::string name() const;

  bool operator==(const ConditionId&) const = default;

 private:
  ConditionId(Kind k, std::string label) : kind_(k), label_(std::move(label)) {}
  Kind kind_;
  std::string label_;
};

/// A validated 20-trial allocation schedule. Only build_schedule() creates one.
class AllocationSchedule {
 public:
  const ConditionId& condition() const { return condition_; }
  const std::vector<Allocation>& allocations() const { return allocations_; }
  /// trial is 1-based.
  const Allocation& at(int trial) const;
  std::vector<std::pair<Money, Money>> rows() const;

  bool operator==(const AllocationSchedule&) const = default;

 private:
  friend AllocationSchedule build_schedule(const std::vector<std::pair<Money, Money>>&, ConditionId);
  AllocationSchedule(ConditionId c, std::vector<Allocation> a)
      : condition_(std::move(c)), allocations_(std::move(a)) {}

  ConditionId condition_;
  std::vector<Allocation> allocations_;
};

/// Throws Error{WrongLength | SumViolation | UnfairnessRange}.
AllocationSchedule build_schedule(const std::vector<std::pair<Money, Money>>& rows,
                                  ConditionId condition);

/// Reads a `trial,p1_keep,p2_get` file (header required, one fractional digit).
/// Named conditions must agree with the published anchor trials.
/// Throws Error{InvalidCondition} for malformed files, plus build_schedule errors.
AllocationSchedule load_condition_file(const std::filesystem::path& path, ConditionId condition);
AllocationSchedule parse_condition_csv(std::string_view text, ConditionId condition);
std::string format_condition_csv(const AllocationSchedule& schedule);

/// Published (trial, keep, give) rows for the two shipped conditions.
std::vector<std::tuple<int, Money, Money>> anchor_rows(ConditionId::Kind kind);

enum class Decision { Accept, Reject, Missing };

std::string_view to_string(Decision d);
/// "accept" / "reject" / "missing", case-insensitive.
std::optional<Decision> decision_from_string(std::string_view s);

/// Reject penalty applied to Player 1.
struct PenaltyMode {
  enum class Kind { ZeroOut, Deduct };
  Kind kind = Kind::ZeroOut;
  Money deduction = Money::rmb(3);

  static PenaltyMode zero_out() { return {}; }
  static PenaltyMode deduct(Money amount = Money::rmb(3)) { return {Kind::Deduct, amount}; }
  /// "zero_out" | "deduct" | "deduct:2.5"
  static PenaltyMode parse(std::string_view s);
  std::string str() const;

  bool operator==(const PenaltyMode&) const = default;
};

struct PayoffOutcome {
  Money p1_final;
  Money p2_final;
  int p3_reward = 0;

  bool operator==(const PayoffOutcome&) const = default;
};

/// Accept -> (x, z, 1); Reject -> (0 or x - deduction, z, 0).
/// Throws Error{MissingDecision} for Decision::Missing.
PayoffOutcome apply_decision(const Allocation& allocation, Decision decision, PenaltyMode mode);

enum class EmotionPhase { PostAllocation, PreDecision, PostDecision };
std::string_view to_string(EmotionPhase p);

struct EmotionReport {
  EmotionPhase phase = EmotionPhase::PostAllocation;
  int valence = 0;
  int arousal = 0;

  bool operator==(const EmotionReport&) const = default;
};

/// Throws Error{EmotionOutOfRange} unless both coordinates are in [-100, 100].
EmotionReport validate_emotion(int valence, int arousal,
                               EmotionPhase phase = EmotionPhase::PostAllocation);

struct TrialRecord {
  Allocation allocation;
  /// One report per phase in phase order; empty when decision is Missing.
  std::vector<EmotionReport> reports;
  Decision decision = Decision::Missing;
  PayoffOutcome payoff;
  int reward = 0;

  bool operator==(const TrialRecord&) const = default;
};

enum class Stage {
  AwaitingEmotion1,
  AwaitingEmotion2,
  AwaitingDecision,
  AwaitingEmotion3,
  TrialComplete,
  SessionComplete,
};
std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

struct EmotionEvent {
  int valence = 0;
  int arousal = 0;
};
struct DecideEvent {
  Decision decision = Decision::Accept;
};
/// Seals the current trial as Missing with no reports. Only legal at the
/// start of a trial; used by adapters whose participant never answered.
struct ForfeitEvent {};

using SessionEvent = std::variant<EmotionEvent, DecideEvent, ForfeitEvent>;

class SessionState {
 public:
  SessionState(std::string session_id, std::int64_t profile_id, AllocationSchedule schedule,
               PenaltyMode penalty_mode);

  const std::string& session_id() const { return session_id_; }
  std::int64_t profile_id() const { return profile_id_; }
  const AllocationSchedule& schedule() const { return schedule_; }
  PenaltyMode penalty_mode() const { return penalty_mode_; }
  Stage stage() const { return stage_; }
  const std::vector<TrialRecord>& records() const { return records_; }

  /// Trial the last event applied to (1 before any event).
  int current_trial() const { return current_trial_; }
  /// Trial the next event will apply to; 0 once the session is complete.
  int next_trial() const;
  /// True when the next event starts a fresh trial.
  bool at_trial_start() const {
    return stage_ == Stage::AwaitingEmotion1 || stage_ == Stage::TrialComplete;
  }
  /// Emotion reports collected for the in-progress trial.
  const std::vector<EmotionReport>& pending_reports() const { return pending_reports_; }
  std::optional<Decision> pending_decision() const { return pending_decision_; }
  /// Sum of sealed rewards, R_J for a complete session.
  int cumulative_reward() const;

  friend SessionState advance(const SessionState& state, const SessionEvent& event);

  bool operator==(const SessionState&) const = default;

 private:
  std::string session_id_;
  std::int64_t profile_id_;
  AllocationSchedule schedule_;
  PenaltyMode penalty_mode_;
  int current_trial_ = 1;
  Stage stage_ = Stage::AwaitingEmotion1;
  std::vector<TrialRecord> records_;
  std::vector<EmotionReport> pending_reports_;
  std::optional<Decision> pending_decision_;
};

/// Applies one event. Emotion events are accepted at AwaitingEmotion1/2/3
/// (and at TrialComplete, where they open the next trial); Decide at
/// AwaitingDecision; Forfeit at the start of a trial.
/// Throws Error{StageMismatch | SessionAlreadyComplete | EmotionOutOfRange | MissingDecision}.
SessionState advance(const SessionState& state, const SessionEvent& event);

}  // namespace fms
