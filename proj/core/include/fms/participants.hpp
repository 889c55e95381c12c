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

// Participant-side vocabulary: personas, prompt rendering, response parsing
// and scripted policies. The LLM chat client lives in llm_agent.hpp.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fms/protocol.hpp"

namespace fms {

inline constexpr std::size_t kAqItemCount = 28;
inline constexpr std::size_t kSdsItemCount = 20;

extern const std::array<std::string_view, kAqItemCount> kAqItems;
extern const std::array<std::string_view, kSdsItemCount> kSdsItems;

enum class Gender { Male, Female };
std::string_view to_string(Gender g);
std::optional<Gender> gender_from_string(std::string_view s);

class Profile {
 public:
  /// Answers are 1..4, listed in questionnaire item order.
  /// Throws Error{InvalidProfile} on wrong counts or out-of-range answers.
  static Profile create(std::int64_t id, int age, Gender gender, std::vector<int> aq_answers,
                        std::vector<int> sds_answers);

  std::int64_t id() const { return id_; }
  int age() const { return age_; }
  Gender gender() const { return gender_; }
  const std::vector<int>& aq_answers() const { return aq_; }
  const std::vector<int>& sds_answers() const { return sds_; }

  /// Plain sums of the 4-point answers.
  int aq_total() const;
  int sds_total() const;

  bool operator==(const Profile&) const = default;

 private:
  Profile(std::int64_t id, int age, Gender g, std::vector<int> aq, std::vector<int> sds)
      : id_(id), age_(age), gender_(g), aq_(std::move(aq)), sds_(std::move(sds)) {}

  std::int64_t id_;
  int age_;
  Gender gender_;
  std::vector<int> aq_;
  std::vector<int> sds_;
};

std::string_view aq_answer_label(int answer);
std::string_view sds_answer_label(int answer);

std::string render_persona(const Profile& profile);

/// Game rules shown once per session. The consequence of rejecting depends
/// on the penalty mode so the participant sees the rule that is applied.
std::string render_system_prompt(PenaltyMode mode);

/// "1st", "2nd", "3rd", "4th", ..., "11th", "21st".
std::string ordinal(int n);

/// Per-trial prompt with the mandatory answer template. The session must be
/// at the start of `trial` (AwaitingEmotion1 or TrialComplete of trial-1).
/// Throws std::invalid_argument on a precondition violation.
std::string render_trial_prompt(const SessionState& session, int trial);

/// Reminder appended when a reply does not follow the template.
std::string_view format_reminder();

struct ParsedTurn {
  EmotionReport post_allocation;
  EmotionReport pre_decision;
  Decision decision = Decision::Accept;
  EmotionReport post_decision;

  bool operator==(const ParsedTurn&) const = default;
};

/// Extracts the three emotion pairs and the decision from a free-text reply
/// that follows the answer template. Labels are matched case-insensitively,
/// surrounding prose is ignored and the first occurrence per section wins.
/// Throws Error{MissingField | UnparsableNumber | EmotionOutOfRange | AmbiguousDecision}.
ParsedTurn parse_response(std::string_view text);

/// Fills the answer template with a turn; parse_response inverts it.
std::string render_response(const ParsedTurn& turn);

/// Scripted participant used for tests, fixtures and dry runs.
struct ScriptedPolicy {
  enum class Kind { AlwaysAccept, AlwaysReject, UnfairnessThreshold, Stochastic };

  Kind kind = Kind::AlwaysAccept;
  double threshold = 0.5;       // UnfairnessThreshold
  double reject_prob = 0.5;     // Stochastic
  std::uint64_t seed = 0;       // Stochastic
  std::array<int, 2> emotion{0, 0};  // emitted for all three reports

  static ScriptedPolicy always_accept() { return {Kind::AlwaysAccept}; }
  static ScriptedPolicy always_reject() { return {Kind::AlwaysReject}; }
  static ScriptedPolicy unfairness_threshold(double t);
  static ScriptedPolicy stochastic(double p, std::uint64_t seed);

  /// "always_accept" | "always_reject" | "threshold:<t>" | "stochastic:<p>:<seed>"
  static ScriptedPolicy parse(std::string_view spec);
  std::string str() const;
};

/// Deterministic in (policy, allocation.trial_index); safe to call out of order.
ParsedTurn scripted_turn(const ScriptedPolicy& policy, const Allocation& allocation);

}  // namespace fms
