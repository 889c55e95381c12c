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

#include "fms/protocol.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms {

ConditionId ConditionId::parse(std::string_view name) {
  const auto lower = detail::to_lower(detail::trim(name));
  if (lower == "condition1") return condition1();
  if (lower == "condition2") return condition2();
  return custom(std::string(detail::trim(name)));
}

std::string ConditionId::name() const {
  switch (kind_) {
    case Kind::Condition1:
      return "Condition1";
    case Kind::Condition2:
      return "Condition2";
    case Kind::Custom:
      return label_;
  }
  return label_;
}

const Allocation& AllocationSchedule::at(int trial) const {
  if (trial < 1 || trial > static_cast<int>(allocations_.size())) {
    throw std::out_of_range("trial index " + std::to_string(trial) + " outside schedule");
  }
  return allocations_[static_cast<std::size_t>(trial - 1)];
}

std::vector<std::pair<Money, Money>> AllocationSchedule::rows() const {
  std::vector<std::pair<Money, Money>> out;
  out.reserve(allocations_.size());
  for (const auto& a : allocations_) out.emplace_back(a.p1_keep, a.p2_get);
  return out;
}

AllocationSchedule build_schedule(const std::vector<std::pair<Money, Money>>& rows,
                                  ConditionId condition) {
  if (rows.size() != kTrialsPerSession) {
    throw Error(ErrorCode::WrongLength, "schedule needs " + std::to_string(kTrialsPerSession) +
                                            " rows, got " + std::to_string(rows.size()));
  }
  std::vector<Allocation> allocations;
  allocations.reserve(rows.size());
  int trial = 1;
  for (const auto& [keep, give] : rows) {
    const std::string where = "trial " + std::to_string(trial);
    if (keep + give != kPot) {
      throw Error(ErrorCode::SumViolation,
                  where + ": " + keep.str() + " + " + give.str() + " != " + kPot.str());
    }
    if (give < kMinUnfairGive || give > kMaxUnfairGive || keep < Money{}) {
      throw Error(ErrorCode::UnfairnessRange, where + ": player2 share " + give.str() +
                                                  " outside [" + kMinUnfairGive.str() + ", " +
                                                  kMaxUnfairGive.str() + "]");
    }
    allocations.push_back({trial, keep, give});
    ++trial;
  }
  return AllocationSchedule(std::move(condition), std::move(allocations));
}

std::vector<std::tuple<int, Money, Money>> anchor_rows(ConditionId::Kind kind) {
  auto row = [](int trial, int keep_tenths, int give_tenths) {
    return std::tuple{trial, Money::tenths(keep_tenths), Money::tenths(give_tenths)};
  };
  switch (kind) {
    case ConditionId::Kind::Condition1:
      return {row(1, 20, 10), row(2, 20, 10), row(3, 21, 9), row(19, 20, 10), row(20, 20, 10)};
    case ConditionId::Kind::Condition2:
      return {row(1, 23, 7), row(2, 24, 6), row(3, 25, 5), row(19, 26, 4), row(20, 25, 5)};
    case ConditionId::Kind::Custom:
      break;
  }
  return {};
}

AllocationSchedule parse_condition_csv(std::string_view text, ConditionId condition) {
  std::vector<std::string_view> lines;
  for (auto line : detail::split(text, '\n')) {
    line = detail::trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty() || detail::to_lower(lines.front()) != "trial,p1_keep,p2_get") {
    throw Error(ErrorCode::InvalidCondition, "missing header 'trial,p1_keep,p2_get'");
  }
  std::vector<std::pair<Money, Money>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cols = detail::split(lines[i], ',');
    const std::string where = "line " + std::to_string(i + 1);
    if (cols.size() != 3) throw Error(ErrorCode::InvalidCondition, where + ": expected 3 columns");
    const auto trial_text = std::string(detail::trim(cols[0]));
    if (trial_text != std::to_string(i)) {
      throw Error(ErrorCode::InvalidCondition,
                  where + ": expected trial " + std::to_string(i) + ", got '" + trial_text + "'");
    }
    try {
      rows.emplace_back(Money::parse(cols[1]), Money::parse(cols[2]));
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorCode::InvalidCondition, where + ": " + e.what());
    }
  }
  auto schedule = build_schedule(rows, condition);
  for (const auto& [trial, keep, give] : anchor_rows(condition.kind())) {
    const auto& a = schedule.at(trial);
    if (a.p1_keep != keep || a.p2_get != give) {
      throw Error(ErrorCode::InvalidCondition,
                  condition.name() + " trial " + std::to_string(trial) + " must be (" +
                      keep.str() + ", " + give.str() + ")");
    }
  }
  return schedule;
}

AllocationSchedule load_condition_file(const std::filesystem::path& path, ConditionId condition) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidCondition, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_condition_csv(buf.str(), std::move(condition));
}

std::string format_condition_csv(const AllocationSchedule& schedule) {
  std::string out = "trial,p1_keep,p2_get\n";
  for (const auto& a : schedule.allocations()) {
    out += std::to_string(a.trial_index) + "," + a.p1_keep.str() + "," + a.p2_get.str() + "\n";
  }
  return out;
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Accept:
      return "accept";
    case Decision::Reject:
      return "reject";
    case Decision::Missing:
      return "missing";
  }
  return "missing";
}

std::optional<Decision> decision_from_string(std::string_view s) {
  const auto lower = detail::to_lower(detail::trim(s));
  if (lower == "accept") return Decision::Accept;
  if (lower == "reject") return Decision::Reject;
  if (lower == "missing") return Decision::Missing;
  return std::nullopt;
}

PenaltyMode PenaltyMode::parse(std::string_view s) {
  const auto lower = detail::to_lower(detail::trim(s));
  if (lower == "zero_out" || lower == "zeroout") return zero_out();
  if (lower == "deduct") return deduct();
  if (lower.rfind("deduct:", 0) == 0) {
    try {
      return deduct(Money::parse(std::string_view(lower).substr(7)));
    } catch (const std::invalid_argument&) {
    }
  }
  throw Error(ErrorCode::BadConfig, "unknown penalty mode '" + std::string(s) + "'");
}

std::string PenaltyMode::str() const {
  return kind == Kind::ZeroOut ? "zero_out" : "deduct:" + deduction.str();
}

PayoffOutcome apply_decision(const Allocation& allocation, Decision decision, PenaltyMode mode) {
  switch (decision) {
    case Decision::Accept:
      return {allocation.p1_keep, allocation.p2_get, 1};
    case Decision::Reject: {
      const Money p1 = mode.kind == PenaltyMode::Kind::ZeroOut
                           ? Money{}
                           : allocation.p1_keep - mode.deduction;
      return {p1, allocation.p2_get, 0};
    }
    case Decision::Missing:
      break;
  }
  throw Error(ErrorCode::MissingDecision, "payoff requires accept or reject");
}

std::string_view to_string(EmotionPhase p) {
  switch (p) {
    case EmotionPhase::PostAllocation:
      return "post_allocation";
    case EmotionPhase::PreDecision:
      return "pre_decision";
    case EmotionPhase::PostDecision:
      return "post_decision";
  }
  return "post_allocation";
}

EmotionReport validate_emotion(int valence, int arousal, EmotionPhase phase) {
  auto in_range = [](int v) { return v >= kEmotionMin && v <= kEmotionMax; };
  if (!in_range(valence) || !in_range(arousal)) {
    throw Error(ErrorCode::EmotionOutOfRange, "(" + std::to_string(valence) + ", " +
                                                  std::to_string(arousal) +
                                                  ") outside [-100, 100]");
  }
  return {phase, valence, arousal};
}

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 6> kStageNames{{
    {Stage::AwaitingEmotion1, "awaiting_emotion1"},
    {Stage::AwaitingEmotion2, "awaiting_emotion2"},
    {Stage::AwaitingDecision, "awaiting_decision"},
    {Stage::AwaitingEmotion3, "awaiting_emotion3"},
    {Stage::TrialComplete, "trial_complete"},
    {Stage::SessionComplete, "session_complete"},
}};

}  // namespace

std::string_view to_string(Stage s) {
  for (const auto& [stage, name] : kStageNames) {
    if (stage == s) return name;
  }
  return "unknown";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (const auto& [stage, name] : kStageNames) {
    if (name == s) return stage;
  }
  return std::nullopt;
}

SessionState::SessionState(std::string session_id, std::int64_t profile_id,
                           AllocationSchedule schedule, PenaltyMode penalty_mode)
    : session_id_(std::move(session_id)),
      profile_id_(profile_id),
      schedule_(std::move(schedule)),
      penalty_mode_(penalty_mode) {}

int SessionState::next_trial() const {
  switch (stage_) {
    case Stage::SessionComplete:
      return 0;
    case Stage::TrialComplete:
      return current_trial_ + 1;
    default:
      return current_trial_;
  }
}

int SessionState::cumulative_reward() const {
  int total = 0;
  for (const auto& r : records_) total += r.reward;
  return total;
}

namespace {

[[noreturn]] void mismatch(const SessionState& s, std::string_view event) {
  throw Error(ErrorCode::StageMismatch,
              std::string(event) + " not allowed at " + std::string(to_string(s.stage())));
}

}  // namespace

SessionState advance(const SessionState& state, const SessionEvent& event) {
  if (state.stage_ == Stage::SessionComplete) {
    throw Error(ErrorCode::SessionAlreadyComplete, "all trials are sealed");
  }
  SessionState next = state;
  if (next.stage_ == Stage::TrialComplete &&
      !std::holds_alternative<DecideEvent>(event)) {
    // The first event of the following trial.
    next.current_trial_ += 1;
    next.stage_ = Stage::AwaitingEmotion1;
  }
  const Allocation& allocation = next.schedule_.at(next.current_trial_);

  auto seal = [&](TrialRecord record) {
    next.records_.push_back(std::move(record));
    next.pending_reports_.clear();
    next.pending_decision_.reset();
    next.stage_ = next.current_trial_ >= kTrialsPerSession ? Stage::SessionComplete
                                                           : Stage::TrialComplete;
  };

  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, EmotionEvent>) {
          EmotionPhase phase;
          switch (next.stage_) {
            case Stage::AwaitingEmotion1:
              phase = EmotionPhase::PostAllocation;
              break;
            case Stage::AwaitingEmotion2:
              phase = EmotionPhase::PreDecision;
              break;
            case Stage::AwaitingEmotion3:
              phase = EmotionPhase::PostDecision;
              break;
            default:
              mismatch(state, "emotion report");
          }
          next.pending_reports_.push_back(validate_emotion(ev.valence, ev.arousal, phase));
          if (phase == EmotionPhase::PostAllocation) {
            next.stage_ = Stage::AwaitingEmotion2;
          } else if (phase == EmotionPhase::PreDecision) {
            next.stage_ = Stage::AwaitingDecision;
          } else {
            const Decision d = *next.pending_decision_;
            TrialRecord record{allocation, next.pending_reports_, d,
                               apply_decision(allocation, d, next.penalty_mode_), 0};
            record.reward = record.payoff.p3_reward;
            seal(std::move(record));
          }
        } else if constexpr (std::is_same_v<T, DecideEvent>) {
          if (next.stage_ != Stage::AwaitingDecision) mismatch(state, "decision");
          if (ev.decision == Decision::Missing) {
            throw Error(ErrorCode::MissingDecision, "a decision must be accept or reject");
          }
          next.pending_decision_ = ev.decision;
          next.stage_ = Stage::AwaitingEmotion3;
        } else {
          if (next.stage_ != Stage::AwaitingEmotion1) mismatch(state, "forfeit");
          // No punishment is enacted on a non-response.
          seal(TrialRecord{allocation, {}, Decision::Missing,
                           PayoffOutcome{allocation.p1_keep, allocation.p2_get, 0}, 0});
        }
      },
      event);
  return next;
}

}  // namespace fms
