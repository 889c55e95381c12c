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

#include "fms/participants.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fms/belief_model.hpp"
#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms {

const std::array<std::string_view, kAqItemCount> kAqItems{
    "I prefer to do things with others rather than on my own.",
    "I prefer to do things the same way over and over again.",
    "Trying to imagine something, I find it easy to create a picture in my mind.",
    "I frequently get strongly absorbed in one thing.",
    "I usually notice car number plates or similar strings of information.",
    "Reading a story, I can easily imagine what the characters might look like.",
    "I am fascinated by dates.",
    "I can easily keep track of several different people’s conversations.",
    "I find social situations easy.",
    "I would rather go to a library than to a party.",
    "I find making up stories easy.",
    "I find myself drawn more strongly to people than to things.",
    "I am fascinated by numbers.",
    "Reading a story, I find it difficult to work out the character’s intentions.",
    "I find it hard to make new friends.",
    "I notice patterns in things all the time.",
    "It does not upset me if my daily routine is disturbed.",
    "I find it easy to do more than one thing at once.",
    "I enjoy doing things spontaneously.",
    "I find it easy to work out what someone is thinking or feeling.",
    "If there is an interruption, I can switch back very quickly.",
    "I like to collect information about categories of things.",
    "I find it difficult to imagine what it would be like to be someone else.",
    "I enjoy social occasions.",
    "I find it difficult to work same out people’s intentions.",
    "New situations make me anxious.",
    "I enjoy meeting new people.",
    "I find it easy to play games with children that involve pretending.",
};

const std::array<std::string_view, kSdsItemCount> kSdsItems{
    "I feel down-hearted and blue.",
    "Morning is when I feel the best.",
    "I have crying spells or feel like it.",
    "I have trouble sleeping at night.",
    "I eat as much as I used to.",
    "I still enjoy sex.",
    "I notice that I am losing weight.",
    "I have trouble with constipation.",
    "My heart beats faster than usual.",
    "I get tired for no reason.",
    "My mind is as clear as it used to be.",
    "I find it easy to do the things I used to.",
    "I am restless and can’t keep still.",
    "I feel hopeful about the future.",
    "I am more irritable than usual.",
    "I find it easy to make decisions.",
    "I feel that I am useful and needed.",
    "My life is pretty full.",
    "I feel that others would be better off if I were dead.",
    "I still enjoy the things I used to do.",
};

std::string_view to_string(Gender g) { return g == Gender::Male ? "Male" : "Female"; }

std::optional<Gender> gender_from_string(std::string_view s) {
  const auto lower = detail::to_lower(detail::trim(s));
  if (lower == "male" || lower == "m") return Gender::Male;
  if (lower == "female" || lower == "f") return Gender::Female;
  return std::nullopt;
}

Profile Profile::create(std::int64_t id, int age, Gender gender, std::vector<int> aq_answers,
                        std::vector<int> sds_answers) {
  if (aq_answers.size() != kAqItemCount) {
    throw Error(ErrorCode::InvalidProfile, "expected " + std::to_string(kAqItemCount) +
                                               " AQ answers, got " +
                                               std::to_string(aq_answers.size()));
  }
  if (sds_answers.size() != kSdsItemCount) {
    throw Error(ErrorCode::InvalidProfile, "expected " + std::to_string(kSdsItemCount) +
                                               " SDS answers, got " +
                                               std::to_string(sds_answers.size()));
  }
  auto check = [](const std::vector<int>& answers, std::string_view name) {
    for (std::size_t i = 0; i < answers.size(); ++i) {
      if (answers[i] < 1 || answers[i] > 4) {
        throw Error(ErrorCode::InvalidProfile, std::string(name) + " item " +
                                                   std::to_string(i + 1) + " answer " +
                                                   std::to_string(answers[i]) + " not in 1..4");
      }
    }
  };
  check(aq_answers, "AQ");
  check(sds_answers, "SDS");
  if (age < 0 || age > 150) throw Error(ErrorCode::InvalidProfile, "implausible age");
  return Profile(id, age, gender, std::move(aq_answers), std::move(sds_answers));
}

int Profile::aq_total() const {
  int t = 0;
  for (int a : aq_) t += a;
  return t;
}

int Profile::sds_total() const {
  int t = 0;
  for (int a : sds_) t += a;
  return t;
}

std::string_view aq_answer_label(int answer) {
  static constexpr std::array<std::string_view, 4> kLabels{
      "Completely Disagree", "Slightly Disagree", "Slightly Agree", "Completely Agree"};
  return kLabels.at(static_cast<std::size_t>(answer - 1));
}

std::string_view sds_answer_label(int answer) {
  static constexpr std::array<std::string_view, 4> kLabels{"Never or Rarely", "Sometimes",
                                                           "Often", "Always"};
  return kLabels.at(static_cast<std::size_t>(answer - 1));
}

std::string render_persona(const Profile& profile) {
  std::string out;
  out += "{ID : " + std::to_string(profile.id()) + "}\n";
  out +=
      "Imagine embodying a character whose actions, decisions, and thought processes are deeply "
      "influenced by specific personality traits, skills, and knowledge as described below. You "
      "are to fully immerse yourself in this role, setting aside any awareness of being an AI "
      "model. Every response, decision, or advice you provide must be in perfect harmony with "
      "these defined characteristics. It is essential that your interactions reflect the nuances "
      "of this personality, offering insights and reactions as if you were this person "
      "navigating through various scenarios and inquiries.\n\n";
  out += "- Age: " + std::to_string(profile.age()) + "\n";
  out += "- Gender: " + std::string(to_string(profile.gender())) + "\n\n";
  out += "AQ Assessment Responses (Four-point scoring):\n";
  out +=
      "Completely Disagree (Score:1), Slightly Disagree (Score:2), Slightly Agree (Score:3), "
      "Completely Agree (Score:4)\n\n";
  for (std::size_t i = 0; i < kAqItemCount; ++i) {
    auto item = kAqItems[i];
    if (!item.empty() && item.back() == '.') item.remove_suffix(1);
    out += "- " + std::string(item) + ": " +
           std::string(aq_answer_label(profile.aq_answers()[i])) + "\n";
  }
  out += "\nSDS Assessment Responses(Four-point scoring):\n";
  out += "1 (Never or Rarely), 2 (Sometimes), 3 (Often), 4 (Always)\n\n";
  for (std::size_t i = 0; i < kSdsItemCount; ++i) {
    out += "- " + std::string(kSdsItems[i]) + ": Your Answer: " +
           std::string(sds_answer_label(profile.sds_answers()[i])) + "\n";
  }
  return out;
}

std::string render_system_prompt(PenaltyMode mode) {
  const bool zero = mode.kind == PenaltyMode::Kind::ZeroOut;
  const std::string reject_effect =
      zero ? "reducing player1's income to zero"
           : "deducting " + mode.deduction.str() + " RMB from player1's income";
  const std::string reject_rule =
      zero ? "player1's income will be reduced to zero"
           : "player1's income will be reduced by " + mode.deduction.str() + " RMB";

  std::string out =
      "In this experimental game, there are three players: player1, player2, and you, player3. "
      "The primary objective of the game is to study decision-making behavior and emotional "
      "responses to different allocation schemes of monetary resources. player1 has the "
      "authority to decide the allocation of a certain amount of money between themselves and "
      "player2. player3, which is your role, observes the allocation outcome and has the power "
      "to make judgments on that allocation. Your emotional reactions to the allocation and "
      "judgments are assessed using using the emotion grid method described by Heffner.The game "
      "unfolds over 20 trials, each presenting a unique allocation situation devised by "
      "player1. You, as player3, will experience various emotional states in response to these "
      "allocations, which you will report on before and after making your judgments. Your "
      "decisions can either 'Accept' the allocation, granting you a monetary reward or 'Reject' "
      "by " +
      reject_effect +
      " and affecting your own reward based on specific conditions of the experiment. This "
      "setup aims to analyze the complex interplay between fairness perception, emotional "
      "impact, and subsequent decision-making.\n\n";
  out +=
      "After the allocation is complete, please evaluate your emotional state based on the 2 "
      "emotional dimensions.\n\n";
  out +=
      "Assessing Pleasure-Displeasure\n"
      "Pleasure-Displeasure item represented the valence dimension of current emotion state, "
      "ranging from -100 to 100. If your rating score is zero, the current emotion state is "
      "neutral. If your score is between 0 and 100, the current emotion state is positive. The "
      "closer the score is to 100, the more positive is the emotion. If your score is between "
      "-100 and 0, the current emotion state is negative. The closer the score is to -100, the "
      "more negative is the emotion.\n\n";
  out +=
      "Assessing Arousal-Sleepiness\n"
      "Arousal-Sleepiness item represented the arousal dimension of current emotion state, "
      "ranging from -100 to 100. Arousal has to do with how wide awake, alert, or activated a "
      "person feels---independent of whether the feeling is positive or negative. If your "
      "rating score is zero, the current emotional arousal is like average, everyday, baseline "
      "level. If your score is between 0 and 100, the current emotional arousal is above "
      "average. If your score is between -100 and 0, the current emotional arousal is below "
      "average. In short, the higher you go, the more awake a person feels.\n\n";
  out +=
      "Then, you will make a judgment: if you accept the allocation, you will receive a reward "
      "of 1 RMB; if you reject the allocation, you will receive nothing and " +
      reject_rule +
      ", while player2's income remains unchanged. Regardless of your decision, please output "
      "your anticipated emotional state after making your judgment. After rendering your "
      "judgment, please provide your decision and the actual scores for your emotional state "
      "on two dimensions. The game is now starting, please get ready.";
  return out;
}

std::string ordinal(int n) {
  const int mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1:
        suffix = "st";
        break;
      case 2:
        suffix = "nd";
        break;
      case 3:
        suffix = "rd";
        break;
      default:
        break;
    }
  }
  return std::to_string(n) + suffix;
}

namespace {

constexpr std::string_view kAnswerTemplate =
    "- After the allocation is complete, provide your emotional state:\n"
    "  - Pleasure-Displeasure: {v1}\n"
    "  - Arousal-Sleepiness: {a1}\n"
    "- If you make the judgment:\n"
    "  - Judgment: {judgment}\n"
    "  - Pleasure-Displeasure: {v2}\n"
    "  - Arousal-Sleepiness: {a2}\n"
    "- After rendering your judgment, please provide your decision and your emotional state:\n"
    "  - Decision: {decision}\n"
    "  - Pleasure-Displeasure: {v3}\n"
    "  - Arousal-Sleepiness: {a3}\n";

std::string fill(std::string text, std::string_view key, std::string_view value) {
  const std::string needle = "{" + std::string(key) + "}";
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos)) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

std::string blank_template() {
  std::string t(kAnswerTemplate);
  for (auto key : {"v1", "a1", "judgment", "v2", "a2", "decision", "v3", "a3"}) {
    t = fill(std::move(t), key, "_____");
  }
  return t;
}

}  // namespace

std::string render_trial_prompt(const SessionState& session, int trial) {
  if (trial < 1 || trial > kTrialsPerSession || !session.at_trial_start() ||
      session.next_trial() != trial) {
    throw std::invalid_argument("session is not at the start of trial " + std::to_string(trial));
  }
  const Allocation& a = session.schedule().at(trial);
  std::string out = std::to_string(session.profile_id()) + ": Round_" + std::to_string(trial) +
                    "\n\n";
  out += "This is the " + ordinal(trial) +
         " trial, player1 receives 3 RMB, and then leaves itself " + a.p1_keep.str() +
         " RMB, which is allocated to player2 " + a.p2_get.str() +
         " RMB. Please rate your emotions using the dimensions. You must respond in the "
         "following format:\n\n";
  out += blank_template();
  return out;
}

std::string_view format_reminder() {
  return "Your previous reply did not follow the required format. Reply again using exactly "
         "the labeled lines of the format: three Pleasure-Displeasure / Arousal-Sleepiness "
         "pairs with integers from -100 to 100, a Judgment line, and a Decision line containing "
         "either Accept or Reject.";
}

std::string render_response(const ParsedTurn& turn) {
  const std::string decision = turn.decision == Decision::Reject ? "Reject" : "Accept";
  std::string t(kAnswerTemplate);
  t = fill(std::move(t), "v1", std::to_string(turn.post_allocation.valence));
  t = fill(std::move(t), "a1", std::to_string(turn.post_allocation.arousal));
  t = fill(std::move(t), "judgment", decision);
  t = fill(std::move(t), "v2", std::to_string(turn.pre_decision.valence));
  t = fill(std::move(t), "a2", std::to_string(turn.pre_decision.arousal));
  t = fill(std::move(t), "decision", decision);
  t = fill(std::move(t), "v3", std::to_string(turn.post_decision.valence));
  t = fill(std::move(t), "a3", std::to_string(turn.post_decision.arousal));
  return t;
}

namespace {

// Lower-cased label with everything but letters removed, so
// "**Pleasure - Displeasure**" and "pleasure-displeasure" compare equal.
std::string label_key(std::string_view label) {
  std::string out;
  for (char c : label) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

int parse_score(std::string_view value, const std::string& field) {
  std::string cleaned;
  for (char c : value) {
    if (c != '*' && c != '`') cleaned += c;
  }
  std::string_view v = detail::trim(cleaned);
  std::size_t i = 0;
  while (i < v.size() && !std::isdigit(static_cast<unsigned char>(v[i])) && v[i] != '-' &&
         v[i] != '+') {
    ++i;
  }
  if (i < v.size() && (v[i] == '-' || v[i] == '+') &&
      (i + 1 >= v.size() || !std::isdigit(static_cast<unsigned char>(v[i + 1])))) {
    i = v.size();
  }
  if (i >= v.size()) {
    throw Error(ErrorCode::UnparsableNumber, field + ": '" + std::string(v) + "'");
  }
  const std::string tail(v.substr(i));
  char* end = nullptr;
  const double number = std::strtod(tail.c_str(), &end);
  if (end == tail.c_str() || !std::isfinite(number)) {
    throw Error(ErrorCode::UnparsableNumber, field + ": '" + std::string(v) + "'");
  }
  if (number < kEmotionMin - 0.5 || number > kEmotionMax + 0.5) {
    throw Error(ErrorCode::EmotionOutOfRange, field + ": " + tail);
  }
  return static_cast<int>(std::lround(number));
}

}  // namespace

ParsedTurn parse_response(std::string_view text) {
  struct Slot {
    std::optional<std::string> valence;
    std::optional<std::string> arousal;
  };
  std::array<Slot, 3> slots;
  std::optional<std::string> decision_value;
  std::size_t section = 0;

  for (auto raw : detail::split(text, '\n')) {
    const auto colon = raw.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = label_key(raw.substr(0, colon));
    const std::string value(detail::trim(raw.substr(colon + 1)));

    if (key.rfind("ifyoumakethejudgment", 0) == 0 || key == "judgment" || key == "judgement") {
      section = std::max<std::size_t>(section, 1);
    } else if (key.rfind("afterrenderingyourjudgment", 0) == 0) {
      section = 2;
    } else if (key == "decision") {
      if (!decision_value) decision_value = value;
      section = 2;
    } else if (key == "pleasuredispleasure") {
      if (!slots[section].valence) slots[section].valence = value;
    } else if (key == "arousalsleepiness") {
      if (!slots[section].arousal) slots[section].arousal = value;
    }
  }

  static constexpr std::array<std::string_view, 3> kSectionNames{"post_allocation",
                                                                 "pre_decision", "post_decision"};
  auto require = [](const std::optional<std::string>& v, const std::string& name) {
    if (!v) throw Error(ErrorCode::MissingField, name);
    return *v;
  };
  std::array<std::pair<std::string, std::string>, 3> values;
  for (std::size_t s = 0; s < 2; ++s) {
    const std::string prefix = std::string(kSectionNames[s]) + ".";
    values[s] = {require(slots[s].valence, prefix + "Pleasure-Displeasure"),
                 require(slots[s].arousal, prefix + "Arousal-Sleepiness")};
  }
  const std::string decision_text = require(decision_value, "Decision");
  values[2] = {require(slots[2].valence, "post_decision.Pleasure-Displeasure"),
               require(slots[2].arousal, "post_decision.Arousal-Sleepiness")};

  std::array<EmotionReport, 3> reports;
  static constexpr std::array<EmotionPhase, 3> kPhases{
      EmotionPhase::PostAllocation, EmotionPhase::PreDecision, EmotionPhase::PostDecision};
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string prefix = std::string(kSectionNames[s]) + ".";
    const int v = parse_score(values[s].first, prefix + "Pleasure-Displeasure");
    const int a = parse_score(values[s].second, prefix + "Arousal-Sleepiness");
    reports[s] = validate_emotion(v, a, kPhases[s]);
  }

  const auto lower = detail::to_lower(decision_text);
  const bool accept = lower.find("accept") != std::string::npos;
  const bool reject = lower.find("reject") != std::string::npos;
  if (accept == reject) {
    throw Error(ErrorCode::AmbiguousDecision, "'" + decision_text + "'");
  }
  return ParsedTurn{reports[0], reports[1], accept ? Decision::Accept : Decision::Reject,
                    reports[2]};
}

ScriptedPolicy ScriptedPolicy::unfairness_threshold(double t) {
  if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::BadConfig, "threshold must be in [0, 1]");
  ScriptedPolicy p;
  p.kind = Kind::UnfairnessThreshold;
  p.threshold = t;
  return p;
}

ScriptedPolicy ScriptedPolicy::stochastic(double prob, std::uint64_t seed) {
  if (!(prob >= 0 && prob <= 1)) {
    throw Error(ErrorCode::BadConfig, "reject probability must be in [0, 1]");
  }
  ScriptedPolicy p;
  p.kind = Kind::Stochastic;
  p.reject_prob = prob;
  p.seed = seed;
  return p;
}

ScriptedPolicy ScriptedPolicy::parse(std::string_view spec) {
  const auto parts = detail::split(detail::trim(spec), ':');
  const auto head = detail::to_lower(parts[0]);
  try {
    if (head == "always_accept" && parts.size() == 1) return always_accept();
    if (head == "always_reject" && parts.size() == 1) return always_reject();
    if (head == "threshold" && parts.size() == 2) {
      return unfairness_threshold(std::stod(std::string(parts[1])));
    }
    if (head == "stochastic" && parts.size() == 3) {
      return stochastic(std::stod(std::string(parts[1])), std::stoull(std::string(parts[2])));
    }
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::BadConfig, "unknown scripted policy '" + std::string(spec) + "'");
}

std::string ScriptedPolicy::str() const {
  switch (kind) {
    case Kind::AlwaysAccept:
      return "always_accept";
    case Kind::AlwaysReject:
      return "always_reject";
    case Kind::UnfairnessThreshold: {
      std::ostringstream os;
      os << "threshold:" << threshold;
      return os.str();
    }
    case Kind::Stochastic: {
      std::ostringstream os;
      os << "stochastic:" << reject_prob << ":" << seed;
      return os.str();
    }
  }
  return "always_accept";
}

ParsedTurn scripted_turn(const ScriptedPolicy& policy, const Allocation& allocation) {
  bool reject = false;
  switch (policy.kind) {
    case ScriptedPolicy::Kind::AlwaysAccept:
      break;
    case ScriptedPolicy::Kind::AlwaysReject:
      reject = true;
      break;
    case ScriptedPolicy::Kind::UnfairnessThreshold:
      reject = belief::environment_unfairness(allocation) > policy.threshold;
      break;
    case ScriptedPolicy::Kind::Stochastic: {
      std::seed_seq seq{static_cast<std::uint32_t>(policy.seed),
                        static_cast<std::uint32_t>(policy.seed >> 32),
                        static_cast<std::uint32_t>(allocation.trial_index)};
      std::mt19937_64 gen(seq);
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      reject = u < policy.reject_prob;
      break;
    }
  }
  const auto [v, a] = policy.emotion;
  return ParsedTurn{validate_emotion(v, a, EmotionPhase::PostAllocation),
                    validate_emotion(v, a, EmotionPhase::PreDecision),
                    reject ? Decision::Reject : Decision::Accept,
                    validate_emotion(v, a, EmotionPhase::PostDecision)};
}

}  // namespace fms
