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

// Batch runs of scripted or LLM-backed agents.
//
// Output layout under output_dir, per agent:
//
//   <group>/<id>.partial.json     trace so far, rewritten after every trial
//   <group>/<id>.trace.json       final trace (the partial file is renamed)
//   <group>/<id>.exchanges.jsonl  every request/response, LLM agents only
//
// A rerun with the same config skips finished agents and continues partial
// ones from their last sealed trial; LLM memory is rebuilt from the
// exchange log so no completed trial is queried again.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fms/llm_agent.hpp"
#include "fms/trace.hpp"

namespace fms {

struct ParticipantSpec {
  enum class Kind { Scripted, Llm };
  Kind kind = Kind::Scripted;
  ScriptedPolicy policy;    // Scripted
  EndpointConfig endpoint;  // Llm
  RetryPolicy retry;        // Llm
};

struct CohortSpec {
  std::string group;  // e.g. "GPT-4o"
  /// Inclusive agent id ranges.
  std::vector<std::pair<std::int64_t, std::int64_t>> id_ranges;
  std::string condition;  // key into RunConfig::condition_files
  ParticipantSpec participant;

  std::vector<std::int64_t> ids() const;
};

struct RunConfig {
  std::filesystem::path output_dir = "runs";
  std::filesystem::path profiles;
  std::map<std::string, std::filesystem::path> condition_files;
  PenaltyMode penalty_mode = PenaltyMode::zero_out();
  int concurrency = 4;
  std::uint64_t seed = 0;
  /// When false, provenance timestamps are left empty so reruns are byte-identical.
  bool timestamps = true;
  std::vector<CohortSpec> cohorts;

  /// Throws Error{BadConfig} on empty cohorts, overlapping id ranges,
  /// unknown conditions or a non-positive concurrency cap.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`. Throws Error{BadConfig}.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// "1-35" or "71" -> inclusive range. Throws Error{BadConfig}.
std::pair<std::int64_t, std::int64_t> parse_id_range(std::string_view text);

/// Agents share persona data with the human of the same id modulo 1000.
std::int64_t persona_source_id(std::int64_t agent_id);

/// File-system-safe group directory name: "GPT-4 Turbo" -> "gpt-4-turbo".
std::string group_slug(std::string_view group);

nlohmann::json to_json(const Exchange& ex, std::size_t history_prefix);

struct CohortHooks {
  /// Builds the client for one endpoint; defaults to make_chat_client with
  /// the run seed filled in for mock:// urls that lack one.
  std::function<std::shared_ptr<ChatClient>(const EndpointConfig&)> client_factory;
  std::function<std::string()> clock;
  Sleeper sleeper;
  /// Stop each agent after this many trials in this invocation, leaving a
  /// partial trace; simulates an interrupted run.
  std::optional<int> stop_after_trials;
  std::function<void(const std::string&)> log;
};

struct CohortResult {
  /// One per agent in config order; complete unless stop_after_trials hit.
  std::vector<TraceFile> traces;
  std::vector<std::filesystem::path> trace_paths;
  int trials_played = 0;   // trials run in this invocation
  int trials_resumed = 0;  // trials restored from partial traces
  int agents_skipped = 0;  // already complete
  int missing = 0;         // Missing trials across all returned traces
};

/// Throws Error{AuthError} (after stopping all workers), Error{BadConfig}
/// and profile/condition errors. Per-turn failures become Missing trials.
CohortResult run_llm_cohort(const RunConfig& config, const CohortHooks& hooks = {});

}  // namespace fms
