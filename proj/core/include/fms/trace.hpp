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

// Persisted per-individual session logs and their JSON encoding.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fms/participants.hpp"
#include "fms/protocol.hpp"

namespace fms {

inline constexpr std::string_view kTraceSchema = "fms.trace/1";

struct Provenance {
  std::string participant_kind;  // "human" | "llm" | "scripted"
  std::string agent;             // model name, "human" or scripted policy
  std::string group;             // analysis group label; derived from agent when empty
  std::string started_at;
  std::string finished_at;
  std::optional<std::uint64_t> seed;

  bool operator==(const Provenance&) const = default;
};

struct TraceFile {
  std::string schema_version{kTraceSchema};
  std::string session_id;
  Profile profile;
  ConditionId condition;
  PenaltyMode penalty_mode;
  std::vector<TrialRecord> records;
  Provenance provenance;

  bool complete() const { return records.size() == kTrialsPerSession; }
  int final_reward() const;

  /// Throws Error{SchemaMismatch} when an invariant is broken.
  void validate() const;

  bool operator==(const TraceFile&) const = default;
};

nlohmann::json to_json(const Profile& p);
Profile profile_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TraceFile& t);
/// Throws Error{SchemaMismatch}.
TraceFile trace_from_json(const nlohmann::json& j);

/// Writes to a sibling temp file and renames it over the target.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

void write_trace(const std::filesystem::path& path, const TraceFile& trace);
TraceFile read_trace(const std::filesystem::path& path);

/// Accepts a single trace (.json), a bundle with one trace per line (.jsonl)
/// or a directory searched recursively for *.trace.json and *.jsonl bundles.
/// Results are ordered by path then line.
std::vector<TraceFile> load_traces(const std::filesystem::path& path);

/// One profile per line.
std::vector<Profile> load_profiles(const std::filesystem::path& path);

std::string iso8601_now();

}  // namespace fms
