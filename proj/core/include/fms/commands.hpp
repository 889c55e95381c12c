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

// Glue between traces, the belief model and the analysis tables; backs the
// fit / analyze / export subcommands.

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fms/analysis.hpp"
#include "fms/belief_model.hpp"
#include "fms/trace.hpp"

namespace fms::commands {

inline constexpr std::string_view kFitSchema = "fms.fit/1";

/// Model inputs of one trace: y, E and normalised pre-decision arousal per
/// non-missing trial.
std::vector<belief::StepInputs> steps_from_trace(const TraceFile& trace);

belief::FitConfig fit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const belief::FitConfig& c);
nlohmann::json to_json(const belief::Params& p);
belief::Params params_from_json(const nlohmann::json& j);

/// One fitted (or unfittable) individual.
struct FitRecord {
  std::string session_id;
  std::int64_t profile_id = 0;
  std::string group;
  std::string condition;
  Gender gender = Gender::Female;
  std::optional<belief::FitResult> result;  // nullopt: not identifiable
  std::string error;                        // set when result is empty
  /// bel after each recorded trial; Missing trials repeat the previous value.
  std::vector<double> belief_by_trial;
  std::vector<std::optional<int>> decision_by_trial;
};

nlohmann::json to_json(const FitRecord& r);
/// Throws Error{SchemaMismatch}.
FitRecord fit_record_from_json(const nlohmann::json& j);

FitRecord fit_trace(const TraceFile& trace, const belief::FitConfig& config);

void write_fit_file(const std::filesystem::path& path, std::span<const FitRecord> records);
std::vector<FitRecord> read_fit_file(const std::filesystem::path& path);

/// Fitted records as analysis series; unfittable records are dropped.
std::vector<analysis::BeliefSeries> belief_series(std::span<const FitRecord> records);

// Subcommands. Each returns the process exit status and reports progress
// and problems on `log`.

struct FitArgs {
  std::vector<std::filesystem::path> traces;
  std::filesystem::path output = "fits.jsonl";
  belief::FitConfig config;
  bool skip_unfittable = false;
};

/// Exit 0 on success, 3 when an individual is not identifiable and
/// skip_unfittable is false (the fit file is still written).
int fit_command(const FitArgs& args, std::ostream& log);

struct AnalyzeArgs {
  std::vector<std::filesystem::path> traces;
  std::optional<std::filesystem::path> fits;
  std::filesystem::path output = "analysis.json";
  std::optional<std::filesystem::path> tables_dir;  // also export tables here
  analysis::AnalyzeOptions options;
  bool include_incomplete = false;
};

int analyze_command(const AnalyzeArgs& args, std::ostream& log);

struct ExportArgs {
  std::filesystem::path report = "analysis.json";
  std::filesystem::path output_dir = "tables";
  analysis::ExportFormat format = analysis::ExportFormat::Csv;
};

int export_command(const ExportArgs& args, std::ostream& log);

/// Loads traces from every path; incomplete ones are dropped unless asked.
std::vector<TraceFile> load_all_traces(std::span<const std::filesystem::path> paths,
                                       bool include_incomplete, std::ostream& log);

}  // namespace fms::commands
