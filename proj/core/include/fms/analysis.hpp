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

// Aggregate statistics over traces and fitted belief paths.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fms/participants.hpp"
#include "fms/protocol.hpp"
#include "fms/trace.hpp"

#include <nlohmann/json.hpp>

namespace fms::analysis {

class Group {
 public:
  enum class Kind { Human, GPT35, GPT4Turbo, GPT4o, Custom };

  static Group human() { return Group(Kind::Human, {}); }
  static Group gpt35() { return Group(Kind::GPT35, {}); }
  static Group gpt4_turbo() { return Group(Kind::GPT4Turbo, {}); }
  static Group gpt4o() { return Group(Kind::GPT4o, {}); }
  static Group custom(std::string label) { return Group(Kind::Custom, std::move(label)); }

  /// Maps labels and model names: "human", "gpt-3.5*", "gpt-4-turbo*" /
  /// "gpt-4-1106*", "gpt-4o*"; anything else is Custom.
  static Group from_label(std::string_view label);

  Kind kind() const { return kind_; }
  /// "Human", "GPT-3.5", "GPT-4 Turbo", "GPT-4o" or the custom label.
  std::string name() const;

  bool operator==(const Group&) const = default;
  /// Display order: Human, GPT-3.5, GPT-4 Turbo, GPT-4o, then custom labels.
  bool operator<(const Group& o) const;

 private:
  Group(Kind k, std::string label) : kind_(k), label_(std::move(label)) {}
  Kind kind_;
  std::string label_;
};

/// Group from provenance.group if set, otherwise from the agent name.
Group group_of(const TraceFile& trace);

struct GroupKey {
  Group group = Group::human();
  std::optional<ConditionId> condition;
  std::optional<Gender> gender;

  bool matches(const TraceFile& trace) const;
};

/// Sum of final cumulative rewards over matching traces.
int group_score(std::span<const TraceFile> traces, const GroupKey& key);

struct GroupStats {
  int score = 0;
  int n_individuals = 0;
  int n_trials = 0;
  int n_accept = 0;
  int n_reject = 0;
  int n_missing = 0;
  double rejection_rate = 0.0;
  double missing_rate = 0.0;
  double acceptance_rate = 0.0;
};

/// Rates are over all trials of matching traces; all zero for an empty group.
GroupStats rates(std::span<const TraceFile> traces, const GroupKey& key);

/// v -> (v + 100) / 200.
double normalize_emotion(int value);

enum class EmotionDimension { Valence, Arousal, Combined };
std::string_view to_string(EmotionDimension d);

/// All three reports of every non-missing trial, normalised to [0, 1].
/// Combined concatenates valence then arousal values.
std::vector<double> normalize_emotions(const TraceFile& trace, EmotionDimension dimension);
std::vector<double> normalize_emotions(std::span<const EmotionReport> reports,
                                       EmotionDimension dimension);

struct EntropyReport {
  EmotionDimension dimension = EmotionDimension::Combined;
  int bin_count = 0;
  std::vector<double> edges;          // bin_count + 1 edges over [0, 1]
  std::vector<double> probabilities;  // one per bin, sums to 1
  double entropy = 0.0;               // natural log
};

inline constexpr int kDefaultBins = 20;

/// Equal-width histogram on [0, 1] (1.0 falls in the last bin), then
/// Shannon entropy with 0 log 0 = 0. Throws Error{EmptyInput} on no values
/// and Error{BadConfig} on bin_count < 1.
EntropyReport entropy(std::span<const double> values, int bin_count = kDefaultBins,
                      EmotionDimension dimension = EmotionDimension::Combined);

/// Per-trial belief of one fitted individual, aligned with its trace.
struct BeliefSeries {
  std::string session_id;
  std::int64_t profile_id = 0;
  Group group = Group::human();
  ConditionId condition = ConditionId::condition1();
  Gender gender = Gender::Female;
  /// bel after trial j; a Missing trial repeats the previous value.
  std::vector<double> belief_by_trial;
  /// 1 reject, 0 accept, nullopt missing.
  std::vector<std::optional<int>> decision_by_trial;

  bool matches(const GroupKey& key) const;
};

struct CurvePoint {
  int trial = 0;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

/// Pointwise mean and sd over matching members. Throws Error{MixedLengths}.
std::vector<CurvePoint> group_belief_curve(std::span<const BeliefSeries> series,
                                           const GroupKey& key);

/// nullopt when either series is constant or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct IndividualCorrelation {
  std::string session_id;
  std::int64_t profile_id = 0;
  std::optional<double> r;  // nullopt: undefined (constant series)
};

struct CorrelationReport {
  std::vector<IndividualCorrelation> individuals;
  std::optional<double> pooled;           // over all (belief, decision) pairs
  std::optional<double> mean_individual;  // mean of the defined individual r
};

/// Pearson correlation between bel_{i,j} and y_{i,j} over non-missing
/// trials. Throws Error{InsufficientData} when no matching member has two
/// aligned pairs.
CorrelationReport belief_behavior_correlation(std::span<const BeliefSeries> series,
                                              const GroupKey& key);

// Table output.

struct Table2Row {
  Group group = Group::human();
  int female_condition1 = 0;
  int female_condition2 = 0;
  int male_condition1 = 0;
  int male_condition2 = 0;
  int score = 0;
};

/// One row per group present in `traces`, in display order.
std::vector<Table2Row> table2(std::span<const TraceFile> traces);

struct RateRow {
  Group group = Group::human();
  std::string condition;  // "" for all
  std::string gender;     // "" for all
  GroupStats stats;
};

struct EntropyRow {
  Group group = Group::human();
  std::string condition;
  std::string session_id;
  std::int64_t profile_id = 0;
  EmotionDimension dimension = EmotionDimension::Combined;
  int bin_count = 0;
  double entropy = 0.0;
};

struct CurveRow {
  Group group = Group::human();
  std::string condition;
  std::vector<CurvePoint> points;
};

struct CorrelationRow {
  Group group = Group::human();
  std::string condition;
  CorrelationReport report;
};

/// Everything the analyze command computes; export_tables renders it.
struct AnalysisReport {
  std::vector<Table2Row> table2;
  std::vector<RateRow> rates;
  std::vector<EntropyRow> entropy;
  std::vector<CurveRow> belief_curves;
  std::vector<CorrelationRow> correlations;
};

struct AnalyzeOptions {
  int bin_count = kDefaultBins;
};

/// Builds every table: rates per group, per group×condition and per
/// group×condition×gender; per-individual entropy in all three dimensions;
/// belief curves and correlations per group×condition when `series` is
/// non-empty. Groups with too little data for a correlation are skipped.
AnalysisReport analyze(std::span<const TraceFile> traces, std::span<const BeliefSeries> series,
                       const AnalyzeOptions& options = {});

nlohmann::json to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);

enum class ExportFormat { Csv, Tsv };

/// Writes table2, rates, entropy, belief_curves, correlations and a long
/// (group, condition, trial, metric, value) file into `dir`. Output is a
/// pure function of the report. Returns the written paths.
/// Throws Error{IoError}.
std::vector<std::filesystem::path> export_tables(const AnalysisReport& report,
                                                 const std::filesystem::path& dir,
                                                 ExportFormat format = ExportFormat::Csv);

}  // namespace fms::analysis
