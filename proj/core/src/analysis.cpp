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

#include "fms/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms::analysis {

using nlohmann::json;

namespace {

std::string alnum_lower(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

Group Group::from_label(std::string_view label) {
  const auto key = alnum_lower(label);
  if (key == "human") return human();
  if (starts_with(key, "gpt4o")) return gpt4o();
  if (starts_with(key, "gpt4turbo") || starts_with(key, "gpt41106")) return gpt4_turbo();
  if (starts_with(key, "gpt35")) return gpt35();
  return custom(std::string(detail::trim(label)));
}

std::string Group::name() const {
  switch (kind_) {
    case Kind::Human: return "Human";
    case Kind::GPT35: return "GPT-3.5";
    case Kind::GPT4Turbo: return "GPT-4 Turbo";
    case Kind::GPT4o: return "GPT-4o";
    case Kind::Custom: break;
  }
  return label_;
}

bool Group::operator<(const Group& o) const {
  if (kind_ != o.kind_) return static_cast<int>(kind_) < static_cast<int>(o.kind_);
  return label_ < o.label_;
}

Group group_of(const TraceFile& trace) {
  if (!trace.provenance.group.empty()) return Group::from_label(trace.provenance.group);
  return Group::from_label(trace.provenance.agent);
}

bool GroupKey::matches(const TraceFile& trace) const {
  if (!(group_of(trace) == group)) return false;
  if (condition && !(trace.condition == *condition)) return false;
  if (gender && trace.profile.gender() != *gender) return false;
  return true;
}

int group_score(std::span<const TraceFile> traces, const GroupKey& key) {
  int score = 0;
  for (const auto& t : traces) {
    if (key.matches(t)) score += t.final_reward();
  }
  return score;
}

GroupStats rates(std::span<const TraceFile> traces, const GroupKey& key) {
  GroupStats s;
  for (const auto& t : traces) {
    if (!key.matches(t)) continue;
    ++s.n_individuals;
    s.score += t.final_reward();
    for (const auto& r : t.records) {
      ++s.n_trials;
      switch (r.decision) {
        case Decision::Accept: ++s.n_accept; break;
        case Decision::Reject: ++s.n_reject; break;
        case Decision::Missing: ++s.n_missing; break;
      }
    }
  }
  if (s.n_trials > 0) {
    const double n = s.n_trials;
    s.rejection_rate = s.n_reject / n;
    s.missing_rate = s.n_missing / n;
    s.acceptance_rate = s.n_accept / n;
  }
  return s;
}

double normalize_emotion(int value) { return (value + 100) / 200.0; }

std::string_view to_string(EmotionDimension d) {
  switch (d) {
    case EmotionDimension::Valence: return "valence";
    case EmotionDimension::Arousal: return "arousal";
    case EmotionDimension::Combined: return "combined";
  }
  return "combined";
}

std::vector<double> normalize_emotions(std::span<const EmotionReport> reports,
                                       EmotionDimension dimension) {
  std::vector<double> out;
  out.reserve(reports.size() * 2);
  if (dimension != EmotionDimension::Arousal) {
    for (const auto& r : reports) out.push_back(normalize_emotion(r.valence));
  }
  if (dimension != EmotionDimension::Valence) {
    for (const auto& r : reports) out.push_back(normalize_emotion(r.arousal));
  }
  return out;
}

std::vector<double> normalize_emotions(const TraceFile& trace, EmotionDimension dimension) {
  std::vector<EmotionReport> all;
  for (const auto& r : trace.records) all.insert(all.end(), r.reports.begin(), r.reports.end());
  return normalize_emotions(all, dimension);
}

EntropyReport entropy(std::span<const double> values, int bin_count, EmotionDimension dimension) {
  if (bin_count < 1) throw Error(ErrorCode::BadConfig, "bin_count must be at least 1");
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "entropy of an empty sample");

  EntropyReport rep;
  rep.dimension = dimension;
  rep.bin_count = bin_count;
  rep.edges.resize(static_cast<std::size_t>(bin_count) + 1);
  for (int b = 0; b <= bin_count; ++b) rep.edges[static_cast<std::size_t>(b)] = double(b) / bin_count;

  std::vector<std::size_t> counts(static_cast<std::size_t>(bin_count), 0);
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0);
    auto b = static_cast<int>(std::floor(c * bin_count));
    b = std::min(b, bin_count - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  const double n = static_cast<double>(values.size());
  rep.probabilities.reserve(counts.size());
  double h = 0.0;
  for (auto c : counts) {
    const double p = c / n;
    rep.probabilities.push_back(p);
    if (p > 0.0) h -= p * std::log(p);
  }
  rep.entropy = std::max(0.0, h);
  return rep;
}

bool BeliefSeries::matches(const GroupKey& key) const {
  if (!(group == key.group)) return false;
  if (key.condition && !(condition == *key.condition)) return false;
  if (key.gender && gender != *key.gender) return false;
  return true;
}

std::vector<CurvePoint> group_belief_curve(std::span<const BeliefSeries> series,
                                           const GroupKey& key) {
  std::vector<const BeliefSeries*> members;
  for (const auto& s : series) {
    if (s.matches(key)) members.push_back(&s);
  }
  if (members.empty()) return {};
  const auto len = members.front()->belief_by_trial.size();
  for (const auto* m : members) {
    if (m->belief_by_trial.size() != len) {
      throw Error(ErrorCode::MixedLengths,
                  "belief series of different lengths (" + std::to_string(len) + " vs " +
                      std::to_string(m->belief_by_trial.size()) + ")");
    }
  }
  std::vector<CurvePoint> curve(len);
  const double n = static_cast<double>(members.size());
  for (std::size_t j = 0; j < len; ++j) {
    double sum = 0.0;
    for (const auto* m : members) sum += m->belief_by_trial[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto* m : members) {
      const double d = m->belief_by_trial[j] - mean;
      ss += d * d;
    }
    curve[j] = {static_cast<int>(j) + 1, mean, std::sqrt(ss / n)};
  }
  return curve;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = std::min(x.size(), y.size());
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  // Relative test so a series that is constant up to rounding counts as constant.
  const auto flat = [&](double ss, double m) { return ss <= 1e-24 * std::max(1.0, m * m) * n; };
  if (flat(sxx, mx) || flat(syy, my)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport belief_behavior_correlation(std::span<const BeliefSeries> series,
                                              const GroupKey& key) {
  CorrelationReport rep;
  std::vector<double> all_b, all_y;
  bool any_pairs = false;
  double sum_r = 0.0;
  int n_r = 0;
  for (const auto& s : series) {
    if (!s.matches(key)) continue;
    std::vector<double> b, y;
    const auto n = std::min(s.belief_by_trial.size(), s.decision_by_trial.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!s.decision_by_trial[j]) continue;
      b.push_back(s.belief_by_trial[j]);
      y.push_back(*s.decision_by_trial[j]);
    }
    if (b.size() >= 2) any_pairs = true;
    auto r = pearson(b, y);
    if (r) {
      sum_r += *r;
      ++n_r;
    }
    rep.individuals.push_back({s.session_id, s.profile_id, r});
    all_b.insert(all_b.end(), b.begin(), b.end());
    all_y.insert(all_y.end(), y.begin(), y.end());
  }
  if (!any_pairs) {
    throw Error(ErrorCode::InsufficientData, "no member of " + key.group.name() +
                                                 " has two aligned belief/decision pairs");
  }
  rep.pooled = pearson(all_b, all_y);
  if (n_r > 0) rep.mean_individual = sum_r / n_r;
  return rep;
}

std::vector<Table2Row> table2(std::span<const TraceFile> traces) {
  std::set<Group> groups;
  for (const auto& t : traces) groups.insert(group_of(t));
  std::vector<Table2Row> rows;
  const auto c1 = ConditionId::condition1();
  const auto c2 = ConditionId::condition2();
  for (const auto& g : groups) {
    Table2Row row;
    row.group = g;
    row.female_condition1 = group_score(traces, {g, c1, Gender::Female});
    row.female_condition2 = group_score(traces, {g, c2, Gender::Female});
    row.male_condition1 = group_score(traces, {g, c1, Gender::Male});
    row.male_condition2 = group_score(traces, {g, c2, Gender::Male});
    row.score = group_score(traces, {g, std::nullopt, std::nullopt});
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Distinct conditions of one group, ordered by name.
template <typename T, typename GroupOf, typename CondOf>
std::vector<ConditionId> conditions_of(std::span<const T> items, const Group& g, GroupOf group_fn,
                                       CondOf cond_fn) {
  std::map<std::string, ConditionId> by_name;
  for (const auto& it : items) {
    if (group_fn(it) == g) by_name.emplace(cond_fn(it).name(), cond_fn(it));
  }
  std::vector<ConditionId> out;
  for (auto& [_, c] : by_name) out.push_back(c);
  return out;
}

}  // namespace

AnalysisReport analyze(std::span<const TraceFile> traces, std::span<const BeliefSeries> series,
                       const AnalyzeOptions& options) {
  AnalysisReport rep;
  rep.table2 = table2(traces);

  const auto trace_group = [](const TraceFile& t) { return group_of(t); };
  const auto trace_cond = [](const TraceFile& t) { return t.condition; };
  for (const auto& row : rep.table2) {
    const auto& g = row.group;
    rep.rates.push_back({g, "", "", rates(traces, {g, std::nullopt, std::nullopt})});
    for (const auto& c : conditions_of(traces, g, trace_group, trace_cond)) {
      rep.rates.push_back({g, c.name(), "", rates(traces, {g, c, std::nullopt})});
      for (auto gender : {Gender::Female, Gender::Male}) {
        rep.rates.push_back({g, c.name(), std::string(to_string(gender)), rates(traces, {g, c, gender})});
      }
    }
  }

  std::vector<const TraceFile*> ordered;
  for (const auto& t : traces) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(), [](const TraceFile* a, const TraceFile* b) {
    const auto ga = group_of(*a), gb = group_of(*b);
    if (!(ga == gb)) return ga < gb;
    if (a->condition.name() != b->condition.name()) return a->condition.name() < b->condition.name();
    return a->profile.id() < b->profile.id();
  });
  for (const auto* t : ordered) {
    for (auto dim : {EmotionDimension::Valence, EmotionDimension::Arousal, EmotionDimension::Combined}) {
      const auto values = normalize_emotions(*t, dim);
      if (values.empty()) continue;  // every trial missing
      const auto e = entropy(values, options.bin_count, dim);
      rep.entropy.push_back({group_of(*t), t->condition.name(), t->session_id, t->profile.id(), dim,
                             e.bin_count, e.entropy});
    }
  }

  if (!series.empty()) {
    std::set<Group> groups;
    for (const auto& s : series) groups.insert(s.group);
    const auto series_group = [](const BeliefSeries& s) { return s.group; };
    const auto series_cond = [](const BeliefSeries& s) { return s.condition; };
    for (const auto& g : groups) {
      for (const auto& c : conditions_of(series, g, series_group, series_cond)) {
        const GroupKey key{g, c, std::nullopt};
        rep.belief_curves.push_back({g, c.name(), group_belief_curve(series, key)});
        try {
          rep.correlations.push_back({g, c.name(), belief_behavior_correlation(series, key)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientData) throw;
        }
      }
    }
  }
  return rep;
}

// JSON -------------------------------------------------------------------

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json stats_json(const GroupStats& s) {
  return json{{"score", s.score},
              {"n_individuals", s.n_individuals},
              {"n_trials", s.n_trials},
              {"n_accept", s.n_accept},
              {"n_reject", s.n_reject},
              {"n_missing", s.n_missing},
              {"acceptance_rate", s.acceptance_rate},
              {"rejection_rate", s.rejection_rate},
              {"missing_rate", s.missing_rate}};
}

GroupStats stats_from(const json& j) {
  GroupStats s;
  s.score = j.at("score").get<int>();
  s.n_individuals = j.at("n_individuals").get<int>();
  s.n_trials = j.at("n_trials").get<int>();
  s.n_accept = j.at("n_accept").get<int>();
  s.n_reject = j.at("n_reject").get<int>();
  s.n_missing = j.at("n_missing").get<int>();
  s.acceptance_rate = j.at("acceptance_rate").get<double>();
  s.rejection_rate = j.at("rejection_rate").get<double>();
  s.missing_rate = j.at("missing_rate").get<double>();
  return s;
}

EmotionDimension dimension_from(const std::string& s) {
  if (s == "valence") return EmotionDimension::Valence;
  if (s == "arousal") return EmotionDimension::Arousal;
  if (s == "combined") return EmotionDimension::Combined;
  throw Error(ErrorCode::SchemaMismatch, "unknown emotion dimension '" + s + "'");
}

}  // namespace

json to_json(const AnalysisReport& r) {
  json out;
  out["schema_version"] = "fms.analysis/1";
  auto& t2 = out["table2"] = json::array();
  for (const auto& row : r.table2) {
    t2.push_back({{"group", row.group.name()},
                  {"female_condition1", row.female_condition1},
                  {"female_condition2", row.female_condition2},
                  {"male_condition1", row.male_condition1},
                  {"male_condition2", row.male_condition2},
                  {"score", row.score}});
  }
  auto& rates_j = out["rates"] = json::array();
  for (const auto& row : r.rates) {
    rates_j.push_back({{"group", row.group.name()},
                       {"condition", row.condition},
                       {"gender", row.gender},
                       {"stats", stats_json(row.stats)}});
  }
  auto& ent = out["entropy"] = json::array();
  for (const auto& row : r.entropy) {
    ent.push_back({{"group", row.group.name()},
                   {"condition", row.condition},
                   {"session_id", row.session_id},
                   {"profile_id", row.profile_id},
                   {"dimension", std::string(to_string(row.dimension))},
                   {"bins", row.bin_count},
                   {"entropy", row.entropy}});
  }
  auto& curves = out["belief_curves"] = json::array();
  for (const auto& row : r.belief_curves) {
    json pts = json::array();
    for (const auto& p : row.points) pts.push_back({{"trial", p.trial}, {"mean", p.mean}, {"sd", p.sd}});
    curves.push_back({{"group", row.group.name()}, {"condition", row.condition}, {"points", pts}});
  }
  auto& corr = out["correlations"] = json::array();
  for (const auto& row : r.correlations) {
    json ind = json::array();
    for (const auto& i : row.report.individuals) {
      ind.push_back({{"session_id", i.session_id}, {"profile_id", i.profile_id}, {"r", opt(i.r)}});
    }
    corr.push_back({{"group", row.group.name()},
                    {"condition", row.condition},
                    {"pooled", opt(row.report.pooled)},
                    {"mean_individual", opt(row.report.mean_individual)},
                    {"individuals", ind}});
  }
  return out;
}

AnalysisReport report_from_json(const json& j) {
  try {
    if (j.value("schema_version", std::string{}) != "fms.analysis/1") {
      throw Error(ErrorCode::SchemaMismatch, "not an analysis report");
    }
    AnalysisReport r;
    for (const auto& row : j.at("table2")) {
      r.table2.push_back({Group::from_label(row.at("group").get<std::string>()),
                          row.at("female_condition1").get<int>(), row.at("female_condition2").get<int>(),
                          row.at("male_condition1").get<int>(), row.at("male_condition2").get<int>(),
                          row.at("score").get<int>()});
    }
    for (const auto& row : j.at("rates")) {
      r.rates.push_back({Group::from_label(row.at("group").get<std::string>()),
                         row.at("condition").get<std::string>(), row.at("gender").get<std::string>(),
                         stats_from(row.at("stats"))});
    }
    for (const auto& row : j.at("entropy")) {
      r.entropy.push_back({Group::from_label(row.at("group").get<std::string>()),
                           row.at("condition").get<std::string>(),
                           row.at("session_id").get<std::string>(),
                           row.at("profile_id").get<std::int64_t>(),
                           dimension_from(row.at("dimension").get<std::string>()),
                           row.at("bins").get<int>(), row.at("entropy").get<double>()});
    }
    for (const auto& row : j.at("belief_curves")) {
      CurveRow c{Group::from_label(row.at("group").get<std::string>()),
                 row.at("condition").get<std::string>(),
                 {}};
      for (const auto& p : row.at("points")) {
        c.points.push_back({p.at("trial").get<int>(), p.at("mean").get<double>(), p.at("sd").get<double>()});
      }
      r.belief_curves.push_back(std::move(c));
    }
    for (const auto& row : j.at("correlations")) {
      CorrelationRow c{Group::from_label(row.at("group").get<std::string>()),
                       row.at("condition").get<std::string>(),
                       {}};
      c.report.pooled = opt_from(row.at("pooled"));
      c.report.mean_individual = opt_from(row.at("mean_individual"));
      for (const auto& i : row.at("individuals")) {
        c.report.individuals.push_back({i.at("session_id").get<std::string>(),
                                        i.at("profile_id").get<std::int64_t>(), opt_from(i.at("r"))});
      }
      r.correlations.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("analysis report: ") + e.what());
  }
}

// Delimited export ----------------------------------------------------------

namespace {

class Table {
 public:
  Table(char sep, std::vector<std::string> header) : sep_(sep) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << sep_;
      out_ << quote(cells[i]);
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::string quote(const std::string& s) const {
    if (s.find_first_of(std::string{sep_, '"', '\n', '\r'}) == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    q.push_back('"');
    return q;
  }

  char sep_;
  std::ostringstream out_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

}  // namespace

std::vector<std::filesystem::path> export_tables(const AnalysisReport& r,
                                                 const std::filesystem::path& dir,
                                                 ExportFormat format) {
  const char sep = format == ExportFormat::Csv ? ',' : '\t';
  const std::string ext = format == ExportFormat::Csv ? ".csv" : ".tsv";
  std::vector<std::filesystem::path> written;
  const auto emit = [&](const std::string& stem, const Table& t) {
    const auto path = dir / (stem + ext);
    write_text_atomic(path, t.str());
    written.push_back(path);
  };
  const auto str = [](auto v) { return std::to_string(v); };

  try {
    std::filesystem::create_directories(dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }

  Table t2(sep, {"group", "female_condition1", "female_condition2", "male_condition1",
                 "male_condition2", "score"});
  for (const auto& row : r.table2) {
    t2.row({row.group.name(), str(row.female_condition1), str(row.female_condition2),
            str(row.male_condition1), str(row.male_condition2), str(row.score)});
  }
  emit("table2", t2);

  Table rt(sep, {"group", "condition", "gender", "n_individuals", "n_trials", "n_accept", "n_reject",
                 "n_missing", "score", "acceptance_rate", "rejection_rate", "missing_rate"});
  for (const auto& row : r.rates) {
    const auto& s = row.stats;
    rt.row({row.group.name(), row.condition, row.gender, str(s.n_individuals), str(s.n_trials),
            str(s.n_accept), str(s.n_reject), str(s.n_missing), str(s.score), num(s.acceptance_rate),
            num(s.rejection_rate), num(s.missing_rate)});
  }
  emit("rates", rt);

  Table et(sep, {"group", "condition", "session_id", "profile_id", "dimension", "bins", "entropy"});
  for (const auto& row : r.entropy) {
    et.row({row.group.name(), row.condition, row.session_id, str(row.profile_id),
            std::string(to_string(row.dimension)), str(row.bin_count), num(row.entropy)});
  }
  emit("entropy", et);

  Table bt(sep, {"group", "condition", "trial", "mean", "sd"});
  for (const auto& row : r.belief_curves) {
    for (const auto& p : row.points) {
      bt.row({row.group.name(), row.condition, str(p.trial), num(p.mean), num(p.sd)});
    }
  }
  emit("belief_curves", bt);

  Table ct(sep, {"group", "condition", "level", "session_id", "profile_id", "r"});
  for (const auto& row : r.correlations) {
    ct.row({row.group.name(), row.condition, "pooled", "", "", num(row.report.pooled)});
    ct.row({row.group.name(), row.condition, "mean_individual", "", "", num(row.report.mean_individual)});
    for (const auto& i : row.report.individuals) {
      ct.row({row.group.name(), row.condition, "individual", i.session_id, str(i.profile_id), num(i.r)});
    }
  }
  emit("correlations", ct);

  // Plot-ready long format. Whole-session metrics leave `trial` empty.
  Table lt(sep, {"group", "condition", "trial", "metric", "value"});
  for (const auto& row : r.rates) {
    if (!row.gender.empty()) continue;
    lt.row({row.group.name(), row.condition, "", "score", str(row.stats.score)});
    lt.row({row.group.name(), row.condition, "", "acceptance_rate", num(row.stats.acceptance_rate)});
    lt.row({row.group.name(), row.condition, "", "rejection_rate", num(row.stats.rejection_rate)});
    lt.row({row.group.name(), row.condition, "", "missing_rate", num(row.stats.missing_rate)});
  }
  {
    // Mean entropy per group, condition and dimension, in first-seen order.
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> acc;
    for (const auto& row : r.entropy) {
      auto k = std::make_tuple(row.group.name(), row.condition,
                               "entropy_" + std::string(to_string(row.dimension)) + "_mean");
      auto [it, inserted] = acc.try_emplace(k, 0.0, 0);
      if (inserted) order.push_back(k);
      it->second.first += row.entropy;
      ++it->second.second;
    }
    for (const auto& k : order) {
      const auto& [sum, n] = acc.at(k);
      lt.row({std::get<0>(k), std::get<1>(k), "", std::get<2>(k), num(sum / n)});
    }
  }
  for (const auto& row : r.belief_curves) {
    for (const auto& p : row.points) {
      lt.row({row.group.name(), row.condition, str(p.trial), "belief_mean", num(p.mean)});
      lt.row({row.group.name(), row.condition, str(p.trial), "belief_sd", num(p.sd)});
    }
  }
  emit("long", lt);
  return written;
}

}  // namespace fms::analysis
