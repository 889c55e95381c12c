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

#include "fms/commands.hpp"

#include <sstream>

#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms::commands {

using nlohmann::json;

std::vector<belief::StepInputs> steps_from_trace(const TraceFile& trace) {
  std::vector<belief::StepInputs> steps;
  for (const auto& r : trace.records) {
    if (r.decision == Decision::Missing) continue;
    belief::StepInputs s;
    s.trial_index = r.allocation.trial_index;
    s.rejected = r.decision == Decision::Reject ? 1 : 0;
    s.unfairness = belief::environment_unfairness(r.allocation);
    if (r.reports.size() >= 2) s.arousal = analysis::normalize_emotion(r.reports[1].arousal);
    steps.push_back(s);
  }
  return steps;
}

namespace {

json temperature_json(const belief::TemperatureMode& t) {
  if (const auto* f = std::get_if<belief::FixedTemperature>(&t)) {
    return {{"mode", "fixed"}, {"value", f->value}};
  }
  const auto& e = std::get<belief::EmotionTemperature>(t);
  return {{"mode", "emotion"}, {"t_min", e.t_min}, {"t_max", e.t_max}};
}

belief::TemperatureMode temperature_from(const json& j) {
  const auto mode = j.value("mode", std::string("fixed"));
  if (mode == "fixed") return belief::FixedTemperature{j.value("value", 1.0)};
  if (mode == "emotion") {
    belief::EmotionTemperature e;
    e.t_min = j.value("t_min", e.t_min);
    e.t_max = j.value("t_max", e.t_max);
    return e;
  }
  throw Error(ErrorCode::BadConfig, "temperature mode must be 'fixed' or 'emotion'");
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

belief::FitConfig fit_config_from_json(const json& j) {
  try {
    belief::FitConfig c;
    c.beta1_init = j.value("beta1_init", c.beta1_init);
    c.beta2_init = j.value("beta2_init", c.beta2_init);
    if (j.contains("gamma_grid")) c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("bel0_grid")) c.bel0_grid = j.at("bel0_grid").get<std::vector<double>>();
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("temperature")) c.temperature = temperature_from(j.at("temperature"));
    c.grad_tol = j.value("grad_tol", c.grad_tol);
    c.belief_tol = j.value("belief_tol", c.belief_tol);
    c.max_inner_iterations = j.value("max_inner_iterations", c.max_inner_iterations);
    c.max_outer_iterations = j.value("max_outer_iterations", c.max_outer_iterations);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("fit config: ") + e.what());
  }
}

json to_json(const belief::FitConfig& c) {
  return json{{"beta1_init", c.beta1_init},
              {"beta2_init", c.beta2_init},
              {"gamma_grid", c.gamma_grid},
              {"bel0_grid", c.bel0_grid},
              {"epsilon", c.epsilon},
              {"temperature", temperature_json(c.temperature)},
              {"grad_tol", c.grad_tol},
              {"belief_tol", c.belief_tol},
              {"max_inner_iterations", c.max_inner_iterations},
              {"max_outer_iterations", c.max_outer_iterations},
              {"seed", c.seed}};
}

json to_json(const belief::Params& p) {
  return json{{"beta1", p.beta1},
              {"beta2", p.beta2},
              {"gamma", p.gamma},
              {"epsilon", p.epsilon},
              {"bel0", p.bel0},
              {"temperature", temperature_json(p.temperature)}};
}

belief::Params params_from_json(const json& j) {
  belief::Params p;
  p.beta1 = j.at("beta1").get<double>();
  p.beta2 = j.at("beta2").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.bel0 = j.at("bel0").get<double>();
  p.temperature = temperature_from(j.at("temperature"));
  return p;
}

json to_json(const FitRecord& r) {
  json j{{"schema_version", kFitSchema},
         {"session_id", r.session_id},
         {"profile_id", r.profile_id},
         {"group", r.group},
         {"condition", r.condition},
         {"gender", std::string(to_string(r.gender))}};
  json decisions = json::array();
  for (const auto& d : r.decision_by_trial) decisions.push_back(opt_int(d));
  j["decision_by_trial"] = std::move(decisions);
  if (!r.result) {
    j["status"] = std::string(to_string(ErrorCode::NonIdentifiable));
    j["error"] = r.error;
    return j;
  }
  const auto& f = *r.result;
  j["status"] = "ok";
  j["params"] = to_json(f.params);
  j["nll"] = f.nll;
  const auto& d = f.diagnostics;
  j["diagnostics"] = {{"grad_norm", d.grad_norm},
                      {"min_hessian_eigenvalue", d.min_hessian_eigenvalue},
                      {"iterations", d.iterations},
                      {"outer_iterations", d.outer_iterations},
                      {"converged", d.converged},
                      {"warning", d.warning ? json(std::string(to_string(*d.warning))) : json(nullptr)}};
  json traj = json::array();
  if (!f.trajectories.empty()) {
    for (const auto& s : f.trajectories.front().steps) {
      traj.push_back({{"trial", s.trial_index},
                      {"belief_prev", s.belief_prev},
                      {"belief", s.belief},
                      {"cf", s.cf},
                      {"p_reject", s.p_reject},
                      {"bdf", s.bdf},
                      {"reward_prev", s.reward_prev},
                      {"reward", s.reward},
                      {"temperature", s.temperature}});
    }
  }
  j["trajectory"] = std::move(traj);
  j["belief_by_trial"] = r.belief_by_trial;
  return j;
}

FitRecord fit_record_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<std::string>() != kFitSchema) {
      throw Error(ErrorCode::SchemaMismatch, "unrecognised fit schema");
    }
    FitRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.profile_id = j.at("profile_id").get<std::int64_t>();
    r.group = j.at("group").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    const auto g = gender_from_string(j.at("gender").get<std::string>());
    if (!g) throw Error(ErrorCode::SchemaMismatch, "unknown gender");
    r.gender = *g;
    for (const auto& d : j.at("decision_by_trial")) {
      r.decision_by_trial.push_back(d.is_null() ? std::nullopt : std::optional<int>(d.get<int>()));
    }
    if (j.at("status").get<std::string>() != "ok") {
      r.error = j.value("error", std::string{});
      return r;
    }
    belief::FitResult f;
    f.params = params_from_json(j.at("params"));
    f.nll = j.at("nll").get<double>();
    const auto& d = j.at("diagnostics");
    f.diagnostics.grad_norm = d.at("grad_norm").get<double>();
    f.diagnostics.min_hessian_eigenvalue = d.at("min_hessian_eigenvalue").get<double>();
    f.diagnostics.iterations = d.at("iterations").get<int>();
    f.diagnostics.outer_iterations = d.at("outer_iterations").get<int>();
    f.diagnostics.converged = d.at("converged").get<bool>();
    if (!d.at("warning").is_null()) {
      f.diagnostics.warning = error_code_from_string(d.at("warning").get<std::string>());
    }
    belief::BeliefTrajectory t;
    t.bel0 = f.params.bel0;
    for (const auto& s : j.at("trajectory")) {
      belief::StepRecord rec;
      rec.trial_index = s.at("trial").get<int>();
      rec.belief_prev = s.at("belief_prev").get<double>();
      rec.belief = s.at("belief").get<double>();
      rec.cf = s.at("cf").get<double>();
      rec.p_reject = s.at("p_reject").get<double>();
      rec.bdf = s.at("bdf").get<double>();
      rec.reward_prev = s.at("reward_prev").get<int>();
      rec.reward = s.at("reward").get<int>();
      rec.temperature = s.at("temperature").get<double>();
      t.steps.push_back(rec);
    }
    f.trajectories.push_back(std::move(t));
    r.result = std::move(f);
    r.belief_by_trial = j.at("belief_by_trial").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("fit record: ") + e.what());
  }
}

FitRecord fit_trace(const TraceFile& trace, const belief::FitConfig& config) {
  FitRecord r;
  r.session_id = trace.session_id;
  r.profile_id = trace.profile.id();
  r.group = analysis::group_of(trace).name();
  r.condition = trace.condition.name();
  r.gender = trace.profile.gender();
  for (const auto& rec : trace.records) {
    switch (rec.decision) {
      case Decision::Accept: r.decision_by_trial.emplace_back(0); break;
      case Decision::Reject: r.decision_by_trial.emplace_back(1); break;
      case Decision::Missing: r.decision_by_trial.emplace_back(std::nullopt); break;
    }
  }
  const auto steps = steps_from_trace(trace);
  try {
    r.result = belief::fit(steps, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonIdentifiable) throw;
    r.error = e.what();
    return r;
  }
  const auto& traj = r.result->trajectories.front();
  double bel = traj.bel0;
  std::size_t k = 0;
  for (const auto& rec : trace.records) {
    if (k < traj.steps.size() && traj.steps[k].trial_index == rec.allocation.trial_index) {
      bel = traj.steps[k++].belief;
    }
    r.belief_by_trial.push_back(bel);
  }
  return r;
}

void write_fit_file(const std::filesystem::path& path, std::span<const FitRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  write_text_atomic(path, out);
}

std::vector<FitRecord> read_fit_file(const std::filesystem::path& path) {
  std::vector<FitRecord> out;
  std::istringstream in(read_text(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(fit_record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<analysis::BeliefSeries> belief_series(std::span<const FitRecord> records) {
  std::vector<analysis::BeliefSeries> out;
  for (const auto& r : records) {
    if (!r.result) continue;
    analysis::BeliefSeries s;
    s.session_id = r.session_id;
    s.profile_id = r.profile_id;
    s.group = analysis::Group::from_label(r.group);
    s.condition = ConditionId::parse(r.condition);
    s.gender = r.gender;
    s.belief_by_trial = r.belief_by_trial;
    s.decision_by_trial = r.decision_by_trial;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TraceFile> load_all_traces(std::span<const std::filesystem::path> paths,
                                       bool include_incomplete, std::ostream& log) {
  std::vector<TraceFile> out;
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::IoError, "no such path " + p.string());
    for (auto& t : load_traces(p)) {
      if (!t.complete() && !include_incomplete) {
        log << "skipping incomplete trace " << t.session_id << " (" << t.records.size() << " trials)\n";
        continue;
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

int fit_command(const FitArgs& args, std::ostream& log) {
  args.config.validate();
  const auto traces = load_all_traces(args.traces, false, log);
  std::vector<FitRecord> records;
  int unfittable = 0, unconverged = 0;
  for (const auto& t : traces) {
    records.push_back(fit_trace(t, args.config));
    const auto& r = records.back();
    if (!r.result) {
      ++unfittable;
      log << "not identifiable: " << r.session_id << ": " << r.error << "\n";
    } else if (!r.result->diagnostics.converged) {
      ++unconverged;
      log << "did not converge: " << r.session_id << "\n";
    }
  }
  write_fit_file(args.output, records);
  log << "fitted " << (records.size() - static_cast<std::size_t>(unfittable)) << " of " << records.size()
      << " individuals";
  if (unconverged) log << " (" << unconverged << " hit the iteration limit)";
  log << " -> " << args.output.string() << "\n";
  return unfittable > 0 && !args.skip_unfittable ? 3 : 0;
}

int analyze_command(const AnalyzeArgs& args, std::ostream& log) {
  const auto traces = load_all_traces(args.traces, args.include_incomplete, log);
  std::vector<analysis::BeliefSeries> series;
  if (args.fits) {
    const auto records = read_fit_file(*args.fits);
    series = belief_series(records);
  }
  const auto report = analysis::analyze(traces, series, args.options);
  write_text_atomic(args.output, analysis::to_json(report).dump(2) + "\n");
  log << "analysed " << traces.size() << " traces";
  if (args.fits) log << " and " << series.size() << " fitted belief paths";
  log << " -> " << args.output.string() << "\n";
  if (args.tables_dir) {
    for (const auto& p : analysis::export_tables(report, *args.tables_dir)) log << "wrote " << p.string() << "\n";
  }
  return 0;
}

int export_command(const ExportArgs& args, std::ostream& log) {
  json j;
  try {
    j = json::parse(read_text(args.report));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaMismatch, args.report.string() + ": " + e.what());
  }
  const auto report = analysis::report_from_json(j);
  for (const auto& p : analysis::export_tables(report, args.output_dir, args.format)) {
    log << "wrote " << p.string() << "\n";
  }
  return 0;
}

}  // namespace fms::commands
