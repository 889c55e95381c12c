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

#include "fms/trace.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fms/error.hpp"
#include "text_util.hpp"

namespace fms {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::SchemaMismatch, what);
}

Money money_field(const json& j, const char* key) {
  try {
    return Money::parse(j.at(key).get<std::string>());
  } catch (const std::invalid_argument& e) {
    schema_error(std::string(key) + ": " + e.what());
  }
}

}  // namespace

int TraceFile::final_reward() const {
  int total = 0;
  for (const auto& r : records) total += r.reward;
  return total;
}

void TraceFile::validate() const {
  if (schema_version != kTraceSchema) schema_error("unrecognised schema '" + schema_version + "'");
  if (records.size() > kTrialsPerSession) schema_error("more than 20 trial records");
  int prev = 0;
  for (const auto& r : records) {
    if (r.allocation.trial_index <= prev || r.allocation.trial_index > kTrialsPerSession) {
      schema_error("trial indices must be strictly increasing within 1..20");
    }
    prev = r.allocation.trial_index;
    if (r.allocation.p1_keep + r.allocation.p2_get != kPot) {
      schema_error("trial " + std::to_string(prev) + ": allocation does not sum to 3.0");
    }
    const bool missing = r.decision == Decision::Missing;
    if (missing ? !r.reports.empty() : r.reports.size() != 3) {
      schema_error("trial " + std::to_string(prev) + ": wrong number of emotion reports");
    }
    const int expected_reward = missing ? 0 : r.payoff.p3_reward;
    if (r.reward != expected_reward) {
      schema_error("trial " + std::to_string(prev) + ": reward disagrees with payoff");
    }
  }
}

json to_json(const Profile& p) {
  return json{{"id", p.id()},
              {"age", p.age()},
              {"gender", std::string(to_string(p.gender()))},
              {"aq", p.aq_answers()},
              {"sds", p.sds_answers()}};
}

Profile profile_from_json(const json& j) {
  try {
    const auto gender = gender_from_string(j.at("gender").get<std::string>());
    if (!gender) throw Error(ErrorCode::InvalidProfile, "unknown gender");
    return Profile::create(j.at("id").get<std::int64_t>(), j.at("age").get<int>(), *gender,
                           j.at("aq").get<std::vector<int>>(), j.at("sds").get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidProfile, e.what());
  }
}

json to_json(const TrialRecord& r) {
  json reports = json::array();
  for (const auto& rep : r.reports) reports.push_back(json::array({rep.valence, rep.arousal}));
  return json{{"trial", r.allocation.trial_index},
              {"p1_keep", r.allocation.p1_keep.str()},
              {"p2_get", r.allocation.p2_get.str()},
              {"reports", std::move(reports)},
              {"decision", std::string(to_string(r.decision))},
              {"payoff",
               {{"p1_final", r.payoff.p1_final.str()},
                {"p2_final", r.payoff.p2_final.str()},
                {"p3_reward", r.payoff.p3_reward}}},
              {"reward", r.reward}};
}

TrialRecord trial_record_from_json(const json& j) {
  try {
    TrialRecord r;
    r.allocation = {j.at("trial").get<int>(), money_field(j, "p1_keep"), money_field(j, "p2_get")};
    static constexpr std::array<EmotionPhase, 3> kPhases{
        EmotionPhase::PostAllocation, EmotionPhase::PreDecision, EmotionPhase::PostDecision};
    const auto& reports = j.at("reports");
    if (reports.size() > 3) schema_error("more than three emotion reports");
    for (std::size_t i = 0; i < reports.size(); ++i) {
      r.reports.push_back(validate_emotion(reports[i].at(0).get<int>(), reports[i].at(1).get<int>(),
                                           kPhases[i]));
    }
    const auto d = decision_from_string(j.at("decision").get<std::string>());
    if (!d) schema_error("unknown decision");
    r.decision = *d;
    const auto& pay = j.at("payoff");
    r.payoff = {money_field(pay, "p1_final"), money_field(pay, "p2_final"),
                pay.at("p3_reward").get<int>()};
    r.reward = j.at("reward").get<int>();
    return r;
  } catch (const json::exception& e) {
    schema_error(std::string("trial record: ") + e.what());
  }
}

json to_json(const TraceFile& t) {
  json records = json::array();
  for (const auto& r : t.records) records.push_back(to_json(r));
  json prov{{"participant_kind", t.provenance.participant_kind},
            {"agent", t.provenance.agent},
            {"group", t.provenance.group},
            {"started_at", t.provenance.started_at},
            {"finished_at", t.provenance.finished_at},
            {"seed", t.provenance.seed ? json(*t.provenance.seed) : json(nullptr)}};
  return json{{"schema_version", t.schema_version},
              {"session_id", t.session_id},
              {"profile", to_json(t.profile)},
              {"condition", t.condition.name()},
              {"penalty_mode", t.penalty_mode.str()},
              {"records", std::move(records)},
              {"provenance", std::move(prov)}};
}

TraceFile trace_from_json(const json& j) {
  try {
    const auto version = j.at("schema_version").get<std::string>();
    if (version != kTraceSchema) schema_error("unrecognised schema '" + version + "'");
    std::vector<TrialRecord> records;
    for (const auto& r : j.at("records")) records.push_back(trial_record_from_json(r));
    const auto& p = j.at("provenance");
    Provenance prov{p.at("participant_kind").get<std::string>(),
                    p.at("agent").get<std::string>(),
                    p.value("group", std::string{}),
                    p.value("started_at", std::string{}),
                    p.value("finished_at", std::string{}),
                    std::nullopt};
    if (p.contains("seed") && !p.at("seed").is_null()) prov.seed = p.at("seed").get<std::uint64_t>();
    TraceFile t{version,
                j.at("session_id").get<std::string>(),
                profile_from_json(j.at("profile")),
                ConditionId::parse(j.at("condition").get<std::string>()),
                PenaltyMode::parse(j.at("penalty_mode").get<std::string>()),
                std::move(records),
                std::move(prov)};
    t.validate();
    return t;
  } catch (const json::exception& e) {
    schema_error(std::string("trace: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    schema_error(e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_trace(const std::filesystem::path& path, const TraceFile& trace) {
  write_text_atomic(path, to_json(trace).dump(2) + "\n");
}

TraceFile read_trace(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  return trace_from_json(j);
}

namespace {

void load_bundle(const std::filesystem::path& path, std::vector<TraceFile>& out) {
  std::istringstream in(read_text(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(trace_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaMismatch,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<TraceFile> load_traces(const std::filesystem::path& path) {
  std::vector<TraceFile> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      const bool trace = name.size() > 11 && name.ends_with(".trace.json");
      const bool bundle = name.ends_with(".traces.jsonl");
      if (trace || bundle) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (f.extension() == ".jsonl") {
        load_bundle(f, out);
      } else {
        out.push_back(read_trace(f));
      }
    }
  } else if (path.extension() == ".jsonl") {
    load_bundle(path, out);
  } else {
    out.push_back(read_trace(path));
  }
  return out;
}

std::vector<Profile> load_profiles(const std::filesystem::path& path) {
  std::vector<Profile> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(profile_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidProfile, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace fms
