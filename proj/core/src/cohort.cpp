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

#include "fms/cohort.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fms/error.hpp"
#include "fms/mock_chat.hpp"
#include "text_util.hpp"

namespace fms {

using nlohmann::json;

std::vector<std::int64_t> CohortSpec::ids() const {
  std::vector<std::int64_t> out;
  for (const auto& [lo, hi] : id_ranges) {
    for (auto id = lo; id <= hi; ++id) out.push_back(id);
  }
  return out;
}

void RunConfig::validate() const {
  if (cohorts.empty()) throw Error(ErrorCode::BadConfig, "run has no cohorts");
  if (concurrency < 1) throw Error(ErrorCode::BadConfig, "concurrency must be at least 1");
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  for (const auto& c : cohorts) {
    if (c.id_ranges.empty()) throw Error(ErrorCode::BadConfig, "cohort '" + c.group + "' has no ids");
    if (!condition_files.count(detail::to_lower(c.condition))) {
      throw Error(ErrorCode::BadConfig, "cohort '" + c.group + "' uses unknown condition '" + c.condition + "'");
    }
    for (const auto& r : c.id_ranges) {
      if (r.first > r.second || r.first < 0) {
        throw Error(ErrorCode::BadConfig, "bad id range " + std::to_string(r.first) + "-" +
                                              std::to_string(r.second));
      }
      ranges.push_back(r);
    }
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first <= ranges[i - 1].second) {
      throw Error(ErrorCode::BadConfig, "id ranges overlap at " + std::to_string(ranges[i].first));
    }
  }
}

std::pair<std::int64_t, std::int64_t> parse_id_range(std::string_view text) {
  const auto t = detail::trim(text);
  const auto dash = t.find('-', 1);
  const auto num = [&](std::string_view s) {
    s = detail::trim(s);
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
      throw Error(ErrorCode::BadConfig, "bad id range '" + std::string(text) + "'");
    }
    return v;
  };
  if (dash == std::string_view::npos) {
    const auto v = num(t);
    return {v, v};
  }
  const auto lo = num(t.substr(0, dash));
  const auto hi = num(t.substr(dash + 1));
  if (lo > hi) throw Error(ErrorCode::BadConfig, "empty id range '" + std::string(text) + "'");
  return {lo, hi};
}

std::int64_t persona_source_id(std::int64_t agent_id) { return agent_id % 1000; }

std::string group_slug(std::string_view group) {
  std::string out;
  for (unsigned char c : group) {
    if (std::isalnum(c) || c == '.') {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "group" : out;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig e;
  e.url = j.value("url", e.url);
  e.model = j.value("model", e.model);
  e.temperature = j.value("temperature", e.temperature);
  e.api_key_env = j.value("api_key_env", e.api_key_env);
  e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
  e.max_concurrent = j.value("max_concurrent", e.max_concurrent);
  e.min_interval_seconds = j.value("min_interval_seconds", e.min_interval_seconds);
  if (j.contains("api_key")) {
    throw Error(ErrorCode::BadConfig, "api keys are read from the environment only; use api_key_env");
  }
  return e;
}

RetryPolicy retry_from_json(const json& j) {
  RetryPolicy r;
  r.max_attempts = j.value("max_attempts", r.max_attempts);
  if (j.contains("backoff_ms")) {
    r.backoff.clear();
    for (const auto& ms : j.at("backoff_ms")) r.backoff.emplace_back(ms.get<std::int64_t>());
  }
  if (r.max_attempts < 1) throw Error(ErrorCode::BadConfig, "retry.max_attempts must be at least 1");
  return r;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    RunConfig c;
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("runs")));
    c.profiles = resolve(base_dir, j.at("profiles").get<std::string>());
    for (const auto& [name, path] : j.at("conditions").items()) {
      c.condition_files[detail::to_lower(name)] = resolve(base_dir, path.get<std::string>());
    }
    c.penalty_mode = PenaltyMode::parse(j.value("penalty_mode", std::string("zero_out")));
    c.concurrency = j.value("concurrency", c.concurrency);
    c.seed = j.value("seed", c.seed);
    c.timestamps = j.value("timestamps", c.timestamps);
    for (const auto& cj : j.at("cohorts")) {
      CohortSpec s;
      s.group = cj.at("group").get<std::string>();
      s.condition = cj.at("condition").get<std::string>();
      for (const auto& r : cj.at("ids")) s.id_ranges.push_back(parse_id_range(r.get<std::string>()));
      const auto& pj = cj.at("participant");
      const auto kind = pj.at("kind").get<std::string>();
      if (kind == "scripted") {
        s.participant.kind = ParticipantSpec::Kind::Scripted;
        s.participant.policy = ScriptedPolicy::parse(pj.value("policy", std::string("always_accept")));
        if (pj.contains("emotion")) {
          s.participant.policy.emotion = pj.at("emotion").get<std::array<int, 2>>();
        }
      } else if (kind == "llm") {
        s.participant.kind = ParticipantSpec::Kind::Llm;
        s.participant.endpoint = endpoint_from_json(pj.at("endpoint"));
        if (pj.contains("retry")) s.participant.retry = retry_from_json(pj.at("retry"));
      } else {
        throw Error(ErrorCode::BadConfig, "participant kind must be 'scripted' or 'llm'");
      }
      c.cohorts.push_back(std::move(s));
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::BadConfig, std::string("run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const Exchange& ex, std::size_t history_prefix) {
  json msgs = json::array();
  for (std::size_t i = std::min(history_prefix, ex.request.size()); i < ex.request.size(); ++i) {
    msgs.push_back({{"role", ex.request[i].role}, {"content", ex.request[i].content}});
  }
  return json{{"trial", ex.trial},
              {"attempt", ex.attempt},
              {"history_messages", history_prefix},
              {"messages", std::move(msgs)},
              {"response", ex.response ? json(*ex.response) : json(nullptr)},
              {"error", ex.error ? json(*ex.error) : json(nullptr)}};
}

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SessionState replay_record(SessionState state, const TrialRecord& r) {
  if (r.decision == Decision::Missing) return fms::advance(state, ForfeitEvent{});
  state = fms::advance(state, EmotionEvent{r.reports.at(0).valence, r.reports.at(0).arousal});
  state = fms::advance(state, EmotionEvent{r.reports.at(1).valence, r.reports.at(1).arousal});
  state = fms::advance(state, DecideEvent{r.decision});
  return fms::advance(state, EmotionEvent{r.reports.at(2).valence, r.reports.at(2).arousal});
}

SessionState apply_turn(SessionState state, const std::optional<ParsedTurn>& turn) {
  if (!turn) return fms::advance(state, ForfeitEvent{});
  state = fms::advance(state, EmotionEvent{turn->post_allocation.valence, turn->post_allocation.arousal});
  state = fms::advance(state, EmotionEvent{turn->pre_decision.valence, turn->pre_decision.arousal});
  state = fms::advance(state, DecideEvent{turn->decision});
  return fms::advance(state, EmotionEvent{turn->post_decision.valence, turn->post_decision.arousal});
}

/// Exchange log lines kept for trials 1..completed, plus the last reply
/// received in each of those trials.
struct ExchangeLog {
  std::string kept;
  std::map<int, std::string> last_reply;
};

ExchangeLog read_exchange_log(const std::filesystem::path& path, int completed) {
  ExchangeLog log;
  if (!std::filesystem::exists(path)) return log;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      break;  // partially written final line
    }
    const int trial = j.at("trial").get<int>();
    if (trial > completed) continue;
    log.kept += line + "\n";
    if (!j.at("response").is_null()) log.last_reply[trial] = j.at("response").get<std::string>();
  }
  return log;
}

struct Job {
  std::size_t cohort = 0;
  std::int64_t id = 0;
};

}  // namespace

CohortResult run_llm_cohort(const RunConfig& config, const CohortHooks& hooks) {
  config.validate();
  const auto clock = hooks.clock ? hooks.clock : std::function<std::string()>(iso8601_now);
  const auto stamp = [&]() { return config.timestamps ? clock() : std::string{}; };
  const auto say = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };

  std::map<std::int64_t, Profile> profiles;
  for (auto& p : load_profiles(config.profiles)) profiles.emplace(p.id(), std::move(p));

  std::map<std::string, AllocationSchedule> schedules;
  for (const auto& [name, path] : config.condition_files) {
    schedules.emplace(name, load_condition_file(path, ConditionId::parse(name)));
  }

  // One throttled client per distinct endpoint.
  const auto factory = hooks.client_factory
                           ? hooks.client_factory
                           : [&config](const EndpointConfig& e) -> std::shared_ptr<ChatClient> {
                               if (e.url.rfind("mock://", 0) == 0 &&
                                   e.url.find("seed=") == std::string::npos) {
                                 auto cfg = parse_mock_url(e.url);
                                 cfg.seed = config.seed;
                                 return std::make_shared<MockChatClient>(cfg);
                               }
                               return make_chat_client(e);
                             };
  std::map<std::string, std::shared_ptr<ChatClient>> clients;
  for (const auto& c : config.cohorts) {
    if (c.participant.kind != ParticipantSpec::Kind::Llm) continue;
    const auto& e = c.participant.endpoint;
    const auto key = e.url + "|" + e.model;
    if (clients.count(key)) continue;
    clients[key] = std::make_shared<ThrottledChatClient>(
        factory(e), e.max_concurrent,
        std::chrono::nanoseconds(static_cast<std::int64_t>(e.min_interval_seconds * 1e9)));
  }

  std::vector<Job> jobs;
  for (std::size_t ci = 0; ci < config.cohorts.size(); ++ci) {
    for (auto id : config.cohorts[ci].ids()) jobs.push_back({ci, id});
  }

  struct Outcome {
    std::optional<TraceFile> trace;
    std::filesystem::path path;
    int played = 0;
    int resumed = 0;
    bool skipped = false;
  };
  std::vector<Outcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr first_error;

  const auto run_agent = [&](const Job& job, Outcome& out) {
    const auto& cohort = config.cohorts[job.cohort];
    const auto slug = group_slug(cohort.group);
    const auto dir = config.output_dir / slug;
    const auto id_str = std::to_string(job.id);
    const auto final_path = dir / (id_str + ".trace.json");
    const auto partial_path = dir / (id_str + ".partial.json");
    const auto exchanges_path = dir / (id_str + ".exchanges.jsonl");
    std::filesystem::create_directories(dir);

    if (std::filesystem::exists(final_path)) {
      auto t = read_trace(final_path);
      if (t.complete()) {
        out.trace = std::move(t);
        out.path = final_path;
        out.skipped = true;
        return;
      }
    }

    const auto src = profiles.find(persona_source_id(job.id));
    if (src == profiles.end()) {
      throw Error(ErrorCode::InvalidProfile, "no profile " + std::to_string(persona_source_id(job.id)) +
                                                 " for agent " + id_str);
    }
    const auto& sp = src->second;
    const auto profile =
        Profile::create(job.id, sp.age(), sp.gender(), sp.aq_answers(), sp.sds_answers());
    const auto& schedule = schedules.at(detail::to_lower(cohort.condition));

    const bool llm = cohort.participant.kind == ParticipantSpec::Kind::Llm;
    Provenance prov{llm ? "llm" : "scripted",
                    llm ? cohort.participant.endpoint.model : cohort.participant.policy.str(),
                    cohort.group,
                    "",
                    "",
                    config.seed};
    SessionState state(slug + "-" + id_str, job.id, schedule, config.penalty_mode);

    // Restore sealed trials, remembering each trial's prompt for LLM memory.
    std::vector<std::string> prompts;
    if (std::filesystem::exists(partial_path)) {
      const auto partial = read_trace(partial_path);
      prov.started_at = partial.provenance.started_at;
      for (const auto& r : partial.records) {
        prompts.push_back(render_trial_prompt(state, state.next_trial()));
        state = replay_record(state, r);
      }
      out.resumed = static_cast<int>(partial.records.size());
    } else {
      prov.started_at = stamp();
    }

    std::unique_ptr<Participant> participant;
    if (llm) {
      auto log = read_exchange_log(exchanges_path, out.resumed);
      write_text_atomic(exchanges_path, log.kept);
      auto history = initial_history(render_persona(profile), render_system_prompt(config.penalty_mode));
      const auto& e = cohort.participant.endpoint;
      // The sink runs inside play(), before the trial is added to memory, so
      // the current history length is the prefix shared by every attempt.
      auto self = std::make_shared<const LlmParticipant*>(nullptr);
      auto sink = [self, exchanges_path](const Exchange& ex) {
        const auto line = to_json(ex, (*self)->history().size()).dump() + "\n";
        std::ofstream f(exchanges_path, std::ios::app | std::ios::binary);
        f << line;
      };
      auto agent = std::make_unique<LlmParticipant>(clients.at(e.url + "|" + e.model), e,
                                                    cohort.participant.retry, std::move(history),
                                                    std::move(sink), hooks.sleeper);
      *self = agent.get();
      for (int j = 1; j <= out.resumed; ++j) {
        const auto it = log.last_reply.find(j);
        agent->remember(prompts[static_cast<std::size_t>(j - 1)],
                        it == log.last_reply.end() ? std::string{} : it->second);
      }
      participant = std::move(agent);
    } else {
      auto policy = cohort.participant.policy;
      if (policy.kind == ScriptedPolicy::Kind::Stochastic) {
        policy.seed = mix_seed(mix_seed(policy.seed, config.seed), static_cast<std::uint64_t>(job.id));
      }
      participant = std::make_unique<ScriptedParticipant>(policy);
    }

    const auto snapshot = [&](bool final) {
      TraceFile t{std::string(kTraceSchema), state.session_id(), profile, schedule.condition(),
                  config.penalty_mode, state.records(), prov};
      if (final) t.provenance.finished_at = stamp();
      return t;
    };

    int played = 0;
    while (state.stage() != Stage::SessionComplete && !abort.load()) {
      if (hooks.stop_after_trials && played >= *hooks.stop_after_trials) break;
      const int trial = state.next_trial();
      state = apply_turn(state, participant->play(state, trial));
      ++played;
      if (state.stage() != Stage::SessionComplete) write_trace(partial_path, snapshot(false));
    }
    out.played = played;

    if (state.stage() == Stage::SessionComplete) {
      auto t = snapshot(true);
      write_trace(final_path, t);
      std::filesystem::remove(partial_path);
      out.trace = std::move(t);
      out.path = final_path;
      say("agent " + id_str + " (" + cohort.group + "): R = " + std::to_string(out.trace->final_reward()));
    } else {
      out.trace = snapshot(false);
      out.path = partial_path;
    }
  };

  const auto worker = [&]() {
    while (!abort.load()) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        run_agent(jobs[i], outcomes[i]);
      } catch (...) {
        abort.store(true);
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.concurrency), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  CohortResult result;
  for (auto& o : outcomes) {
    result.trials_played += o.played;
    result.trials_resumed += o.resumed;
    result.agents_skipped += o.skipped ? 1 : 0;
    if (o.trace) {
      for (const auto& r : o.trace->records) result.missing += r.decision == Decision::Missing ? 1 : 0;
      result.traces.push_back(std::move(*o.trace));
      result.trace_paths.push_back(o.path);
    }
  }
  return result;
}

}  // namespace fms
