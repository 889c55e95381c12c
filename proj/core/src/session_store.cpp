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

#include "fms/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <random>

#include "fms/error.hpp"

namespace fms {

using nlohmann::json;

namespace {

constexpr std::string_view kSessionSchema = "fms.session/1";

void append_line(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoError, "open " + path.string() + ": " + std::strerror(errno));
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(ErrorCode::IoError, "append " + path.string() + ": " + std::strerror(err));
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int w = 0; w < 2; ++w) {
    auto v = gen();
    for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(kHex[v & 0xf]);
  }
  return id;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (unsigned char c : id) {
    if (!std::isalnum(c) && c != '-' && c != '_') return false;
  }
  return true;
}

}  // namespace

PublicState public_state(const SessionState& state) {
  PublicState s;
  s.session_id = state.session_id();
  s.profile_id = state.profile_id();
  s.condition = state.schedule().condition().name();
  s.penalty_mode = state.penalty_mode();
  s.stage = state.stage();
  s.trial = state.next_trial();
  s.trials_completed = static_cast<int>(state.records().size());
  s.complete = state.stage() == Stage::SessionComplete;
  if (!s.complete) s.allocation = state.schedule().at(s.trial);
  if ((state.stage() == Stage::TrialComplete || s.complete) && !state.records().empty()) {
    s.last_trial = state.records().back();
  }
  return s;
}

json to_json(const PublicState& s) {
  json j{{"session_id", s.session_id},
         {"profile_id", s.profile_id},
         {"condition", s.condition},
         {"penalty_mode", s.penalty_mode.str()},
         {"stage", std::string(to_string(s.stage))},
         {"trial", s.trial},
         {"trials_total", kTrialsPerSession},
         {"trials_completed", s.trials_completed},
         {"complete", s.complete}};
  if (s.allocation) {
    j["allocation"] = {{"trial", s.allocation->trial_index},
                       {"p1_keep", s.allocation->p1_keep.str()},
                       {"p2_get", s.allocation->p2_get.str()}};
  } else {
    j["allocation"] = nullptr;
  }
  if (s.last_trial) {
    const auto& r = *s.last_trial;
    j["last_trial"] = {{"trial", r.allocation.trial_index},
                       {"decision", std::string(to_string(r.decision))},
                       {"payoff",
                        {{"p1_final", r.payoff.p1_final.str()},
                         {"p2_final", r.payoff.p2_final.str()},
                         {"p3_reward", r.payoff.p3_reward}}}};
  } else {
    j["last_trial"] = nullptr;
  }
  return j;
}

json event_to_json(const SessionEvent& event) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, EmotionEvent>) {
          return {{"type", "emotion"}, {"valence", e.valence}, {"arousal", e.arousal}};
        } else if constexpr (std::is_same_v<T, DecideEvent>) {
          return {{"type", "decision"}, {"decision", std::string(to_string(e.decision))}};
        } else {
          return {{"type", "forfeit"}};
        }
      },
      event);
}

SessionEvent event_from_json(const json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "emotion") return EmotionEvent{j.at("valence").get<int>(), j.at("arousal").get<int>()};
    if (type == "decision") {
      const auto d = decision_from_string(j.at("decision").get<std::string>());
      if (!d) throw Error(ErrorCode::BadRequest, "unknown decision");
      return DecideEvent{*d};
    }
    if (type == "forfeit") return ForfeitEvent{};
    throw Error(ErrorCode::BadRequest, "unknown event type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("event: ") + e.what());
  }
}

SessionStore::SessionStore(std::filesystem::path root, SessionStoreOptions options)
    : root_(std::move(root)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = iso8601_now;
  if (!options_.new_id) options_.new_id = random_id;
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoError, "create " + root_.string() + ": " + ec.message());
}

PublicState SessionStore::create(const Profile& profile, const AllocationSchedule& schedule,
                                 PenaltyMode penalty_mode) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    do {
      id = options_.new_id();
    } while (open_.count(id) || std::filesystem::exists(dir(id)));
  }
  if (!valid_id(id)) throw Error(ErrorCode::BadConfig, "invalid session id '" + id + "'");
  const auto started = options_.clock();
  json meta{{"schema_version", kSessionSchema},
            {"session_id", id},
            {"profile", to_json(profile)},
            {"condition", schedule.condition().name()},
            {"schedule", format_condition_csv(schedule)},
            {"penalty_mode", penalty_mode.str()},
            {"started_at", started}};
  std::filesystem::create_directories(dir(id));
  write_text_atomic(dir(id) / "session.json", meta.dump(2) + "\n");
  write_text_atomic(dir(id) / "events.jsonl", "");

  auto e = std::make_shared<Entry>(id, profile, started,
                                   SessionState(id, profile.id(), schedule, penalty_mode), 0);
  write_snapshot(*e);
  auto state = public_state(e->state);
  std::lock_guard lock(mu_);
  open_.emplace(id, std::move(e));
  return state;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    if (auto it = open_.find(id); it != open_.end()) return it->second;
  }
  auto loaded = load(id);
  std::lock_guard lock(mu_);
  // Another thread may have loaded it meanwhile; keep the first.
  return open_.emplace(id, std::move(loaded)).first->second;
}

std::shared_ptr<SessionStore::Entry> SessionStore::load(const std::string& id) {
  if (!valid_id(id) || !std::filesystem::exists(dir(id) / "session.json")) {
    throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
  }
  json meta;
  try {
    meta = json::parse(read_text(dir(id) / "session.json"));
    if (meta.at("schema_version").get<std::string>() != kSessionSchema) {
      throw Error(ErrorCode::SchemaMismatch, "session " + id + ": unrecognised schema");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, "session " + id + ": " + e.what());
  }
  const auto profile = profile_from_json(meta.at("profile"));
  const auto schedule = parse_condition_csv(meta.at("schedule").get<std::string>(),
                                            ConditionId::parse(meta.at("condition").get<std::string>()));
  auto e = std::make_shared<Entry>(
      id, profile, meta.value("started_at", std::string{}),
      SessionState(id, profile.id(), schedule, PenaltyMode::parse(meta.at("penalty_mode").get<std::string>())),
      0);

  const auto log_path = dir(id) / "events.jsonl";
  const std::string log = std::filesystem::exists(log_path) ? read_text(log_path) : std::string{};
  std::size_t pos = 0, good_end = 0;
  while (pos < log.size()) {
    const auto nl = log.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail: the append never completed
    const auto line = log.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      good_end = pos;
      continue;
    }
    try {
      e->state = fms::advance(e->state, event_from_json(json::parse(line)));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::SchemaMismatch, "session " + id + ": bad event log line: " + ex.what());
    }
    ++e->events;
    good_end = pos;
  }
  if (good_end < log.size()) {
    // Drop the partial line so the next append starts on a fresh line.
    std::filesystem::resize_file(log_path, good_end);
  }
  write_snapshot(*e);
  return e;
}

PublicState SessionStore::get(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return public_state(e->state);
}

PublicState SessionStore::submit(const std::string& id, const SessionEvent& event) {
  auto e = entry(id);
  std::unique_lock lock(e->mu, std::defer_lock);
  if (options_.in_flight == InFlightPolicy::Queue) {
    lock.lock();
  } else if (!lock.try_lock()) {
    throw Error(ErrorCode::StageMismatch, "another event for session " + id + " is in flight");
  }
  auto next = fms::advance(e->state, event);  // validates before anything is persisted
  append_line(dir(id) / "events.jsonl", event_to_json(event).dump());
  e->state = std::move(next);
  ++e->events;
  write_snapshot(*e);
  if (e->state.stage() == Stage::SessionComplete) {
    write_trace(dir(id) / (id + ".trace.json"), make_trace(*e, options_.clock()));
  }
  return public_state(e->state);
}

TraceFile SessionStore::trace(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  if (e->state.stage() != Stage::SessionComplete) {
    throw Error(ErrorCode::SessionIncomplete,
                "session " + id + " has " + std::to_string(e->state.records().size()) + " of 20 trials");
  }
  const auto path = dir(id) / (id + ".trace.json");
  if (std::filesystem::exists(path)) return read_trace(path);
  auto t = make_trace(*e, options_.clock());
  write_trace(path, t);
  return t;
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& d : std::filesystem::directory_iterator(root_)) {
    if (d.is_directory() && std::filesystem::exists(d.path() / "session.json")) {
      ids.push_back(d.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SessionStore::write_snapshot(const Entry& e) {
  json snap = to_json(public_state(e.state));
  snap["events_applied"] = e.events;
  write_text_atomic(dir(e.id) / "snapshot.json", snap.dump(2) + "\n");
}

TraceFile SessionStore::make_trace(const Entry& e, const std::string& finished_at) const {
  return TraceFile{std::string(kTraceSchema),
                   e.id,
                   e.profile,
                   e.state.schedule().condition(),
                   e.state.penalty_mode(),
                   e.state.records(),
                   Provenance{"human", "human", "Human", e.started_at, finished_at, std::nullopt}};
}

}  // namespace fms
