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

// JSON-over-HTTP front end for live participant sessions.
//
//   POST /sessions                  {"profile": {...} | "profile_id": n,
//                                    "condition": "condition1",
//                                    "condition_csv": "...",   (optional)
//                                    "penalty_mode": "zero_out"} (optional)
//   GET  /sessions/{id}
//   POST /sessions/{id}/emotions    {"valence": v, "arousal": a}
//   POST /sessions/{id}/decision    {"decision": "accept" | "reject"}
//   GET  /sessions/{id}/trace       complete sessions only
//
// Errors: {"error": {"code": "StageMismatch", "message": "..."}} with 400
// (malformed body), 404 (unknown session), 409 (wrong stage, session
// complete or incomplete) or 422 (invalid values).

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include "fms/error.hpp"
#include "fms/session_store.hpp"

namespace fms {

struct ServiceConfig {
  std::filesystem::path store_root = "sessions";
  /// Named schedules, keyed by lower-case condition name.
  std::map<std::string, AllocationSchedule> conditions;
  /// Profiles addressable by "profile_id".
  std::map<std::int64_t, Profile> profiles;
  PenaltyMode default_penalty = PenaltyMode::zero_out();
  SessionStoreOptions store_options;
  std::string cors_origin = "*";
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

class HttpService {
 public:
  explicit HttpService(ServiceConfig config);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port. Throws Error{IoError}.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();
  /// Asks the server to shut down without waiting; safe from another thread.
  void request_stop();
  /// Blocks until a server started with start() shuts down.
  void wait();

  SessionStore& store() { return store_; }

 private:
  struct Impl;
  ServiceConfig config_;
  SessionStore store_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace fms
