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

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fms/belief_model.hpp"
#include "fms/participants.hpp"
#include "fms/protocol.hpp"
#include "fms/trace.hpp"

namespace fms::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_dir();
std::filesystem::path data_dir();

AllocationSchedule condition1();
AllocationSchedule condition2();

/// Valid profile with answers derived from the id.
Profile make_profile(std::int64_t id, Gender gender = Gender::Female, int age = 22);

/// Plays a full session with the given decisions (Missing seals via Forfeit).
TraceFile play_trace(const std::string& session_id, const Profile& profile,
                     const AllocationSchedule& schedule, const std::vector<Decision>& decisions,
                     PenaltyMode mode = PenaltyMode::zero_out(), const std::string& group = "");

/// Random StepInputs of the given length.
std::vector<belief::StepInputs> random_steps(std::mt19937_64& rng, int n, bool with_arousal);

}  // namespace fms::testing
