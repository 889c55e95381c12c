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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fms {

/// Machine-readable failure categories. The string form returned by
/// to_string() is part of the HTTP and CLI contract and must not change.
enum class ErrorCode {
  // schedule construction
  WrongLength,
  SumViolation,
  UnfairnessRange,
  // protocol state machine
  MissingDecision,
  StageMismatch,
  SessionAlreadyComplete,
  EmotionOutOfRange,
  // response parsing
  MissingField,
  UnparsableNumber,
  AmbiguousDecision,
  // chat transport
  TransportError,
  AuthError,
  // belief model
  BadConfig,
  NonIdentifiable,
  MaxIterations,
  // analysis
  MixedLengths,
  InsufficientData,
  EmptyInput,
  // harness
  IoError,
  SchemaMismatch,
  InvalidProfile,
  InvalidCondition,
  UnknownSession,
  SessionIncomplete,
  BadRequest,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fms
