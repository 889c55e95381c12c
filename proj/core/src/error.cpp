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

#include "fms/error.hpp"

#include <array>
#include <utility>

namespace fms {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 25> kNames{{
    {ErrorCode::WrongLength, "WrongLength"},
    {ErrorCode::SumViolation, "SumViolation"},
    {ErrorCode::UnfairnessRange, "UnfairnessRange"},
    {ErrorCode::MissingDecision, "MissingDecision"},
    {ErrorCode::StageMismatch, "StageMismatch"},
    {ErrorCode::SessionAlreadyComplete, "SessionAlreadyComplete"},
    {ErrorCode::EmotionOutOfRange, "EmotionOutOfRange"},
    {ErrorCode::MissingField, "MissingField"},
    {ErrorCode::UnparsableNumber, "UnparsableNumber"},
    {ErrorCode::AmbiguousDecision, "AmbiguousDecision"},
    {ErrorCode::TransportError, "TransportError"},
    {ErrorCode::AuthError, "AuthError"},
    {ErrorCode::BadConfig, "BadConfig"},
    {ErrorCode::NonIdentifiable, "NonIdentifiable"},
    {ErrorCode::MaxIterations, "MaxIterations"},
    {ErrorCode::MixedLengths, "MixedLengths"},
    {ErrorCode::InsufficientData, "InsufficientData"},
    {ErrorCode::EmptyInput, "EmptyInput"},
    {ErrorCode::IoError, "IoError"},
    {ErrorCode::SchemaMismatch, "SchemaMismatch"},
    {ErrorCode::InvalidProfile, "InvalidProfile"},
    {ErrorCode::InvalidCondition, "InvalidCondition"},
    {ErrorCode::UnknownSession, "UnknownSession"},
    {ErrorCode::SessionIncomplete, "SessionIncomplete"},
    {ErrorCode::BadRequest, "BadRequest"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

}  // namespace fms
