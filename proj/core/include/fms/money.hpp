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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fms {

/// An RMB amount held as an integer count of tenths (0.1 RMB). Every amount
/// in the game has one fractional digit, so sums such as keep + give == 3.0
/// are exact.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money tenths(std::int64_t t) { return Money(t); }
  static constexpr Money rmb(std::int64_t whole) { return Money(whole * 10); }

  /// Parses "2.0", "2", "-1.0", "0.3". More than one fractional digit is
  /// rejected with std::invalid_argument.
  static Money parse(std::string_view text);

  constexpr std::int64_t in_tenths() const { return tenths_; }
  constexpr double as_double() const { return static_cast<double>(tenths_) / 10.0; }

  /// Always renders one fractional digit: "2.0", "-1.0", "0.3".
  std::string str() const;

  constexpr Money operator+(Money o) const { return Money(tenths_ + o.tenths_); }
  constexpr Money operator-(Money o) const { return Money(tenths_ - o.tenths_); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t t) : tenths_(t) {}
  std::int64_t tenths_ = 0;
};

inline constexpr Money kPot = Money::rmb(3);

}  // namespace fms
