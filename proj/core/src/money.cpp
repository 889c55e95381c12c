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

#include "fms/money.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

#include "text_util.hpp"

namespace fms {

Money Money::parse(std::string_view text) {
  auto s = detail::trim(text);
  const std::string original(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  auto whole = s.substr(0, dot);
  auto frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  auto all_digits = [](std::string_view d) {
    for (char c : d) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
  };
  if (whole.empty() || !all_digits(whole) || !all_digits(frac) || frac.size() > 1 ||
      (dot != std::string_view::npos && frac.empty()) || whole.size() > 15) {
    throw std::invalid_argument("not a one-decimal amount: '" + original + "'");
  }
  std::int64_t t = std::strtoll(std::string(whole).c_str(), nullptr, 10) * 10;
  if (!frac.empty()) t += frac.front() - '0';
  return Money(negative ? -t : t);
}

std::string Money::str() const {
  const std::int64_t mag = tenths_ < 0 ? -tenths_ : tenths_;
  std::string out = tenths_ < 0 ? "-" : "";
  out += std::to_string(mag / 10);
  out += '.';
  out += static_cast<char>('0' + mag % 10);
  return out;
}

}  // namespace fms
