// Copyright 2026 The ChronoGate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "chronogate/error.hpp"

namespace chronogate {

/// Proleptic Gregorian calendar date, day precision.
struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  friend auto operator<=>(const Date&, const Date&) = default;
};

inline bool is_leap_year(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return kDays[month - 1];
}

inline bool is_valid_date(const Date& d) {
  return d.year >= 1 && d.year <= 9999 && d.month >= 1 && d.month <= 12 &&
         d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

inline std::string to_string(const Date& d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

/// Accepts "YYYY-MM-DD" or a bare "YYYY" (normalized to January 1 of that
/// year, as documented in the dataset format).
inline Date parse_date(std::string_view text) {
  auto digits = [](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  Date d;
  if (text.size() == 4 && digits(text)) {
    d = Date{std::stoi(std::string(text)), 1, 1};
  } else if (text.size() == 10 && text[4] == '-' && text[7] == '-' &&
             digits(text.substr(0, 4)) && digits(text.substr(5, 2)) &&
             digits(text.substr(8, 2))) {
    d = Date{std::stoi(std::string(text.substr(0, 4))),
             std::stoi(std::string(text.substr(5, 2))),
             std::stoi(std::string(text.substr(8, 2)))};
  } else {
    raise(Errc::malformed_line, "bad date '" + std::string(text) + "' (want YYYY-MM-DD or YYYY)");
  }
  if (!is_valid_date(d))
    raise(Errc::out_of_range, "invalid calendar date '" + std::string(text) + "'");
  return d;
}

}  // namespace chronogate
