// Copyright 2026 The pulsesync Authors
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

#include "pulsesync/time.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace pulsesync {

std::optional<Duration> parse_duration(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
    ++pos;
  }
  std::string_view number = text.substr(0, pos);
  std::string_view unit = text.substr(pos);
  if (number.empty() || number.front() == '.' || number.back() == '.') return std::nullopt;
  if (number.find('.') != number.rfind('.')) return std::nullopt;

  long double scale = 1.0L;
  if (unit.empty() || unit == "ns") {
    scale = 1.0L;
  } else if (unit == "us") {
    scale = 1e3L;
  } else if (unit == "ms") {
    scale = 1e6L;
  } else if (unit == "s") {
    scale = 1e9L;
  } else {
    return std::nullopt;
  }

  // Split integer and fraction so "0.1s" is exactly 100000000 ns.
  std::size_t dot = number.find('.');
  std::string whole(number.substr(0, dot));
  std::string frac = dot == std::string_view::npos ? "" : std::string(number.substr(dot + 1));
  if (whole.size() > 18) return std::nullopt;
  long double value = std::stold(whole);
  if (!frac.empty()) value += std::stold("0." + frac);
  long double ns = std::round(value * scale);
  if (ns > static_cast<long double>(std::numeric_limits<Duration>::max() / 2)) {
    return std::nullopt;
  }
  if (unit.empty() || unit == "ns") {
    if (!frac.empty()) return std::nullopt;
  }
  return static_cast<Duration>(ns);
}

std::string format_duration(long double ns) {
  char buf[64];
  long double abs_ns = std::fabs(ns);
  if (abs_ns >= 1e9L) {
    std::snprintf(buf, sizeof buf, "%.9Lf", ns / 1e9L);
  } else if (abs_ns >= 1e6L) {
    std::snprintf(buf, sizeof buf, "%.6Lf", ns / 1e6L);
  } else if (abs_ns >= 1e3L) {
    std::snprintf(buf, sizeof buf, "%.3Lf", ns / 1e3L);
  } else {
    std::snprintf(buf, sizeof buf, "%.3Lf", ns);
  }
  std::string out(buf);
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (abs_ns >= 1e9L) return out + "s";
  if (abs_ns >= 1e6L) return out + "ms";
  if (abs_ns >= 1e3L) return out + "us";
  return out + "ns";
}

}  // namespace pulsesync
