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

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace pulsesync {

// All times are integer nanoseconds. Real and local timestamps share the
// representation; the names only document which clock a value belongs to.
using Duration = std::int64_t;
using RealTime = std::int64_t;
using LocalTime = std::int64_t;

inline constexpr Duration kNanosPerSecond = 1'000'000'000;
inline constexpr Duration kNever = std::numeric_limits<Duration>::max();

constexpr Duration seconds(double s) { return static_cast<Duration>(s * 1e9); }
constexpr Duration millis(std::int64_t ms) { return ms * 1'000'000; }

// Accepts "<number><unit>" with unit in {ns, us, ms, s}, or a bare integer
// (nanoseconds). Returns nullopt on malformed input or overflow.
std::optional<Duration> parse_duration(std::string_view text);

// Compact human form, e.g. "33.333333333s", "14s", "250ms".
std::string format_duration(long double ns);

}  // namespace pulsesync
