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

#include "pulsesync/clock.hpp"

#include <cmath>
#include <limits>

namespace pulsesync {
namespace {

using i128 = __int128;

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i128 ceil_div(i128 a, i128 b) { return -floor_div(-a, b); }

std::int64_t narrow(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    throw ClockRangeError("clock conversion overflows 64-bit time");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

LocalTime Clock::real_to_local(RealTime t) const {
  return narrow(floor_div(static_cast<i128>(rate_num) * (static_cast<i128>(t) - offset),
                          kRateDenominator));
}

RealTime Clock::local_to_real(LocalTime local) const {
  // rate_num·(t − offset) ≥ local·10^9  ⇔  t − offset ≥ ceil(local·10^9 / rate_num)
  return narrow(static_cast<i128>(offset) +
                ceil_div(static_cast<i128>(local) * kRateDenominator, rate_num));
}

std::int64_t min_rate_num(double rho) {
  return static_cast<std::int64_t>(
      std::ceil((1.0L - static_cast<long double>(rho)) * Clock::kRateDenominator - 1e-6L));
}

std::int64_t max_rate_num(double rho) {
  return static_cast<std::int64_t>(
      std::floor((1.0L + static_cast<long double>(rho)) * Clock::kRateDenominator + 1e-6L));
}

Clock sample_clock(double rho, Rng& rng) {
  Clock c;
  c.rate_num = rng.range(min_rate_num(rho), max_rate_num(rho));
  return c;
}

}  // namespace pulsesync
