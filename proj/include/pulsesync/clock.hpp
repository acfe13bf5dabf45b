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
#include <stdexcept>

#include "pulsesync/rng.hpp"
#include "pulsesync/time.hpp"

namespace pulsesync {

class ClockRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Drifting local clock. The rate is the exact rational rate_num / 10^9 local
// ticks per real nanosecond; `offset` is the real time of local zero.
struct Clock {
  static constexpr std::int64_t kRateDenominator = 1'000'000'000;

  std::int64_t rate_num = kRateDenominator;
  RealTime offset = 0;

  // floor(rate·(t − offset))
  LocalTime real_to_local(RealTime t) const;
  // Earliest real time t with real_to_local(t) ≥ local.
  RealTime local_to_real(LocalTime local) const;

  long double rate() const {
    return static_cast<long double>(rate_num) / static_cast<long double>(kRateDenominator);
  }
};

// Numerator range admissible for drift bound ρ: [ceil((1−ρ)·10^9), floor((1+ρ)·10^9)].
std::int64_t min_rate_num(double rho);
std::int64_t max_rate_num(double rho);

Clock sample_clock(double rho, Rng& rng);

}  // namespace pulsesync
