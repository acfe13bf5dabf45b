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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pulsesync/clock.hpp"
#include "pulsesync/network.hpp"
#include "pulsesync/params.hpp"
#include "pulsesync/protocol.hpp"
#include "pulsesync/trace.hpp"

namespace pulsesync {

enum class InitialState { kSynchronized, kRandomPhases, kAdversarialPools };

std::string_view to_string(InitialState s);
std::optional<InitialState> parse_initial_state(std::string_view text);

enum class ClockMode { kSampled, kNominal, kFastSlow, kExplicit };

struct ClockSpec {
  ClockMode mode = ClockMode::kSampled;
  // kExplicit: one rate numerator (denominator 10^9) per node.
  std::vector<std::int64_t> rate_nums;
};

struct ByzantineSpec {
  NodeId id = 0;
  StrategyKind strategy = StrategyKind::kSilent;
  StrategyParams params;
};

struct Scenario {
  ProtocolParams params;
  DelayModel delay_model = DelayModel::kUniform;
  std::uint64_t seed = 0;
  double duration_cycles = 10;
  std::vector<ByzantineSpec> byzantine;
  InitialState initial_state = InitialState::kRandomPhases;
  // Per-node elapsed time since the last pulse at coherence start; overrides
  // the phases drawn for `initial_state` when present.
  std::optional<std::vector<Duration>> initial_elapsed;
  RealTime chaos_until = 0;
  ClockSpec clocks;
  TraceDetail detail = TraceDetail::kFiresDeliveries;
  std::size_t max_queue = 1'000'000;
  std::uint64_t max_events = 200'000'000;

  RealTime end_real() const;
};

class ScenarioInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EventOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ScenarioInvalid for inconsistent scenarios.
void check_scenario(const Scenario& scenario);

std::vector<Clock> make_clocks(const Scenario& scenario);

// Initial per-node protocol state at local time `local_start[i]`.
std::vector<NodeState> inject_arbitrary_state(const Scenario& scenario,
                                              const ProtocolContext& ctx,
                                              const std::vector<LocalTime>& local_start);

struct RunStats {
  std::uint64_t events = 0;
  std::uint64_t correct_fires = 0;
  std::uint64_t faulty_messages = 0;
};

struct RunResult {
  Trace trace;
  RunStats stats;
};

RunResult run(const Scenario& scenario);

}  // namespace pulsesync
