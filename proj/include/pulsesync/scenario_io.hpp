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

// Scenario files, sweep specs and analysis reports. See docs/scenario.md.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pulsesync/analysis.hpp"
#include "pulsesync/engine.hpp"

namespace pulsesync {

class ScenarioFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses and validates a scenario document. Unknown keys are rejected.
// Durations are integers (ns) or strings with a unit suffix ("100s", "5ms").
// Throws ScenarioFileError for malformed input, ParamsError for inadmissible
// parameters, and ScenarioInvalid for inconsistent scenarios.
Scenario parse_scenario(std::string_view text);

// The fully defaulted scenario in the same schema (durations as ns integers).
std::string scenario_to_json(const Scenario& scenario, int indent = 2);

// Value grids expanded into scenarios. Each list multiplies the row count;
// an empty list anywhere yields no rows.
struct SweepSpec {
  Scenario base;
  std::vector<std::uint64_t> seeds;
  std::vector<StrategyKind> strategies;  // applied to every byzantine id
  std::vector<double> rhos;
  std::vector<NetworkMode> modes;
  std::vector<InitialState> initial_states;
  std::optional<double> assert_convergence_within;  // cycles
};

SweepSpec parse_sweep(std::string_view text);
std::vector<Scenario> expand_sweep(const SweepSpec& spec);

// Report document: the resolved scenario (if given) plus every check.
std::string report_to_json(const AnalysisReport& report, const TraceHeader& header,
                           const Scenario* resolved, int indent = 2);

// One row per pulse round after convergence.
std::string rounds_csv(const AnalysisReport& report);

}  // namespace pulsesync
