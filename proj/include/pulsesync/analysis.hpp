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

// Checkers that evaluate the model's definitions (pulse states, synchronized
// sets, clusters, closure and summation properties) over recorded traces.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pulsesync/params.hpp"
#include "pulsesync/trace.hpp"

namespace pulsesync {

class AnalysisRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDetail : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// φ of a node that has not fired yet.
inline constexpr Duration kNeverFired = kNever;

struct PulseState {
  RealTime at_real = 0;
  std::vector<Duration> phis;  // indexed by node id
};

// Correct-node fire times, indexed for fast φ lookups.
class FireIndex {
 public:
  explicit FireIndex(const Trace& trace);

  const std::vector<RealTime>& fires(NodeId node) const {
    return fires_.at(static_cast<std::size_t>(node));
  }
  const std::vector<NodeId>& correct() const { return correct_; }
  // Every correct fire, sorted by time (ties by node id).
  const std::vector<std::pair<RealTime, NodeId>>& all() const { return all_; }
  RealTime begin() const { return begin_; }
  RealTime end() const { return end_; }
  int n() const { return n_; }

  // φ at t for one node, kNeverFired before its first fire.
  Duration phi(NodeId node, RealTime t) const;

 private:
  int n_ = 0;
  RealTime begin_ = 0;
  RealTime end_ = 0;
  std::vector<NodeId> correct_;
  std::vector<std::vector<RealTime>> fires_;
  std::vector<std::pair<RealTime, NodeId>> all_;
};

// Faulty nodes carry kNeverFired. Throws AnalysisRangeError outside the trace.
PulseState pulse_state_at(const FireIndex& index, RealTime t);
PulseState pulse_state_at(const Trace& trace, RealTime t);

struct SyncBounds {
  long double sigma = 0;
  long double cycle_min = 0;
  long double cycle_max = 0;
  // Subtracted from cycle_min for per-node gap checks only.
  long double gap_allowance = 0;
};

// Integer-time allowance on the real-valued cycle bounds: REF steps and clock
// conversions are rounded to whole ns (n+1 ns, the REF quantization bound).
Duration quantization_slack(const ProtocolParams& params);

// σ, cycle_min and cycle_max from the closed forms, widened by the
// quantization slack.
SyncBounds sync_bounds(const ProtocolParams& params);

// Cycle bounds computed from the quantized REF and the exact drift envelope:
// (Cycle − R_1 − … − R_f)/(1+ρ) and Cycle/(1−ρ), widened by `slack` ns.
// A node that fires after the first node of its round may see its gap
// shortened by up to σ of delay variation, so gap_allowance = σ.
SyncBounds exact_sync_bounds(const ProtocolParams& params, Duration slack = 2);

// Clause test for one pair given φ now and σ ago.
bool pair_synchronized(Duration a_now, Duration b_now, Duration a_before, Duration b_before,
                       const SyncBounds& bounds);

// `now` and `sigma_ago` hold the φ values of the same node set in the same order.
bool is_synchronized_set(const std::vector<Duration>& now, const std::vector<Duration>& sigma_ago,
                         const SyncBounds& bounds);

// Whether all correct nodes form a synchronized set at t (t ≥ begin + σ).
bool system_synchronized_at(const FireIndex& index, const SyncBounds& bounds, RealTime t);

struct Cluster {
  std::vector<NodeId> nodes;
  NodeId first = -1;
  NodeId last = -1;
  Duration first_phi = 0;
};

struct ClusterPartition {
  RealTime at_real = 0;
  std::vector<Cluster> clusters;  // C_1..C_c
};

// Greedy extraction of maximal synchronized sets over `nodes`. Supports up to 20 nodes.
ClusterPartition partition_clusters(const PulseState& now, const PulseState& sigma_ago,
                                    const std::vector<NodeId>& nodes,
                                    const SyncBounds& bounds);

NodeId first_node(const std::vector<NodeId>& set, const std::vector<Duration>& phis,
                  long double sigma);
NodeId last_node(const std::vector<NodeId>& set, const std::vector<Duration>& phis,
                 long double sigma);

// chaos_until + correctness_warmup, rounded up.
RealTime measurement_start(const Trace& trace);

// Earliest t ≥ from such that the system stays synchronized on [t, end].
std::optional<RealTime> detect_convergence(const FireIndex& index, const ProtocolParams& params,
                                           RealTime from);
std::optional<RealTime> detect_convergence(const FireIndex& index, const SyncBounds& bounds,
                                           RealTime from);
std::optional<RealTime> detect_convergence(const Trace& trace);

struct PulseRound {
  RealTime first = 0;
  RealTime last = 0;
  Duration spread = 0;
  std::vector<int> fires_per_node;  // indexed by position in FireIndex::correct()
};

struct TightnessReport {
  RealTime converged_at = 0;
  std::vector<PulseRound> rounds;  // rounds whose last fire is at or after converged_at
  Duration max_spread = 0;
};

// Rounds are separated by gaps larger than cycle_min/2.
std::vector<PulseRound> group_rounds(const FireIndex& index, const ProtocolParams& params);

// Throws NotConverged if the trace never converges.
TightnessReport measure_tightness(const Trace& trace);
TightnessReport measure_tightness(const FireIndex& index, const ProtocolParams& params,
                                  RealTime converged_at);

struct GapViolation {
  NodeId node = 0;
  RealTime from = 0;
  RealTime to = 0;
  Duration gap = 0;
};

struct CycleBoundsReport {
  Duration min_gap = 0;
  Duration max_gap = 0;
  std::size_t gaps = 0;
  std::vector<GapViolation> violations;
};

// Gaps between consecutive fires at or after `from`, plus the open gap from
// each node's last fire to the trace end (upper bound only).
CycleBoundsReport check_cycle_bounds(const FireIndex& index, RealTime from, long double lower,
                                     long double upper);
// Uses sync_bounds(params).
CycleBoundsReport check_cycle_bounds(const Trace& trace, RealTime from);

struct SummationViolation {
  std::string property;  // "P1", "P2", "fire_counter", "counter_bound"
  std::uint64_t msg = 0;
  NodeId node = -1;
  RealTime t = 0;
  std::string detail;
};

struct SummationReport {
  RealTime window_start = 0;
  std::size_t messages_checked = 0;
  std::size_t assessments_checked = 0;
  std::vector<SummationViolation> violations;
  // Correct→correct messages sent before window_start that missed P1/P2.
  std::size_t pre_window_misses = 0;
};

// P1/P2 for correct→correct messages sent at or after window_start (defaults
// to the measurement start); counter bounds over the whole trace.
SummationReport check_summation_properties(const Trace& trace,
                                           std::optional<RealTime> window_start = std::nullopt);

struct MessageComplexityReport {
  std::size_t rounds = 0;
  std::size_t bad_rounds = 0;  // some correct node fired ≠ 1 times
};

MessageComplexityReport check_message_complexity(const FireIndex& index,
                                                 const ProtocolParams& params,
                                                 RealTime converged_at);

struct AnalysisReport {
  SyncBounds bounds;  // as used by the convergence and cycle checks
  RealTime measurement_start = 0;
  std::optional<RealTime> converged_at;
  std::optional<double> convergence_cycles;  // (converged_at − start)/cycle_max
  std::optional<TightnessReport> tightness;
  std::optional<CycleBoundsReport> cycle_bounds;
  std::optional<SummationReport> summation;
  std::optional<MessageComplexityReport> complexity;
  std::size_t correct_fires = 0;
  bool closure_ok = false;
};

AnalysisReport analyze(const Trace& trace);
AnalysisReport analyze(const Trace& trace, const SyncBounds& bounds);

}  // namespace pulsesync
