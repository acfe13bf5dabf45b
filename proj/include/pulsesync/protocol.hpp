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

// Per-node BIO-PULSE-SYNCH state machine. Everything here runs on the node's
// local clock; the engine converts to and from real time.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pulsesync/params.hpp"
#include "pulsesync/time.hpp"

namespace pulsesync {

using NodeId = int;

struct FireMessage {
  NodeId sender = 0;
  std::int64_t counter = 0;

  bool operator==(const FireMessage&) const = default;
};

struct StoredMessage {
  NodeId sender = 0;
  LocalTime arrival_local = 0;
  // Node-local identity; two arrivals never share one even with equal stamps.
  std::uint64_t id = 0;

  bool operator==(const StoredMessage&) const = default;
};

struct MessagePool {
  std::vector<StoredMessage> cs;
  std::vector<StoredMessage> ucs;
  std::vector<StoredMessage> rucs;
};

struct PendingAssessment {
  std::uint64_t entry_id = 0;
  NodeId sender = 0;
  std::int64_t counter = 0;
  LocalTime arrival_local = 0;
  LocalTime deadline_local = 0;
  std::uint64_t tag = 0;
};

// Shared read-only data for every node of one parameter set.
struct ProtocolContext {
  ProtocolParams params;
  RefractoryFunction ref;
  DerivedConstants constants;

  explicit ProtocolContext(const ProtocolParams& p);
};

struct NodeState {
  NodeId id = 0;
  int counter = 0;
  MessagePool pool;
  LocalTime pulse_local = 0;  // local time of the last pulse
  std::vector<PendingAssessment> pending;
  int last_threshold = 0;
  LocalTime last_seen = 0;
  std::uint64_t next_entry_id = 1;

  Duration elapsed(LocalTime now) const { return now - pulse_local; }
};

enum class Verdict { kTimely, kNotTimely, kPending };

enum class VerdictReason {
  kNone,
  kSupported,        // condition 3 satisfied
  kInvalidCounter,   // condition 1
  kDuplicateSender,  // condition 2
  kSuperseded,       // entry deleted by a later duplicate while pending
  kExpired,          // condition 3 never satisfied within the window
};

const char* to_string(Verdict v);
const char* to_string(VerdictReason r);

struct AssessmentRecord {
  std::uint64_t tag = 0;
  NodeId sender = 0;
  std::int64_t counter = 0;
  LocalTime arrival_local = 0;
  LocalTime at_local = 0;
  Verdict verdict = Verdict::kNotTimely;
  VerdictReason reason = VerdictReason::kNone;
  // Counter at the fire check that follows this assessment.
  int counter_after = 0;
};

struct PruneRecord {
  LocalTime at_local = 0;
  int deleted = 0;  // RUCS entries decayed
  int retired = 0;  // pool entries moved to RUCS
  int trimmed = 0;  // CS entries moved back to UCS
  int counter_after = 0;
};

struct NodeOutput {
  std::optional<FireMessage> fired;
  std::optional<LocalTime> next_wakeup_local;
  int level = 0;  // threshold level after the step
  std::vector<AssessmentRecord> assessments;
  std::vector<PruneRecord> prunes;
};

// Distinct senders in CS∪UCS whose MessageAge ≤ τ(k+1) at `now`.
int count_supporting(const NodeState& state, const ProtocolContext& ctx, std::int64_t k,
                     LocalTime now);

// Condition 3 alone, evaluated at `now`.
Verdict timeliness(const NodeState& state, const ProtocolContext& ctx, std::int64_t k,
                   LocalTime now);

// Returns the records of what changed (empty counts when nothing did).
PruneRecord prune(NodeState& state, const ProtocolContext& ctx, LocalTime now);

// Moves entries for a timely message whose stored entry is `entry_id`.
// Throws std::logic_error if UCS cannot supply enough distinct senders.
void make_accountable(NodeState& state, std::uint64_t entry_id, std::int64_t k);

void cycle_reset(NodeState& state, LocalTime now);

// Initial fire check and wakeup computation for a freshly injected state.
NodeOutput start_node(NodeState& state, const ProtocolContext& ctx, LocalTime now);

NodeOutput on_receive(NodeState& state, const ProtocolContext& ctx, const FireMessage& msg,
                      LocalTime now, std::uint64_t tag = 0);

NodeOutput on_timer(NodeState& state, const ProtocolContext& ctx, LocalTime now);

// Earliest future local time at which the node's state or level changes.
std::optional<LocalTime> next_wakeup(const NodeState& state, const ProtocolContext& ctx,
                                     LocalTime now);

}  // namespace pulsesync
