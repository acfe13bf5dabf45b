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
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pulsesync/network.hpp"
#include "pulsesync/params.hpp"
#include "pulsesync/protocol.hpp"

namespace pulsesync {

inline constexpr int kTraceFormatVersion = 1;

enum class TraceDetail { kFires, kFiresDeliveries, kFull };

std::string_view to_string(TraceDetail detail);
std::optional<TraceDetail> parse_trace_detail(std::string_view text);

enum class RecordKind { kFire, kDeliver, kAssess, kPrune, kThreshold, kInject, kEpoch };

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_record_kind(std::string_view text);

// One flat record; `kind` decides which fields are meaningful.
//   fire:      node, counter, msg, faulty
//   deliver:   node (recipient), sender, counter, msg
//   assess:    node, sender, counter, msg, verdict, reason, counter_after, delivered
//   prune:     node, deleted, retired, trimmed, counter_after
//   threshold: node, level
//   inject:    node, elapsed, counter, cs, ucs, rucs
//   epoch:     label
struct TraceRecord {
  RecordKind kind = RecordKind::kFire;
  RealTime t = 0;
  std::uint64_t seq = 0;
  NodeId node = -1;
  NodeId sender = -1;
  std::int64_t counter = 0;
  std::uint64_t msg = 0;
  bool faulty = false;
  Verdict verdict = Verdict::kNotTimely;
  VerdictReason reason = VerdictReason::kNone;
  int counter_after = 0;
  RealTime delivered = 0;
  int deleted = 0;
  int retired = 0;
  int trimmed = 0;
  int level = 0;
  Duration elapsed = 0;
  int cs = 0;
  int ucs = 0;
  int rucs = 0;
  std::string label;
};

struct TraceHeader {
  int version = kTraceFormatVersion;
  ProtocolParams params;
  DelayModel delay_model = DelayModel::kUniform;
  std::uint64_t seed = 0;
  std::vector<NodeId> byzantine;
  RealTime chaos_until = 0;
  RealTime end = 0;
  TraceDetail detail = TraceDetail::kFiresDeliveries;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;

  bool is_faulty(NodeId id) const;
  std::vector<NodeId> correct_nodes() const;
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON Lines: a header object, then one record per line in trace order.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);
std::string trace_to_string(const Trace& trace);

// FNV-1a over the serialized trace.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace pulsesync
