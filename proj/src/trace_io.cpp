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

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pulsesync/trace.hpp"

namespace pulsesync {
namespace {

using json = nlohmann::json;

constexpr std::string_view kFormatName = "pulsesync-trace";

json record_to_json(const TraceRecord& r) {
  json j;
  j["k"] = to_string(r.kind);
  j["t"] = r.t;
  j["seq"] = r.seq;
  switch (r.kind) {
    case RecordKind::kFire:
      j["node"] = r.node;
      j["counter"] = r.counter;
      j["msg"] = r.msg;
      if (r.faulty) j["faulty"] = true;
      break;
    case RecordKind::kDeliver:
      j["node"] = r.node;
      j["sender"] = r.sender;
      j["counter"] = r.counter;
      j["msg"] = r.msg;
      break;
    case RecordKind::kAssess:
      j["node"] = r.node;
      j["sender"] = r.sender;
      j["counter"] = r.counter;
      j["msg"] = r.msg;
      j["verdict"] = to_string(r.verdict);
      j["reason"] = to_string(r.reason);
      j["counter_after"] = r.counter_after;
      j["delivered"] = r.delivered;
      break;
    case RecordKind::kPrune:
      j["node"] = r.node;
      j["deleted"] = r.deleted;
      j["retired"] = r.retired;
      j["trimmed"] = r.trimmed;
      j["counter_after"] = r.counter_after;
      break;
    case RecordKind::kThreshold:
      j["node"] = r.node;
      j["level"] = r.level;
      break;
    case RecordKind::kInject:
      j["node"] = r.node;
      j["elapsed"] = r.elapsed;
      j["counter"] = r.counter;
      j["cs"] = r.cs;
      j["ucs"] = r.ucs;
      j["rucs"] = r.rucs;
      break;
    case RecordKind::kEpoch:
      j["label"] = r.label;
      break;
  }
  return j;
}

Verdict parse_verdict(const std::string& s) {
  if (s == "timely") return Verdict::kTimely;
  if (s == "not_timely") return Verdict::kNotTimely;
  if (s == "pending") return Verdict::kPending;
  throw TraceFormatError("unknown verdict " + s);
}

VerdictReason parse_reason(const std::string& s) {
  for (auto r : {VerdictReason::kNone, VerdictReason::kSupported, VerdictReason::kInvalidCounter,
                 VerdictReason::kDuplicateSender, VerdictReason::kSuperseded,
                 VerdictReason::kExpired}) {
    if (s == to_string(r)) return r;
  }
  throw TraceFormatError("unknown reason " + s);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

TraceRecord record_from_json(const json& j) {
  TraceRecord r;
  auto kind = parse_record_kind(j.at("k").get<std::string>());
  if (!kind) throw TraceFormatError("unknown record kind");
  r.kind = *kind;
  r.t = j.at("t").get<RealTime>();
  get_if(j, "seq", r.seq);
  get_if(j, "node", r.node);
  get_if(j, "sender", r.sender);
  get_if(j, "counter", r.counter);
  get_if(j, "msg", r.msg);
  get_if(j, "faulty", r.faulty);
  if (j.contains("verdict")) r.verdict = parse_verdict(j["verdict"].get<std::string>());
  if (j.contains("reason")) r.reason = parse_reason(j["reason"].get<std::string>());
  get_if(j, "counter_after", r.counter_after);
  get_if(j, "delivered", r.delivered);
  get_if(j, "deleted", r.deleted);
  get_if(j, "retired", r.retired);
  get_if(j, "trimmed", r.trimmed);
  get_if(j, "level", r.level);
  get_if(j, "elapsed", r.elapsed);
  get_if(j, "cs", r.cs);
  get_if(j, "ucs", r.ucs);
  get_if(j, "rucs", r.rucs);
  get_if(j, "label", r.label);
  return r;
}

json header_to_json(const TraceHeader& h) {
  json j;
  j["format"] = kFormatName;
  j["version"] = h.version;
  j["params"] = {{"n", h.params.n},
                 {"f", h.params.f},
                 {"cycle_ns", h.params.cycle},
                 {"d_ns", h.params.d},
                 {"rho", h.params.rho},
                 {"mode", to_string(h.params.mode)}};
  j["delay_model"] = to_string(h.delay_model);
  j["seed"] = h.seed;
  j["byzantine"] = h.byzantine;
  j["chaos_until_ns"] = h.chaos_until;
  j["end_ns"] = h.end;
  j["detail"] = to_string(h.detail);
  return j;
}

TraceHeader header_from_json(const json& j) {
  if (j.value("format", "") != kFormatName) throw TraceFormatError("not a pulsesync trace");
  TraceHeader h;
  h.version = j.at("version").get<int>();
  if (h.version != kTraceFormatVersion) {
    throw TraceFormatError("unsupported trace version " + std::to_string(h.version));
  }
  const json& p = j.at("params");
  auto mode = parse_network_mode(p.at("mode").get<std::string>());
  if (!mode) throw TraceFormatError("bad mode");
  try {
    h.params = validate_params(p.at("n").get<int>(), p.at("f").get<int>(),
                               p.at("cycle_ns").get<Duration>(), p.at("d_ns").get<Duration>(),
                               p.at("rho").get<double>(), *mode);
  } catch (const ParamsError& e) {
    throw TraceFormatError(std::string("trace params invalid: ") + e.what());
  }
  auto model = parse_delay_model(j.value("delay_model", "uniform"));
  if (!model) throw TraceFormatError("bad delay model");
  h.delay_model = *model;
  h.seed = j.at("seed").get<std::uint64_t>();
  h.byzantine = j.at("byzantine").get<std::vector<NodeId>>();
  h.chaos_until = j.at("chaos_until_ns").get<RealTime>();
  h.end = j.at("end_ns").get<RealTime>();
  auto detail = parse_trace_detail(j.at("detail").get<std::string>());
  if (!detail) throw TraceFormatError("bad detail");
  h.detail = *detail;
  return h;
}

}  // namespace

std::string_view to_string(TraceDetail detail) {
  switch (detail) {
    case TraceDetail::kFires:
      return "fires";
    case TraceDetail::kFiresDeliveries:
      return "fires+deliveries";
    case TraceDetail::kFull:
      return "full";
  }
  return "?";
}

std::optional<TraceDetail> parse_trace_detail(std::string_view text) {
  if (text == "fires") return TraceDetail::kFires;
  if (text == "fires+deliveries") return TraceDetail::kFiresDeliveries;
  if (text == "full") return TraceDetail::kFull;
  return std::nullopt;
}

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::kFire:
      return "fire";
    case RecordKind::kDeliver:
      return "deliver";
    case RecordKind::kAssess:
      return "assess";
    case RecordKind::kPrune:
      return "prune";
    case RecordKind::kThreshold:
      return "threshold";
    case RecordKind::kInject:
      return "inject";
    case RecordKind::kEpoch:
      return "epoch";
  }
  return "?";
}

std::optional<RecordKind> parse_record_kind(std::string_view text) {
  for (auto k : {RecordKind::kFire, RecordKind::kDeliver, RecordKind::kAssess, RecordKind::kPrune,
                 RecordKind::kThreshold, RecordKind::kInject, RecordKind::kEpoch}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

bool Trace::is_faulty(NodeId id) const {
  return std::find(header.byzantine.begin(), header.byzantine.end(), id) !=
         header.byzantine.end();
}

std::vector<NodeId> Trace::correct_nodes() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < header.params.n; ++i) {
    if (!is_faulty(i)) out.push_back(i);
  }
  return out;
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << header_to_json(trace.header).dump() << '\n';
  for (const auto& r : trace.records) out << record_to_json(r).dump() << '\n';
}

std::string trace_to_string(const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        trace.header = header_from_json(j);
        have_header = true;
      } else {
        trace.records.push_back(record_from_json(j));
      }
    } catch (const json::exception& e) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw TraceFormatError("empty trace");
  return trace;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pulsesync
