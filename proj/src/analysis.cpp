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

#include "pulsesync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace pulsesync {
namespace {

bool finite_phi(Duration phi) { return phi != kNeverFired; }

long double abs_diff(Duration a, Duration b) {
  return std::fabs(static_cast<long double>(a) - static_cast<long double>(b));
}

}  // namespace

FireIndex::FireIndex(const Trace& trace)
    : n_(trace.header.params.n),
      begin_(trace.header.chaos_until),
      end_(trace.header.end),
      correct_(trace.correct_nodes()),
      fires_(static_cast<std::size_t>(n_)) {
  for (const auto& r : trace.records) {
    if (r.kind != RecordKind::kFire || r.faulty) continue;
    if (r.node < 0 || r.node >= n_ || trace.is_faulty(r.node)) continue;
    fires_[static_cast<std::size_t>(r.node)].push_back(r.t);
    all_.emplace_back(r.t, r.node);
  }
  for (auto& f : fires_) std::sort(f.begin(), f.end());
  std::sort(all_.begin(), all_.end());
}

Duration FireIndex::phi(NodeId node, RealTime t) const {
  const auto& f = fires(node);
  auto it = std::upper_bound(f.begin(), f.end(), t);
  if (it == f.begin()) return kNeverFired;
  return t - *std::prev(it);
}

PulseState pulse_state_at(const FireIndex& index, RealTime t) {
  if (t < index.begin() || t > index.end()) {
    throw AnalysisRangeError("time outside the trace span");
  }
  PulseState s;
  s.at_real = t;
  s.phis.assign(static_cast<std::size_t>(index.n()), kNeverFired);
  for (NodeId i : index.correct()) s.phis[static_cast<std::size_t>(i)] = index.phi(i, t);
  return s;
}

PulseState pulse_state_at(const Trace& trace, RealTime t) {
  return pulse_state_at(FireIndex(trace), t);
}

Duration quantization_slack(const ProtocolParams& params) { return params.n + 1; }

SyncBounds sync_bounds(const ProtocolParams& params) {
  const DerivedConstants c = derive_constants(params);
  const auto slack = static_cast<long double>(quantization_slack(params));
  return {static_cast<long double>(params.sigma()), c.cycle_min - slack, c.cycle_max + slack, 0};
}

SyncBounds exact_sync_bounds(const ProtocolParams& params, Duration slack) {
  const RefractoryFunction ref = build_ref(params);
  Duration accelerated = params.cycle;
  for (int i = 1; i <= params.f; ++i) accelerated -= ref.step(i);
  const long double rho = params.rho;
  SyncBounds b;
  b.sigma = static_cast<long double>(params.sigma());
  b.cycle_min = static_cast<long double>(accelerated) / (1.0L + rho) - static_cast<long double>(slack);
  b.cycle_max =
      static_cast<long double>(params.cycle) / (1.0L - rho) + static_cast<long double>(slack);
  b.gap_allowance = b.sigma;
  return b;
}

bool pair_synchronized(Duration a_now, Duration b_now, Duration a_before, Duration b_before,
                       const SyncBounds& bounds) {
  if (!finite_phi(a_now) || !finite_phi(b_now)) return false;
  const long double diff = abs_diff(a_now, b_now);
  if (diff <= bounds.sigma) return true;
  if (diff < bounds.cycle_min - bounds.sigma || diff > bounds.cycle_max) return false;
  if (!finite_phi(a_before) || !finite_phi(b_before)) return false;
  return abs_diff(a_before, b_before) <= bounds.sigma;
}

bool is_synchronized_set(const std::vector<Duration>& now, const std::vector<Duration>& sigma_ago,
                         const SyncBounds& bounds) {
  if (now.size() != sigma_ago.size()) {
    throw std::invalid_argument("snapshots differ in size");
  }
  for (Duration phi : now) {
    if (!finite_phi(phi) || static_cast<long double>(phi) > bounds.cycle_max) return false;
  }
  for (std::size_t i = 0; i < now.size(); ++i) {
    for (std::size_t j = i + 1; j < now.size(); ++j) {
      if (!pair_synchronized(now[i], now[j], sigma_ago[i], sigma_ago[j], bounds)) return false;
    }
  }
  return true;
}

bool system_synchronized_at(const FireIndex& index, const SyncBounds& bounds, RealTime t) {
  const auto sigma = static_cast<Duration>(bounds.sigma);
  if (t - sigma < index.begin()) throw AnalysisRangeError("query earlier than σ into the trace");
  std::vector<Duration> now;
  std::vector<Duration> before;
  for (NodeId i : index.correct()) {
    now.push_back(index.phi(i, t));
    before.push_back(index.phi(i, t - sigma));
  }
  return is_synchronized_set(now, before, bounds);
}

NodeId first_node(const std::vector<NodeId>& set, const std::vector<Duration>& phis,
                  long double sigma) {
  auto pick = [&](bool within) {
    NodeId best = -1;
    for (NodeId i : set) {
      const Duration p = phis[static_cast<std::size_t>(i)];
      if (within && !(finite_phi(p) && static_cast<long double>(p) <= sigma)) continue;
      if (best < 0 || p > phis[static_cast<std::size_t>(best)] ||
          (p == phis[static_cast<std::size_t>(best)] && i < best)) {
        best = i;
      }
    }
    return best;
  };
  NodeId node = pick(true);
  return node >= 0 ? node : pick(false);
}

NodeId last_node(const std::vector<NodeId>& set, const std::vector<Duration>& phis,
                 long double sigma) {
  auto pick = [&](bool beyond) {
    NodeId best = -1;
    for (NodeId i : set) {
      const Duration p = phis[static_cast<std::size_t>(i)];
      if (beyond && !(static_cast<long double>(p) > sigma)) continue;
      if (best < 0 || p < phis[static_cast<std::size_t>(best)] ||
          (p == phis[static_cast<std::size_t>(best)] && i > best)) {
        best = i;
      }
    }
    return best;
  };
  NodeId node = pick(true);
  return node >= 0 ? node : pick(false);
}

ClusterPartition partition_clusters(const PulseState& now, const PulseState& sigma_ago,
                                    const std::vector<NodeId>& nodes,
                                    const SyncBounds& bounds) {
  ClusterPartition out;
  out.at_real = now.at_real;
  auto phi_now = [&](NodeId i) { return now.phis.at(static_cast<std::size_t>(i)); };
  auto phi_before = [&](NodeId i) { return sigma_ago.phis.at(static_cast<std::size_t>(i)); };

  std::vector<NodeId> eligible;
  std::vector<NodeId> stray;
  for (NodeId i : nodes) {
    const Duration p = phi_now(i);
    if (finite_phi(p) && static_cast<long double>(p) <= bounds.cycle_max) {
      eligible.push_back(i);
    } else {
      stray.push_back(i);
    }
  }
  const std::size_t m = eligible.size();
  if (m > 20) throw std::invalid_argument("partition_clusters supports at most 20 nodes");

  std::vector<std::uint32_t> compatible(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b || pair_synchronized(phi_now(eligible[a]), phi_now(eligible[b]),
                                      phi_before(eligible[a]), phi_before(eligible[b]), bounds)) {
        compatible[a] |= 1u << b;
      }
    }
  }
  std::vector<bool> clique(std::size_t{1} << m, false);
  clique[0] = true;
  for (std::uint32_t s = 1; s < clique.size(); ++s) {
    const int low = __builtin_ctz(s);
    const std::uint32_t rest = s & (s - 1);
    clique[s] = clique[rest] && (compatible[static_cast<std::size_t>(low)] & rest) == rest;
  }
  auto members = [&](std::uint32_t s) {
    std::vector<NodeId> v;
    for (std::size_t b = 0; b < m; ++b) {
      if (s & (1u << b)) v.push_back(eligible[b]);
    }
    return v;
  };

  std::uint32_t remaining = m == 0 ? 0 : static_cast<std::uint32_t>((std::size_t{1} << m) - 1);
  std::vector<Cluster> clusters;
  while (remaining != 0) {
    int best_size = 0;
    std::vector<std::uint32_t> maximal;
    for (std::uint32_t s = remaining;; s = (s - 1) & remaining) {
      if (s != 0 && clique[s]) {
        const int size = __builtin_popcount(s);
        if (size > best_size) {
          best_size = size;
          maximal.clear();
        }
        if (size == best_size) maximal.push_back(s);
      }
      if (s == 0) break;
    }
    std::uint32_t unified = 0;
    for (auto s : maximal) unified |= s;
    const NodeId anchor = first_node(members(unified), now.phis, bounds.sigma);
    std::uint32_t chosen = 0;
    std::vector<NodeId> chosen_ids;
    for (auto s : maximal) {
      auto ids = members(s);
      if (std::find(ids.begin(), ids.end(), anchor) == ids.end()) continue;
      if (chosen == 0 || ids < chosen_ids) {
        chosen = s;
        chosen_ids = ids;
      }
    }
    Cluster c;
    c.nodes = chosen_ids;
    clusters.push_back(std::move(c));
    remaining &= ~chosen;
  }
  for (auto& c : clusters) {
    c.first = first_node(c.nodes, now.phis, bounds.sigma);
    c.last = last_node(c.nodes, now.phis, bounds.sigma);
    c.first_phi = phi_now(c.first);
  }

  // C_1 harbors the largest φ; the rest descend by the φ of their first node.
  NodeId oldest = -1;
  for (NodeId i : eligible) {
    if (oldest < 0 || phi_now(i) > phi_now(oldest)) oldest = i;
  }
  std::stable_sort(clusters.begin(), clusters.end(), [&](const Cluster& a, const Cluster& b) {
    auto has_oldest = [&](const Cluster& c) {
      return std::find(c.nodes.begin(), c.nodes.end(), oldest) != c.nodes.end();
    };
    if (has_oldest(a) != has_oldest(b)) return has_oldest(a);
    if (a.first_phi != b.first_phi) return a.first_phi > b.first_phi;
    return a.first < b.first;
  });
  for (NodeId i : stray) {
    Cluster c;
    c.nodes = {i};
    c.first = c.last = i;
    c.first_phi = phi_now(i);
    clusters.push_back(std::move(c));
  }
  out.clusters = std::move(clusters);
  return out;
}

RealTime measurement_start(const Trace& trace) {
  const DerivedConstants c = derive_constants(trace.header.params);
  return trace.header.chaos_until + static_cast<Duration>(std::ceil(c.correctness_warmup));
}

std::optional<RealTime> detect_convergence(const FireIndex& index, const ProtocolParams& params,
                                           RealTime from) {
  return detect_convergence(index, sync_bounds(params), from);
}

std::optional<RealTime> detect_convergence(const FireIndex& index, const SyncBounds& bounds,
                                           RealTime from) {
  const auto sigma = static_cast<Duration>(bounds.sigma);
  const auto past_max = static_cast<Duration>(std::floor(bounds.cycle_max)) + 1;
  from = std::max(from, index.begin() + sigma);
  if (from > index.end()) return std::nullopt;

  // The predicate only changes where a fire enters either snapshot or a φ
  // passes cycle_max.
  std::vector<RealTime> points{from};
  for (const auto& [t, node] : index.all()) {
    for (RealTime p : {t, t + sigma, t + past_max}) {
      if (p >= from && p <= index.end()) points.push_back(p);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::optional<RealTime> converged = from;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!system_synchronized_at(index, bounds, points[i])) {
      if (i + 1 == points.size()) return std::nullopt;
      converged = points[i + 1];
    }
  }
  return converged;
}

std::optional<RealTime> detect_convergence(const Trace& trace) {
  return detect_convergence(FireIndex(trace), trace.header.params, measurement_start(trace));
}

std::vector<PulseRound> group_rounds(const FireIndex& index, const ProtocolParams& params) {
  const long double split = derive_constants(params).cycle_min / 2;
  std::vector<PulseRound> rounds;
  const auto& correct = index.correct();
  for (const auto& [t, node] : index.all()) {
    if (rounds.empty() || static_cast<long double>(t - rounds.back().last) > split) {
      PulseRound r;
      r.first = r.last = t;
      r.fires_per_node.assign(correct.size(), 0);
      rounds.push_back(std::move(r));
    }
    auto& r = rounds.back();
    r.last = t;
    r.spread = r.last - r.first;
    auto pos = std::find(correct.begin(), correct.end(), node) - correct.begin();
    ++r.fires_per_node[static_cast<std::size_t>(pos)];
  }
  return rounds;
}

TightnessReport measure_tightness(const FireIndex& index, const ProtocolParams& params,
                                  RealTime converged_at) {
  TightnessReport report;
  report.converged_at = converged_at;
  for (auto& r : group_rounds(index, params)) {
    if (r.last < converged_at) continue;
    report.max_spread = std::max(report.max_spread, r.spread);
    report.rounds.push_back(std::move(r));
  }
  return report;
}

TightnessReport measure_tightness(const Trace& trace) {
  FireIndex index(trace);
  auto at = detect_convergence(index, trace.header.params, measurement_start(trace));
  if (!at) throw NotConverged("trace never reaches a synchronized pulse state");
  return measure_tightness(index, trace.header.params, *at);
}

CycleBoundsReport check_cycle_bounds(const FireIndex& index, RealTime from, long double lower,
                                     long double upper) {
  CycleBoundsReport report;
  bool any = false;
  auto note = [&](NodeId node, RealTime a, RealTime b, bool closed) {
    const Duration gap = b - a;
    const auto g = static_cast<long double>(gap);
    if (closed) {
      ++report.gaps;
      report.min_gap = any ? std::min(report.min_gap, gap) : gap;
      report.max_gap = any ? std::max(report.max_gap, gap) : gap;
      any = true;
    }
    if ((closed && g < lower) || g > upper) report.violations.push_back({node, a, b, gap});
  };
  for (NodeId node : index.correct()) {
    const auto& f = index.fires(node);
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (f[i - 1] >= from) note(node, f[i - 1], f[i], true);
    }
    if (!f.empty() && f.back() >= from) note(node, f.back(), index.end(), false);
  }
  return report;
}

CycleBoundsReport check_cycle_bounds(const Trace& trace, RealTime from) {
  const SyncBounds b = sync_bounds(trace.header.params);
  return check_cycle_bounds(FireIndex(trace), from, b.cycle_min, b.cycle_max);
}

SummationReport check_summation_properties(const Trace& trace,
                                           std::optional<RealTime> window_start) {
  if (static_cast<int>(trace.header.detail) < static_cast<int>(TraceDetail::kFiresDeliveries)) {
    throw InsufficientDetail("summation check needs deliveries and assessments in the trace");
  }
  const ProtocolParams& p = trace.header.params;
  SummationReport report;
  report.window_start = window_start ? *window_start : measurement_start(trace);
  const Duration d = p.effective_d();

  struct Sent {
    NodeId sender;
    RealTime t;
    std::int64_t counter;
  };
  std::unordered_map<std::uint64_t, Sent> correct_sent;
  using Key = std::pair<std::uint64_t, NodeId>;
  std::map<Key, RealTime> delivered;
  std::map<Key, const TraceRecord*> final_assessment;

  auto bound = [&](const TraceRecord& r, std::int64_t value) {
    if (value > p.n) {
      report.violations.push_back({"counter_bound", r.msg, r.node, r.t,
                                   "counter " + std::to_string(value) + " exceeds n"});
    }
  };

  for (const auto& r : trace.records) {
    switch (r.kind) {
      case RecordKind::kFire:
        if (r.faulty || trace.is_faulty(r.node)) break;
        correct_sent[r.msg] = {r.node, r.t, r.counter};
        bound(r, r.counter);
        if (r.t >= report.window_start && r.counter > p.n - 1) {
          report.violations.push_back({"fire_counter", r.msg, r.node, r.t,
                                       "fired with counter " + std::to_string(r.counter)});
        }
        break;
      case RecordKind::kDeliver:
        delivered[{r.msg, r.node}] = r.t;
        break;
      case RecordKind::kAssess:
        ++report.assessments_checked;
        bound(r, r.counter_after);
        if (r.verdict != Verdict::kPending) final_assessment[{r.msg, r.node}] = &r;
        break;
      case RecordKind::kPrune:
        bound(r, r.counter_after);
        break;
      case RecordKind::kInject:
        bound(r, r.counter);
        break;
      default:
        break;
    }
  }

  for (const auto& [key, at] : delivered) {
    auto sent = correct_sent.find(key.first);
    if (sent == correct_sent.end()) continue;
    const bool in_window = sent->second.t >= report.window_start;
    auto it = final_assessment.find(key);
    std::string failure;
    std::string property;
    if (it == final_assessment.end()) {
      // Still open at the trace end is not a miss.
      if (at + d > trace.header.end) continue;
      property = "P1";
      failure = "delivered but never assessed";
    } else {
      const TraceRecord& a = *it->second;
      if (a.t - at > d) {
        property = "P1";
        failure = "assessed " + std::to_string(a.t - at) + " ns after delivery";
      } else if (a.verdict != Verdict::kTimely) {
        property = "P2";
        failure = std::string("verdict ") + to_string(a.verdict) + " (" + to_string(a.reason) + ")";
      } else if (a.counter_after <= a.counter) {
        property = "P2";
        failure = "counter " + std::to_string(a.counter_after) + " not above message counter " +
                  std::to_string(a.counter);
      }
    }
    if (in_window) ++report.messages_checked;
    if (failure.empty()) continue;
    if (in_window) {
      report.violations.push_back({property, key.first, key.second, at, failure});
    } else {
      ++report.pre_window_misses;
    }
  }
  return report;
}

MessageComplexityReport check_message_complexity(const FireIndex& index,
                                                 const ProtocolParams& params,
                                                 RealTime converged_at) {
  MessageComplexityReport report;
  for (const auto& r : group_rounds(index, params)) {
    if (r.first < converged_at || r.first + params.sigma() > index.end()) continue;
    ++report.rounds;
    if (std::any_of(r.fires_per_node.begin(), r.fires_per_node.end(),
                    [](int c) { return c != 1; })) {
      ++report.bad_rounds;
    }
  }
  return report;
}

AnalysisReport analyze(const Trace& trace) {
  return analyze(trace, sync_bounds(trace.header.params));
}

AnalysisReport analyze(const Trace& trace, const SyncBounds& bounds) {
  const ProtocolParams& p = trace.header.params;
  const DerivedConstants c = derive_constants(p);
  FireIndex index(trace);
  AnalysisReport report;
  report.bounds = bounds;
  report.measurement_start = measurement_start(trace);
  report.correct_fires = index.all().size();
  report.converged_at = detect_convergence(index, bounds, report.measurement_start);
  if (static_cast<int>(trace.header.detail) >= static_cast<int>(TraceDetail::kFiresDeliveries)) {
    report.summation = check_summation_properties(trace, report.measurement_start);
  }
  if (report.converged_at) {
    report.convergence_cycles =
        static_cast<double>(static_cast<long double>(*report.converged_at -
                                                     report.measurement_start) /
                            c.cycle_max);
    report.tightness = measure_tightness(index, p, *report.converged_at);
    report.cycle_bounds =
        check_cycle_bounds(index, *report.converged_at, bounds.cycle_min - bounds.gap_allowance,
                           bounds.cycle_max);
    report.complexity = check_message_complexity(index, p, *report.converged_at);
    report.closure_ok = report.cycle_bounds->violations.empty() &&
                        report.tightness->max_spread <= p.sigma() &&
                        report.complexity->bad_rounds == 0 &&
                        (!report.summation || report.summation->violations.empty());
  }
  return report;
}

}  // namespace pulsesync
