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

#include <gtest/gtest.h>

#include <random>

#include "pulsesync/engine.hpp"

namespace pulsesync {
namespace {

constexpr Duration kSec = kNanosPerSecond;
constexpr Duration kCycle = 100 * kSec;

ProtocolParams Params4() { return validate_params(4, 1, kCycle, kSec, 0.0); }

Trace Synthetic(const ProtocolParams& p, std::vector<NodeId> byzantine, RealTime end,
                const std::vector<std::pair<RealTime, NodeId>>& fires) {
  Trace t;
  t.header.params = p;
  t.header.byzantine = std::move(byzantine);
  t.header.end = end;
  t.header.detail = TraceDetail::kFires;
  std::uint64_t msg = 0;
  for (const auto& [at, node] : fires) {
    TraceRecord r;
    r.kind = RecordKind::kFire;
    r.t = at;
    r.node = node;
    r.msg = ++msg;
    r.seq = t.records.size();
    t.records.push_back(r);
  }
  return t;
}

// Every node fires at k·Cycle + offset[node] for k = 1..rounds.
Trace Lockstep(const std::vector<Duration>& offset, int rounds) {
  std::vector<std::pair<RealTime, NodeId>> fires;
  for (int k = 1; k <= rounds; ++k) {
    for (std::size_t i = 0; i < offset.size(); ++i) {
      fires.emplace_back(k * kCycle + offset[i], static_cast<NodeId>(i));
    }
  }
  std::sort(fires.begin(), fires.end());
  return Synthetic(Params4(), {}, (rounds + 1) * kCycle - kSec, fires);
}

PulseState State(std::vector<Duration> phis, RealTime at = 0) {
  PulseState s;
  s.at_real = at;
  s.phis = std::move(phis);
  return s;
}

TEST(PulseStateTest, PhiSinceLastFire) {
  Trace t = Synthetic(Params4(), {3}, 50 * kSec, {{10 * kSec, 0}, {12 * kSec, 1}});
  PulseState s = pulse_state_at(t, 15 * kSec);
  EXPECT_EQ(s.phis[0], 5 * kSec);
  EXPECT_EQ(s.phis[1], 3 * kSec);
  EXPECT_EQ(s.phis[2], kNeverFired);
  EXPECT_EQ(s.phis[3], kNeverFired);
}

TEST(PulseStateTest, ZeroRightAfterSimultaneousFire) {
  Trace t = Lockstep({0, 0, 0, 0}, 1);
  PulseState s = pulse_state_at(t, kCycle);
  for (Duration phi : s.phis) EXPECT_EQ(phi, 0);
}

TEST(PulseStateTest, OutsideSpanThrows) {
  Trace t = Lockstep({0, 0, 0, 0}, 1);
  EXPECT_THROW(pulse_state_at(t, -1), AnalysisRangeError);
  EXPECT_THROW(pulse_state_at(t, t.header.end + 1), AnalysisRangeError);
}

TEST(SynchronizedSet, WithinSigma) {
  const SyncBounds b = sync_bounds(Params4());
  std::vector<Duration> now{3 * kSec, 3500 * 1000000LL, 4 * kSec};
  EXPECT_TRUE(is_synchronized_set(now, now, b));
}

TEST(SynchronizedSet, HalfCycleApartIsNot) {
  const SyncBounds b = sync_bounds(Params4());
  std::vector<Duration> now{0, kCycle / 2};
  EXPECT_FALSE(is_synchronized_set(now, now, b));
}

TEST(SynchronizedSet, NeverFiredIsNot) {
  const SyncBounds b = sync_bounds(Params4());
  std::vector<Duration> now{kSec, kNeverFired};
  EXPECT_FALSE(is_synchronized_set(now, now, b));
}

TEST(SynchronizedSet, AboveCycleMaxIsNot) {
  const SyncBounds b = sync_bounds(Params4());
  std::vector<Duration> now{kCycle + 100, kCycle + 100};
  EXPECT_FALSE(is_synchronized_set(now, now, b));
}

TEST(SynchronizedSet, WraparoundClause) {
  // Node 0 fires at 100 s, node 1 half a second later; at 100.2 s node 0 has
  // just fired and node 1 is about to.
  Trace t = Synthetic(Params4(), {2, 3}, 150 * kSec,
                      {{0, 0}, {kSec / 2, 1}, {kCycle, 0}, {kCycle + kSec / 2, 1}});
  FireIndex index(t);
  const SyncBounds b = sync_bounds(Params4());
  const RealTime at = kCycle + kSec / 5;
  EXPECT_EQ(index.phi(0, at), kSec / 5);
  EXPECT_TRUE(system_synchronized_at(index, b, at));

  // Same φ now, but σ ago the pair was far apart.
  EXPECT_FALSE(pair_synchronized(kSec / 5, index.phi(1, at), kSec / 5 + 10 * kSec,
                                 index.phi(1, at - kSec), b));
}

TEST(SynchronizedSet, QueryTooEarlyThrows) {
  Trace t = Lockstep({0, 0, 0, 0}, 1);
  FireIndex index(t);
  EXPECT_THROW(system_synchronized_at(index, sync_bounds(Params4()), kSec - 1),
               AnalysisRangeError);
}

TEST(FirstLastNode, Rules) {
  const long double sigma = kSec;
  std::vector<Duration> phis{kSec / 2, kSec / 4, 90 * kSec, kSec / 2};
  EXPECT_EQ(first_node({0, 1, 2, 3}, phis, sigma), 0);
  EXPECT_EQ(last_node({0, 1, 2, 3}, phis, sigma), 2);
  std::vector<Duration> waiting{5 * kSec, 7 * kSec, 7 * kSec};
  EXPECT_EQ(first_node({0, 1, 2}, waiting, sigma), 1);
  EXPECT_EQ(last_node({0, 1, 2}, waiting, sigma), 0);
}

TEST(Partition, SingleCluster) {
  const SyncBounds b = sync_bounds(Params4());
  PulseState now = State({kSec / 2, kSec / 3, kSec / 4, kSec / 5});
  ClusterPartition part = partition_clusters(now, now, {0, 1, 2, 3}, b);
  ASSERT_EQ(part.clusters.size(), 1u);
  EXPECT_EQ(part.clusters[0].nodes.size(), 4u);
}

TEST(Partition, TwoHalfCyclePairs) {
  const SyncBounds b = sync_bounds(Params4());
  PulseState now = State({0, 0, kCycle / 2, kCycle / 2});
  PulseState before = State({kCycle - kSec, kCycle - kSec, kCycle / 2 - kSec, kCycle / 2 - kSec});
  ClusterPartition part = partition_clusters(now, before, {0, 1, 2, 3}, b);
  ASSERT_EQ(part.clusters.size(), 2u);
  EXPECT_EQ(part.clusters[0].nodes, (std::vector<NodeId>{2, 3}));
  EXPECT_EQ(part.clusters[1].nodes, (std::vector<NodeId>{0, 1}));
}

TEST(Partition, WorstCaseClusterCount) {
  for (auto [n, f] : {std::pair{4, 1}, std::pair{7, 2}, std::pair{10, 3}}) {
    const ProtocolParams p = validate_params(n, f, 1000 * kSec, kSec, 0.0);
    const SyncBounds b = sync_bounds(p);
    const int groups = 2 * f + 1;
    const int correct = n - f;
    std::vector<Duration> phis(static_cast<std::size_t>(n), kNeverFired);
    std::vector<NodeId> ids;
    for (int i = 0; i < correct; ++i) {
      phis[static_cast<std::size_t>(i)] = (i % groups) * (p.cycle / (2 * groups)) + kSec;
      ids.push_back(i);
    }
    PulseState now = State(phis);
    ClusterPartition part = partition_clusters(now, now, ids, b);
    EXPECT_EQ(static_cast<int>(part.clusters.size()), groups) << "n=" << n;
  }
}

TEST(Partition, NumberingAndTieBreak) {
  const SyncBounds b = sync_bounds(Params4());
  // {0,1} and {1,2} are both maximal; node 1 is the unified set's first node.
  PulseState now = State({kSec / 5, 4 * kSec / 5, 7 * kSec / 5, 60 * kSec});
  ClusterPartition part = partition_clusters(now, now, {0, 1, 2, 3}, b);
  ASSERT_EQ(part.clusters.size(), 3u);
  EXPECT_EQ(part.clusters[0].nodes, (std::vector<NodeId>{3}));
  // C_2 and C_3 descend by first-node φ: node 2 (1.4 s) before node 1 (0.8 s).
  EXPECT_EQ(part.clusters[1].nodes, (std::vector<NodeId>{2}));
  EXPECT_EQ(part.clusters[2].nodes, (std::vector<NodeId>{0, 1}));
}

TEST(Partition, InvariantsRandomized) {
  const ProtocolParams p = validate_params(7, 2, 200 * kSec, kSec, 0.0);
  const SyncBounds b = sync_bounds(p);
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<Duration> phase(0, p.cycle);
  std::vector<NodeId> ids{0, 1, 2, 3, 4};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Duration> phis(7, kNeverFired);
    for (NodeId i : ids) {
      phis[static_cast<std::size_t>(i)] = trial % 2 ? phase(gen) : phase(gen) % (5 * kSec);
    }
    PulseState now = State(phis);
    ClusterPartition part = partition_clusters(now, now, ids, b);
    std::vector<int> seen(7, 0);
    for (const auto& c : part.clusters) {
      std::vector<Duration> sub;
      for (NodeId i : c.nodes) {
        ++seen[static_cast<std::size_t>(i)];
        sub.push_back(phis[static_cast<std::size_t>(i)]);
      }
      EXPECT_TRUE(is_synchronized_set(sub, sub, b));
    }
    for (NodeId i : ids) EXPECT_EQ(seen[static_cast<std::size_t>(i)], 1);
    for (std::size_t a = 0; a < part.clusters.size(); ++a) {
      for (std::size_t c = a + 1; c < part.clusters.size(); ++c) {
        std::vector<Duration> merged;
        for (NodeId i : part.clusters[a].nodes) merged.push_back(phis[static_cast<std::size_t>(i)]);
        for (NodeId i : part.clusters[c].nodes) merged.push_back(phis[static_cast<std::size_t>(i)]);
        EXPECT_FALSE(is_synchronized_set(merged, merged, b));
      }
    }
    Duration largest = 0;
    for (NodeId i : ids) largest = std::max(largest, phis[static_cast<std::size_t>(i)]);
    const auto& c1 = part.clusters.front().nodes;
    EXPECT_TRUE(std::any_of(c1.begin(), c1.end(), [&](NodeId i) {
      return phis[static_cast<std::size_t>(i)] == largest;
    }));
  }
}

TEST(Convergence, LockstepConvergesAtStart) {
  Trace t = Lockstep({0, kSec / 2, kSec / 4, 0}, 12);
  auto at = detect_convergence(t);
  ASSERT_TRUE(at);
  EXPECT_EQ(*at, measurement_start(t));
}

TEST(Convergence, LateJoinerDelaysConvergence) {
  const ProtocolParams p = Params4();
  std::vector<std::pair<RealTime, NodeId>> fires;
  for (int k = 1; k <= 12; ++k) {
    for (NodeId i = 0; i < 3; ++i) fires.emplace_back(k * kCycle, i);
    fires.emplace_back(k <= 5 ? k * kCycle + kCycle / 2 : k * kCycle + kSec / 2, 3);
  }
  std::sort(fires.begin(), fires.end());
  Trace t = Synthetic(p, {}, 13 * kCycle - kSec, fires);
  auto at = detect_convergence(t);
  ASSERT_TRUE(at);
  // Node 3's first fire in step with the others.
  EXPECT_EQ(*at, 6 * kCycle + kSec / 2);
}

TEST(Convergence, NeverWhenSilentAtEnd) {
  Trace t = Lockstep({0, 0, 0, 0}, 3);
  t.header.end = 8 * kCycle;
  EXPECT_FALSE(detect_convergence(FireIndex(t), t.header.params, 2 * kCycle));
  EXPECT_THROW(measure_tightness(t), NotConverged);
}

TEST(Convergence, ExtensionKeepsConvergence) {
  Trace t = Lockstep({0, kSec / 2, 0, kSec / 3}, 8);
  auto at = detect_convergence(t);
  Trace longer = Lockstep({0, kSec / 2, 0, kSec / 3}, 12);
  auto at_longer = detect_convergence(longer);
  ASSERT_TRUE(at && at_longer);
  EXPECT_EQ(*at, *at_longer);
}

TEST(Tightness, ReportsSpreadPerRound) {
  Trace t = Lockstep({0, kSec / 2, kSec / 4, 0}, 12);
  TightnessReport rep = measure_tightness(t);
  EXPECT_EQ(rep.max_spread, kSec / 2);
  for (const auto& r : rep.rounds) EXPECT_EQ(r.spread, kSec / 2);
}

TEST(Tightness, SingleNodeSpreadsZero) {
  std::vector<std::pair<RealTime, NodeId>> fires;
  for (int k = 1; k <= 12; ++k) fires.emplace_back(k * kCycle, 0);
  Trace t = Synthetic(Params4(), {1, 2, 3}, 13 * kCycle - kSec, fires);
  // n=4 with three faulty ids is not a legal header, but the checker only
  // looks at the correct node.
  FireIndex index(t);
  TightnessReport rep = measure_tightness(index, t.header.params, 0);
  EXPECT_EQ(rep.max_spread, 0);
  EXPECT_EQ(rep.rounds.size(), 12u);
}

TEST(CycleBounds, FlagsShortAndLongGaps) {
  std::vector<std::pair<RealTime, NodeId>> fires{{kCycle, 0}, {kCycle + kCycle / 2, 0},
                                                 {3 * kCycle, 0}};
  Trace t = Synthetic(Params4(), {1, 2, 3}, 5 * kCycle, fires);
  CycleBoundsReport rep = check_cycle_bounds(t, 0);
  EXPECT_EQ(rep.gaps, 2u);
  EXPECT_EQ(rep.min_gap, kCycle / 2);
  EXPECT_EQ(rep.max_gap, 3 * kCycle / 2);
  // short gap, long gap, and the open tail of 2 cycles
  EXPECT_EQ(rep.violations.size(), 3u);
}

Scenario ClosureScenario(StrategyKind adversary, std::uint64_t seed) {
  Scenario s;
  s.params = Params4();
  s.seed = seed;
  s.duration_cycles = 12;
  s.initial_state = InitialState::kSynchronized;
  s.clocks.mode = ClockMode::kNominal;
  s.byzantine = {{3, adversary, {}}};
  s.detail = TraceDetail::kFiresDeliveries;
  return s;
}

TEST(EndToEnd, SynchronizedStartSilent) {
  RunResult res = run(ClosureScenario(StrategyKind::kSilent, 1));
  const Trace& t = res.trace;
  auto at = detect_convergence(t);
  ASSERT_TRUE(at);
  EXPECT_EQ(*at, measurement_start(t));
  CycleBoundsReport bounds = check_cycle_bounds(t, *at);
  EXPECT_TRUE(bounds.violations.empty());
  EXPECT_EQ(bounds.min_gap, kCycle);
  EXPECT_EQ(bounds.max_gap, kCycle);
  SummationReport sum = check_summation_properties(t);
  EXPECT_TRUE(sum.violations.empty());
  EXPECT_GT(sum.messages_checked, 0u);
  AnalysisReport rep = analyze(t);
  EXPECT_TRUE(rep.closure_ok);
  EXPECT_EQ(rep.complexity->bad_rounds, 0u);
}

TEST(EndToEnd, AcceleratorKeepsCycleMin) {
  Scenario s = ClosureScenario(StrategyKind::kAccelerator, 2);
  RunResult res = run(s);
  AnalysisReport rep = analyze(res.trace);
  ASSERT_TRUE(rep.converged_at);
  // The accelerated cycle is Cycle − R_1; R_1 is rounded up to whole ns, so
  // the gap sits at most 1 ns under the real-valued (2/3)·Cycle.
  const RefractoryFunction ref = build_ref(s.params);
  EXPECT_EQ(rep.cycle_bounds->min_gap, kCycle - ref.step(1));
  EXPECT_GE(static_cast<long double>(rep.cycle_bounds->min_gap) + 1,
            2.0L / 3.0L * static_cast<long double>(kCycle));
  EXPECT_LE(rep.cycle_bounds->max_gap, kCycle);
  EXPECT_TRUE(rep.summation->violations.empty());
}

TEST(EndToEnd, NoiseAdversarySummation) {
  Scenario s = ClosureScenario(StrategyKind::kRandomNoise, 3);
  s.initial_state = InitialState::kRandomPhases;
  s.delay_model = DelayModel::kUniform;
  s.clocks.mode = ClockMode::kSampled;
  s.params = validate_params(4, 1, kCycle, kSec, 1e-6);
  RunResult res = run(s);
  SummationReport sum = check_summation_properties(res.trace);
  EXPECT_TRUE(sum.violations.empty()) << sum.violations.front().detail;
}

TEST(Summation, DelayedAssessmentFlagsP1) {
  RunResult res = run(ClosureScenario(StrategyKind::kSilent, 4));
  Trace t = res.trace;
  const RealTime m = measurement_start(t);
  for (auto& r : t.records) {
    if (r.kind == RecordKind::kAssess && r.t >= m + kSec) {
      r.t = r.delivered + 2 * kSec;
      break;
    }
  }
  SummationReport sum = check_summation_properties(t);
  ASSERT_EQ(sum.violations.size(), 1u);
  EXPECT_EQ(sum.violations[0].property, "P1");
}

TEST(Summation, NeedsAssessments) {
  Scenario s = ClosureScenario(StrategyKind::kSilent, 5);
  s.detail = TraceDetail::kFires;
  RunResult res = run(s);
  EXPECT_THROW(check_summation_properties(res.trace), InsufficientDetail);
}

}  // namespace
}  // namespace pulsesync
