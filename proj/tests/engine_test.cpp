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


#include "pulsesync/engine.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "pulsesync/analysis.hpp"

namespace pulsesync {
namespace {

constexpr Duration kSec = kNanosPerSecond;

Scenario Base(StrategyKind kind = StrategyKind::kSilent) {
  Scenario s;
  s.params = validate_params(4, 1, 100 * kSec, kSec, 1e-6);
  s.seed = 5;
  s.duration_cycles = 10;
  s.byzantine = {{3, kind, {}}};
  return s;
}

std::map<NodeId, int> FiresPerNode(const Trace& t) {
  std::map<NodeId, int> out;
  for (const auto& r : t.records) {
    if (r.kind == RecordKind::kFire && !r.faulty) ++out[r.node];
  }
  return out;
}

TEST(Engine, SynchronizedSilentFiresOncePerCycle) {
  Scenario s = Base();
  s.initial_state = InitialState::kSynchronized;
  const RunResult r = run(s);
  const auto fires = FiresPerNode(r.trace);
  ASSERT_EQ(fires.size(), 3u);
  for (const auto& [node, count] : fires) {
    EXPECT_GE(count, 9) << node;
    EXPECT_LE(count, 11) << node;
  }
  const AnalysisReport rep = analyze(r.trace);
  ASSERT_TRUE(rep.converged_at);
  EXPECT_TRUE(rep.closure_ok);
}

TEST(Engine, SameSeedSameBytes) {
  for (auto kind : {StrategyKind::kRandomNoise, StrategyKind::kAccelerator,
                    StrategyKind::kDuplicateSpammer}) {
    Scenario s = Base(kind);
    s.initial_state = InitialState::kAdversarialPools;
    s.detail = TraceDetail::kFull;
    EXPECT_EQ(trace_to_string(run(s).trace), trace_to_string(run(s).trace));
    Scenario other = s;
    other.seed = 6;
    EXPECT_NE(trace_to_string(run(s).trace), trace_to_string(run(other).trace));
  }
}

TEST(Engine, DeliveriesFollowSendsWithinContract) {
  for (NetworkMode mode : {NetworkMode::kStrongBroadcast, NetworkMode::kRelay}) {
    Scenario s = Base(StrategyKind::kRandomNoise);
    s.params = validate_params(4, 1, 300 * kSec, kSec, 1e-6, mode);
    const Trace t = run(s).trace;
    std::map<std::uint64_t, RealTime> sent;
    std::map<std::uint64_t, std::pair<RealTime, RealTime>> spread;
    std::size_t checked = 0;
    for (const auto& r : t.records) {
      if (r.kind == RecordKind::kFire) sent[r.msg] = r.t;
      if (r.kind != RecordKind::kDeliver) continue;
      ASSERT_TRUE(sent.count(r.msg));
      const Duration delay = r.t - sent[r.msg];
      ASSERT_GT(delay, 0);
      ASSERT_LE(delay, s.params.effective_d());
      auto [it, fresh] = spread.try_emplace(r.msg, r.t, r.t);
      it->second.first = std::min(it->second.first, r.t);
      it->second.second = std::max(it->second.second, r.t);
      ++checked;
    }
    EXPECT_GT(checked, 100u);
    for (const auto& [msg, lohi] : spread) ASSERT_LE(lohi.second - lohi.first, 2 * s.params.d);
  }
}

TEST(Engine, FaultyIdsOnlyFromScenario) {
  const Trace t = run(Base(StrategyKind::kRandomNoise)).trace;
  std::size_t faulty = 0;
  for (const auto& r : t.records) {
    if (r.kind != RecordKind::kFire || !r.faulty) continue;
    ++faulty;
    ASSERT_EQ(r.node, 3);
  }
  EXPECT_GT(faulty, 0u);
  EXPECT_EQ(t.correct_nodes(), (std::vector<NodeId>{0, 1, 2}));
}

TEST(Engine, AdversarialPoolsInjection) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Scenario s = Base();
    s.seed = seed;
    s.initial_state = InitialState::kAdversarialPools;
    const ProtocolContext ctx(s.params);
    const std::vector<LocalTime> start(4, 1000 * kSec);
    const auto states = inject_arbitrary_state(s, ctx, start);
    ASSERT_EQ(states.size(), 4u);
    const Duration decay = ctx.constants.tau_ns[6];
    for (const NodeState& st : states) {
      ASSERT_EQ(st.counter, static_cast<int>(st.pool.cs.size()));
      ASSERT_GE(st.elapsed(1000 * kSec), 0);
      ASSERT_LE(st.elapsed(1000 * kSec), s.params.cycle);
      std::set<std::uint64_t> ids;
      std::set<NodeId> senders;
      for (const auto* set : {&st.pool.cs, &st.pool.ucs, &st.pool.rucs}) {
        for (const StoredMessage& m : *set) {
          ASSERT_TRUE(ids.insert(m.id).second);
          ASSERT_GE(m.sender, 0);
          ASSERT_LT(m.sender, 4);
          ASSERT_LE(1000 * kSec - m.arrival_local, decay);
          ASSERT_GE(1000 * kSec - m.arrival_local, 0);
        }
      }
      for (const StoredMessage& m : st.pool.cs) ASSERT_TRUE(senders.insert(m.sender).second);
      for (const StoredMessage& m : st.pool.ucs) ASSERT_TRUE(senders.insert(m.sender).second);
    }
    EXPECT_EQ(states[0].pool.cs, inject_arbitrary_state(s, ctx, start)[0].pool.cs);
  }
}

TEST(Engine, InitialElapsedOverridesPhases) {
  Scenario s = Base();
  s.clocks.mode = ClockMode::kNominal;
  s.initial_elapsed = std::vector<Duration>{100 * kSec, 60 * kSec, 60 * kSec, 0};
  s.duration_cycles = 1;
  const Trace t = run(s).trace;
  RealTime first = kNever;
  for (const auto& r : t.records) {
    if (r.kind == RecordKind::kFire && r.node == 0) first = std::min(first, r.t);
  }
  EXPECT_EQ(first, 0);
}

TEST(Engine, EventCapThrows) {
  Scenario s = Base(StrategyKind::kRandomNoise);
  s.max_events = 50;
  EXPECT_THROW(run(s), EventOverflow);
}

TEST(Engine, InvalidScenariosRejected) {
  Scenario s = Base();
  s.byzantine = {{2, StrategyKind::kSilent, {}}, {3, StrategyKind::kSilent, {}}};
  EXPECT_THROW(run(s), ScenarioInvalid);
  s.byzantine = {{4, StrategyKind::kSilent, {}}};
  EXPECT_THROW(run(s), ScenarioInvalid);
  s = Base();
  s.duration_cycles = -1;
  EXPECT_THROW(run(s), ScenarioInvalid);
  s = Base();
  s.initial_elapsed = std::vector<Duration>{0, 0};
  EXPECT_THROW(run(s), ScenarioInvalid);
}

TEST(Engine, ClockModes) {
  Scenario s = Base();
  s.clocks.mode = ClockMode::kFastSlow;
  const auto clocks = make_clocks(s);
  ASSERT_EQ(clocks.size(), 4u);
  std::set<std::int64_t> rates;
  for (const Clock& c : clocks) rates.insert(c.rate_num);
  EXPECT_EQ(*rates.begin(), min_rate_num(1e-6));
  EXPECT_EQ(*rates.rbegin(), max_rate_num(1e-6));
  s.clocks.mode = ClockMode::kNominal;
  for (const Clock& c : make_clocks(s)) {
    EXPECT_EQ(c.rate_num, Clock::kRateDenominator);
    EXPECT_EQ(c.offset, 0);
  }
}

}  // namespace
}  // namespace pulsesync
