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


#include "pulsesync/network.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace pulsesync {
namespace {

constexpr Duration kSec = kNanosPerSecond;
const std::vector<NodeId> kAll{0, 1, 2, 3};

ProtocolParams Strong() { return validate_params(4, 1, 100 * kSec, kSec, 0.0); }
ProtocolParams Relay() {
  return validate_params(4, 1, 300 * kSec, kSec, 0.0, NetworkMode::kRelay);
}

std::pair<Duration, Duration> Extent(const DeliveryPlan& p) {
  Duration lo = kNever, hi = 0;
  for (const auto& d : p.deliveries) {
    lo = std::min(lo, d.deliver_real - p.send_real);
    hi = std::max(hi, d.deliver_real - p.send_real);
  }
  return {lo, hi};
}

TEST(PlanBroadcast, StrongWithinD) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto plan = plan_broadcast(Strong(), DelayModel::kUniform, {0, 0}, 10 * kSec, kAll, rng);
    ASSERT_EQ(plan.deliveries.size(), 4u);
    const auto [lo, hi] = Extent(plan);
    ASSERT_GT(lo, 0);
    ASSERT_LE(hi, kSec);
    ASSERT_TRUE(plan_conforms(Strong(), plan));
  }
}

TEST(PlanBroadcast, SenderReceivesOwnMessage) {
  Rng rng(2);
  const auto plan = plan_broadcast(Strong(), DelayModel::kUniform, {2, 1}, 0, kAll, rng);
  EXPECT_TRUE(std::any_of(plan.deliveries.begin(), plan.deliveries.end(),
                          [](const Delivery& d) { return d.recipient == 2; }));
}

TEST(PlanBroadcast, ConstantIsExactlyD) {
  Rng rng(3);
  const auto strong = plan_broadcast(Strong(), DelayModel::kConstant, {0, 0}, 0, kAll, rng);
  EXPECT_EQ(Extent(strong), std::make_pair(kSec, kSec));
  const auto relay = plan_broadcast(Relay(), DelayModel::kConstant, {0, 0}, 0, kAll, rng);
  EXPECT_EQ(Extent(relay), std::make_pair(3 * kSec, 3 * kSec));
}

TEST(PlanBroadcast, RelayWithinThreeDAndSkewTwoD) {
  Rng rng(4);
  Duration widest = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto plan = plan_broadcast(Relay(), DelayModel::kUniform, {1, 0}, 5 * kSec, kAll, rng);
    const auto [lo, hi] = Extent(plan);
    ASSERT_GT(lo, 0);
    ASSERT_LE(hi, 3 * kSec);
    ASSERT_LE(hi - lo, 2 * kSec);
    widest = std::max(widest, hi - lo);
    ASSERT_TRUE(plan_conforms(Relay(), plan));
  }
  EXPECT_GT(widest, kSec);
}

TEST(PlanBroadcast, ForcedDelayClamped) {
  Rng rng(5);
  const auto a = plan_broadcast(Strong(), DelayModel::kUniform, {3, 0}, 0, kAll, rng, kSec / 2);
  EXPECT_EQ(Extent(a), std::make_pair(kSec / 2, kSec / 2));
  const auto b = plan_broadcast(Strong(), DelayModel::kUniform, {3, 0}, 0, kAll, rng, 5 * kSec);
  EXPECT_EQ(Extent(b).second, kSec);
}

TEST(PlanBroadcast, Deterministic) {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) {
    const auto pa = plan_broadcast(Relay(), DelayModel::kUniform, {0, 1}, i * kSec, kAll, a);
    const auto pb = plan_broadcast(Relay(), DelayModel::kUniform, {0, 1}, i * kSec, kAll, b);
    ASSERT_EQ(pa.deliveries.size(), pb.deliveries.size());
    for (std::size_t k = 0; k < pa.deliveries.size(); ++k) {
      ASSERT_EQ(pa.deliveries[k].recipient, pb.deliveries[k].recipient);
      ASSERT_EQ(pa.deliveries[k].deliver_real, pb.deliveries[k].deliver_real);
    }
  }
}

TEST(PlanConforms, RejectsViolations) {
  DeliveryPlan p;
  p.send_real = 0;
  p.deliveries = {{0, kSec + 1}};
  EXPECT_FALSE(plan_conforms(Strong(), p));
  p.deliveries = {{0, 0}};
  EXPECT_FALSE(plan_conforms(Strong(), p));
  p.deliveries = {{0, 1}, {1, 2 * kSec + 2}};
  EXPECT_FALSE(plan_conforms(Relay(), p));
  p.deliveries = {{0, kSec}, {1, 3 * kSec}};
  EXPECT_TRUE(plan_conforms(Relay(), p));
}

TEST(Strategy, NamesRoundTrip) {
  for (auto k : {StrategyKind::kSilent, StrategyKind::kRandomNoise, StrategyKind::kAccelerator,
                 StrategyKind::kTargetedDesync, StrategyKind::kDuplicateSpammer}) {
    EXPECT_EQ(parse_strategy(to_string(k)), k);
  }
  EXPECT_FALSE(parse_strategy("friendly"));
}

}  // namespace
}  // namespace pulsesync
