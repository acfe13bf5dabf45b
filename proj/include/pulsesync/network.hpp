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

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulsesync/clock.hpp"
#include "pulsesync/protocol.hpp"
#include "pulsesync/rng.hpp"

namespace pulsesync {

enum class DelayModel { kUniform, kConstant };

std::string_view to_string(DelayModel model);
std::optional<DelayModel> parse_delay_model(std::string_view text);

struct Delivery {
  NodeId recipient = 0;
  RealTime deliver_real = 0;
};

struct DeliveryPlan {
  FireMessage message;
  RealTime send_real = 0;
  std::vector<Delivery> deliveries;
};

// Strong broadcast: each delay drawn in (0, d] (or exactly d when constant).
// Relay: an anchor lo in (0, d], every recipient in [lo, lo + 2d], so all
// deliveries fall within 3d of the send with at most 2d of skew (constant
// model: everyone at exactly 3d).
// A forced delay delivers to every recipient at send + forced, clamped to the
// model's largest admissible delay.
DeliveryPlan plan_broadcast(const ProtocolParams& params, DelayModel model,
                            const FireMessage& msg, RealTime send_real,
                            const std::vector<NodeId>& recipients, Rng& rng,
                            std::optional<Duration> forced_delay = std::nullopt);

// Checks a plan against the active mode's delivery contract.
bool plan_conforms(const ProtocolParams& params, const DeliveryPlan& plan);

enum class StrategyKind { kSilent, kRandomNoise, kAccelerator, kTargetedDesync, kDuplicateSpammer };

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view text);

struct StrategyParams {
  // Mean spacing of random_noise messages and of duplicate_spammer bursts.
  std::optional<Duration> period;
  // Messages per duplicate_spammer burst and their spacing.
  int burst = 3;
  std::optional<Duration> burst_gap;
  // targeted_desync victim; defaults to the correct node with the smallest φ.
  std::optional<NodeId> target;
  // Accelerator messages arrive this long after the targeted level boundary.
  Duration lag = 0;
};

// Everything the (omniscient) adversary may look at.
struct WorldView {
  const ProtocolContext* ctx = nullptr;
  RealTime now = 0;
  const std::vector<Clock>* clocks = nullptr;
  const std::vector<NodeState>* states = nullptr;
  const std::vector<bool>* faulty = nullptr;
  const std::vector<RealTime>* last_fire_real = nullptr;  // kNever-filled until a fire
};

struct AdversaryMessage {
  FireMessage message;
  std::optional<Duration> forced_delay;
};

struct AdversaryAction {
  std::vector<AdversaryMessage> messages;  // sent at view.now
  std::optional<RealTime> next_wake;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  // Called at each requested wake and after every correct fire.
  virtual AdversaryAction step(const WorldView& view, Rng& rng) = 0;
};

// One adversary drives all of `ids` in coordination.
std::unique_ptr<Adversary> make_adversary(StrategyKind kind, const StrategyParams& params,
                                          std::vector<NodeId> ids);

// Real time at which correct node `node` next reaches threshold `level`.
RealTime next_level_real(const WorldView& view, NodeId node, int level);

}  // namespace pulsesync
