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

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace pulsesync {
namespace {

Duration max_delay(const ProtocolParams& p) {
  return p.mode == NetworkMode::kRelay ? 3 * p.d : p.d;
}

class Silent final : public Adversary {
 public:
  AdversaryAction step(const WorldView&, Rng&) override { return {}; }
};

class RandomNoise final : public Adversary {
 public:
  RandomNoise(const StrategyParams& params, std::vector<NodeId> ids)
      : params_(params), ids_(std::move(ids)) {}

  AdversaryAction step(const WorldView& view, Rng& rng) override {
    const auto& p = view.ctx->params;
    const Duration period = params_.period.value_or(p.cycle / 5);
    AdversaryAction action;
    if (next_.empty()) {
      for (std::size_t i = 0; i < ids_.size(); ++i) next_.push_back(view.now + rng.range(0, period));
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      while (next_[i] <= view.now) {
        AdversaryMessage m;
        m.message = FireMessage{ids_[i], rng.range(0, p.n)};
        if (rng.below(2) == 0) m.forced_delay = rng.range(1, max_delay(p));
        action.messages.push_back(m);
        next_[i] += rng.range(1, 2 * period);
      }
    }
    action.next_wake = *std::min_element(next_.begin(), next_.end());
    return action;
  }

 private:
  StrategyParams params_;
  std::vector<NodeId> ids_;
  std::vector<RealTime> next_;
};

class DuplicateSpammer final : public Adversary {
 public:
  DuplicateSpammer(const StrategyParams& params, std::vector<NodeId> ids)
      : params_(params), ids_(std::move(ids)) {}

  AdversaryAction step(const WorldView& view, Rng& rng) override {
    const auto& p = view.ctx->params;
    const Duration period = params_.period.value_or(p.cycle / 3);
    const Duration gap = params_.burst_gap.value_or(std::max<Duration>(1, p.d / 4));
    AdversaryAction action;
    if (bursts_.empty()) {
      for (std::size_t i = 0; i < ids_.size(); ++i) {
        bursts_.push_back(view.now + rng.range(0, period));
        queued_.emplace_back();
      }
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      while (bursts_[i] <= view.now) {
        for (int b = 0; b < std::max(1, params_.burst); ++b) {
          queued_[i].push_back(bursts_[i] + b * gap);
        }
        bursts_[i] += rng.range(period / 2 + 1, period + period / 2);
      }
      auto& queue = queued_[i];
      std::sort(queue.begin(), queue.end());
      while (!queue.empty() && queue.front() <= view.now) {
        AdversaryMessage m;
        m.message = FireMessage{ids_[i], rng.range(0, std::max(0, p.f))};
        action.messages.push_back(m);
        queue.erase(queue.begin());
      }
    }
    std::optional<RealTime> wake;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      RealTime t = bursts_[i];
      if (!queued_[i].empty()) t = std::min(t, queued_[i].front());
      if (!wake || t < *wake) wake = t;
    }
    action.next_wake = wake;
    return action;
  }

 private:
  StrategyParams params_;
  std::vector<NodeId> ids_;
  std::vector<RealTime> bursts_;
  std::vector<std::vector<RealTime>> queued_;
};

// Sends counters 0..m−1 (one per faulty id) so they land when a chosen correct
// node reaches threshold level m; that node then fires with counter m, which
// is the largest shortening of a cycle the faulty nodes can cause.
class PhaseAttacker final : public Adversary {
 public:
  PhaseAttacker(StrategyKind kind, const StrategyParams& params, std::vector<NodeId> ids)
      : kind_(kind), params_(params), ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
  }

  AdversaryAction step(const WorldView& view, Rng&) override {
    AdversaryAction action;
    const auto& p = view.ctx->params;
    const int level = static_cast<int>(ids_.size());
    if (level == 0) return action;

    std::optional<NodeId> target;
    RealTime arrival = kNever;
    for (NodeId node : candidates(view)) {
      const auto key = std::make_pair(node, (*view.states)[static_cast<std::size_t>(node)].pulse_local);
      if (std::find(done_.begin(), done_.end(), key) != done_.end()) continue;
      RealTime t = next_level_real(view, node, level) + params_.lag;
      if (t < arrival) {
        arrival = t;
        target = node;
      }
    }
    if (!target) return action;

    // Older entries from these senders must have decayed at every receiver,
    // otherwise the new messages would be discarded as duplicates.
    const long double rho = p.rho;
    const auto decay_real = static_cast<Duration>(
        std::ceil(view.ctx->constants.message_decay / (1.0L - rho))) + max_delay(p) + 1;
    RealTime send = arrival - p.d;
    if (last_send_ != kNever) send = std::max(send, last_send_ + decay_real);

    if (send > view.now) {
      action.next_wake = send;
      return action;
    }
    const Duration delay = std::clamp<Duration>(arrival - view.now, 1, p.d);
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      AdversaryMessage m;
      m.message = FireMessage{ids_[r], static_cast<std::int64_t>(r)};
      m.forced_delay = delay;
      action.messages.push_back(m);
    }
    last_send_ = view.now;
    for (NodeId node : candidates(view)) {
      done_.emplace_back(node, (*view.states)[static_cast<std::size_t>(node)].pulse_local);
    }
    if (done_.size() > 256) done_.erase(done_.begin(), done_.begin() + 128);
    return action;
  }

 private:
  std::vector<NodeId> candidates(const WorldView& view) const {
    std::vector<NodeId> correct;
    for (std::size_t i = 0; i < view.faulty->size(); ++i) {
      if (!(*view.faulty)[i]) correct.push_back(static_cast<NodeId>(i));
    }
    if (kind_ == StrategyKind::kAccelerator || correct.empty()) return correct;
    if (params_.target) return {*params_.target};
    // The victim is the node that fired most recently: the one furthest from
    // the leader of its group.
    NodeId victim = correct.front();
    RealTime latest = std::numeric_limits<RealTime>::min();
    for (NodeId node : correct) {
      RealTime t = (*view.last_fire_real)[static_cast<std::size_t>(node)];
      if (t == kNever) t = std::numeric_limits<RealTime>::min() + 1;
      if (t > latest) {
        latest = t;
        victim = node;
      }
    }
    return {victim};
  }

  StrategyKind kind_;
  StrategyParams params_;
  std::vector<NodeId> ids_;
  std::vector<std::pair<NodeId, LocalTime>> done_;
  RealTime last_send_ = kNever;
};

}  // namespace

std::string_view to_string(DelayModel model) {
  return model == DelayModel::kConstant ? "constant" : "uniform";
}

std::optional<DelayModel> parse_delay_model(std::string_view text) {
  if (text == "uniform") return DelayModel::kUniform;
  if (text == "constant") return DelayModel::kConstant;
  return std::nullopt;
}

DeliveryPlan plan_broadcast(const ProtocolParams& params, DelayModel model,
                            const FireMessage& msg, RealTime send_real,
                            const std::vector<NodeId>& recipients, Rng& rng,
                            std::optional<Duration> forced_delay) {
  DeliveryPlan plan;
  plan.message = msg;
  plan.send_real = send_real;
  const Duration d = params.d;
  const bool relay = params.mode == NetworkMode::kRelay;

  if (forced_delay) {
    const Duration delay = std::clamp<Duration>(*forced_delay, 1, max_delay(params));
    for (NodeId r : recipients) plan.deliveries.push_back({r, send_real + delay});
    return plan;
  }
  if (!relay) {
    for (NodeId r : recipients) {
      const Duration delay = model == DelayModel::kConstant ? d : rng.range(1, d);
      plan.deliveries.push_back({r, send_real + delay});
    }
    return plan;
  }
  if (model == DelayModel::kConstant) {
    for (NodeId r : recipients) plan.deliveries.push_back({r, send_real + 3 * d});
    return plan;
  }
  const Duration anchor = rng.range(1, d);
  for (NodeId r : recipients) {
    plan.deliveries.push_back({r, send_real + anchor + rng.range(0, 2 * d)});
  }
  return plan;
}

bool plan_conforms(const ProtocolParams& params, const DeliveryPlan& plan) {
  if (plan.deliveries.empty()) return true;
  RealTime lo = kNever;
  RealTime hi = std::numeric_limits<RealTime>::min();
  for (const auto& dlv : plan.deliveries) {
    const Duration delay = dlv.deliver_real - plan.send_real;
    if (delay <= 0 || delay > max_delay(params)) return false;
    lo = std::min(lo, dlv.deliver_real);
    hi = std::max(hi, dlv.deliver_real);
  }
  if (params.mode == NetworkMode::kRelay && hi - lo > 2 * params.d) return false;
  return true;
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kSilent:
      return "silent";
    case StrategyKind::kRandomNoise:
      return "random_noise";
    case StrategyKind::kAccelerator:
      return "accelerator";
    case StrategyKind::kTargetedDesync:
      return "targeted_desync";
    case StrategyKind::kDuplicateSpammer:
      return "duplicate_spammer";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view text) {
  if (text == "silent") return StrategyKind::kSilent;
  if (text == "random_noise" || text == "noise") return StrategyKind::kRandomNoise;
  if (text == "accelerator") return StrategyKind::kAccelerator;
  if (text == "targeted_desync") return StrategyKind::kTargetedDesync;
  if (text == "duplicate_spammer") return StrategyKind::kDuplicateSpammer;
  return std::nullopt;
}

std::unique_ptr<Adversary> make_adversary(StrategyKind kind, const StrategyParams& params,
                                          std::vector<NodeId> ids) {
  switch (kind) {
    case StrategyKind::kSilent:
      return std::make_unique<Silent>();
    case StrategyKind::kRandomNoise:
      return std::make_unique<RandomNoise>(params, std::move(ids));
    case StrategyKind::kDuplicateSpammer:
      return std::make_unique<DuplicateSpammer>(params, std::move(ids));
    case StrategyKind::kAccelerator:
    case StrategyKind::kTargetedDesync:
      return std::make_unique<PhaseAttacker>(kind, params, std::move(ids));
  }
  return std::make_unique<Silent>();
}

RealTime next_level_real(const WorldView& view, NodeId node, int level) {
  const auto& state = (*view.states)[static_cast<std::size_t>(node)];
  const auto& clock = (*view.clocks)[static_cast<std::size_t>(node)];
  const LocalTime local = state.pulse_local + view.ctx->ref.level_start(level);
  return std::max(view.now, clock.local_to_real(local));
}

}  // namespace pulsesync
