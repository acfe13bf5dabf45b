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

#include "pulsesync/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace pulsesync {
namespace {

Duration age(const StoredMessage& m, LocalTime now) { return now - m.arrival_local; }

bool holds_sender(const std::vector<StoredMessage>& set, NodeId sender) {
  return std::any_of(set.begin(), set.end(),
                     [sender](const StoredMessage& m) { return m.sender == sender; });
}

// Newest first; the id breaks ties between equal stamps deterministically.
bool newer(const StoredMessage& a, const StoredMessage& b) {
  if (a.arrival_local != b.arrival_local) return a.arrival_local > b.arrival_local;
  return a.id > b.id;
}

void retire(std::vector<StoredMessage>& rucs, const StoredMessage& m) {
  auto it = std::find_if(rucs.begin(), rucs.end(),
                         [&](const StoredMessage& r) { return r.sender == m.sender; });
  if (it == rucs.end()) {
    rucs.push_back(m);
  } else if (newer(m, *it)) {
    *it = m;
  }
}

bool prune_changed(const PruneRecord& r) { return r.deleted || r.retired || r.trimmed; }

class StepRecorder {
 public:
  StepRecorder(NodeState& state, NodeOutput& out) : state_(state), out_(out) {}

  void prune(const ProtocolContext& ctx, LocalTime now) {
    PruneRecord r = pulsesync::prune(state_, ctx, now);
    if (prune_changed(r)) out_.prunes.push_back(r);
  }

  void assess(const PendingAssessment& p, LocalTime now, Verdict v, VerdictReason why) {
    AssessmentRecord a;
    a.tag = p.tag;
    a.sender = p.sender;
    a.counter = p.counter;
    a.arrival_local = p.arrival_local;
    a.at_local = now;
    a.verdict = v;
    a.reason = why;
    out_.assessments.push_back(a);
  }

  // Finalize pending assessments whose window closed before `now`.
  void expire(LocalTime now) {
    auto& pending = state_.pending;
    for (auto it = pending.begin(); it != pending.end();) {
      if (it->deadline_local < now) {
        assess(*it, now, Verdict::kNotTimely, VerdictReason::kExpired);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
  }

  void cancel(const std::vector<std::uint64_t>& removed, LocalTime now) {
    auto& pending = state_.pending;
    for (auto it = pending.begin(); it != pending.end();) {
      if (std::find(removed.begin(), removed.end(), it->entry_id) != removed.end()) {
        assess(*it, now, Verdict::kNotTimely, VerdictReason::kSuperseded);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
  }

  // Re-run condition 3 for every open assessment, oldest arrival first.
  void reevaluate(const ProtocolContext& ctx, LocalTime now) {
    auto& pending = state_.pending;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PendingAssessment& a, const PendingAssessment& b) {
                       if (a.arrival_local != b.arrival_local) {
                         return a.arrival_local < b.arrival_local;
                       }
                       return a.entry_id < b.entry_id;
                     });
    bool progressed = true;
    while (progressed) {
      progressed = false;
      for (auto it = pending.begin(); it != pending.end(); ++it) {
        if (timeliness(state_, ctx, it->counter, now) != Verdict::kTimely) continue;
        PendingAssessment p = *it;
        pending.erase(it);
        make_accountable(state_, p.entry_id, p.counter);
        prune(ctx, now);
        assess(p, now, Verdict::kTimely, VerdictReason::kSupported);
        progressed = true;
        break;
      }
    }
  }

  void fire_check(const ProtocolContext& ctx, LocalTime now) {
    for (auto& a : out_.assessments) a.counter_after = state_.counter;
    const int level = ctx.ref.threshold_at(state_.elapsed(now));
    if (state_.counter >= level) {
      out_.fired = FireMessage{state_.id, state_.counter};
      cycle_reset(state_, now);
    }
    state_.last_threshold = ctx.ref.threshold_at(state_.elapsed(now));
    out_.level = state_.last_threshold;
    out_.next_wakeup_local = next_wakeup(state_, ctx, now);
  }

 private:
  NodeState& state_;
  NodeOutput& out_;
};

}  // namespace

ProtocolContext::ProtocolContext(const ProtocolParams& p)
    : params(p), ref(build_ref(p)), constants(derive_constants(p)) {}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kTimely:
      return "timely";
    case Verdict::kNotTimely:
      return "not_timely";
    case Verdict::kPending:
      return "pending";
  }
  return "?";
}

const char* to_string(VerdictReason r) {
  switch (r) {
    case VerdictReason::kNone:
      return "none";
    case VerdictReason::kSupported:
      return "supported";
    case VerdictReason::kInvalidCounter:
      return "invalid_counter";
    case VerdictReason::kDuplicateSender:
      return "duplicate_sender";
    case VerdictReason::kSuperseded:
      return "superseded";
    case VerdictReason::kExpired:
      return "expired";
  }
  return "?";
}

int count_supporting(const NodeState& state, const ProtocolContext& ctx, std::int64_t k,
                     LocalTime now) {
  const auto& tau_ns = ctx.constants.tau_ns;
  if (k + 1 < 0 || k + 1 >= static_cast<std::int64_t>(tau_ns.size())) return 0;
  const Duration window = tau_ns[static_cast<std::size_t>(k + 1)];
  std::vector<NodeId> senders;
  auto scan = [&](const std::vector<StoredMessage>& set) {
    for (const auto& m : set) {
      if (age(m, now) <= window &&
          std::find(senders.begin(), senders.end(), m.sender) == senders.end()) {
        senders.push_back(m.sender);
      }
    }
  };
  scan(state.pool.cs);
  scan(state.pool.ucs);
  return static_cast<int>(senders.size());
}

Verdict timeliness(const NodeState& state, const ProtocolContext& ctx, std::int64_t k,
                   LocalTime now) {
  return count_supporting(state, ctx, k, now) >= k + 1 ? Verdict::kTimely : Verdict::kPending;
}

PruneRecord prune(NodeState& state, const ProtocolContext& ctx, LocalTime now) {
  const int n = ctx.params.n;
  const auto& tau_ns = ctx.constants.tau_ns;
  auto& pool = state.pool;
  PruneRecord record;
  record.at_local = now;

  const Duration decay = tau_ns[static_cast<std::size_t>(n + 2)];
  const auto before = pool.rucs.size();
  std::erase_if(pool.rucs, [&](const StoredMessage& m) { return age(m, now) > decay; });
  record.deleted = static_cast<int>(before - pool.rucs.size());

  const Duration horizon = tau_ns[static_cast<std::size_t>(n + 1)];
  for (auto* set : {&pool.cs, &pool.ucs}) {
    for (auto it = set->begin(); it != set->end();) {
      if (age(*it, now) > horizon) {
        // An entry already past the decay age would be deleted by the next
        // prune anyway; dropping it here keeps RUCS fresh after every prune.
        if (age(*it, now) <= decay) retire(pool.rucs, *it);
        it = set->erase(it);
        ++record.retired;
      } else {
        ++it;
      }
    }
  }

  while (!pool.cs.empty()) {
    const auto k = std::max<std::size_t>(1, pool.cs.size());
    auto oldest = std::min_element(pool.cs.begin(), pool.cs.end(),
                                   [](const StoredMessage& a, const StoredMessage& b) {
                                     return newer(b, a);
                                   });
    if (age(*oldest, now) <= tau_ns[k - 1]) break;
    pool.ucs.push_back(*oldest);
    pool.cs.erase(oldest);
    ++record.trimmed;
  }

  state.counter = static_cast<int>(pool.cs.size());
  record.counter_after = state.counter;
  return record;
}

void make_accountable(NodeState& state, std::uint64_t entry_id, std::int64_t k) {
  auto& pool = state.pool;
  auto match = [entry_id](const StoredMessage& m) { return m.id == entry_id; };
  auto trigger = std::find_if(pool.ucs.begin(), pool.ucs.end(), match);

  std::int64_t extra = 0;
  if (trigger != pool.ucs.end()) {
    const std::int64_t moves = std::max<std::int64_t>(1, k - state.counter + 1);
    pool.cs.push_back(*trigger);
    pool.ucs.erase(trigger);
    extra = moves - 1;
  } else if (std::any_of(pool.cs.begin(), pool.cs.end(), match)) {
    // An earlier accounting already counted this entry.
    extra = std::max<std::int64_t>(0, k + 1 - state.counter);
  } else {
    throw std::logic_error("make_accountable: triggering entry is not stored");
  }

  std::vector<StoredMessage> candidates = pool.ucs;
  std::sort(candidates.begin(), candidates.end(), newer);
  for (const auto& c : candidates) {
    if (extra == 0) break;
    if (holds_sender(pool.cs, c.sender)) continue;
    auto it = std::find(pool.ucs.begin(), pool.ucs.end(), c);
    pool.cs.push_back(*it);
    pool.ucs.erase(it);
    --extra;
  }
  if (extra > 0) {
    throw std::logic_error("make_accountable: not enough distinct uncounted messages");
  }
  state.counter = static_cast<int>(pool.cs.size());
}

void cycle_reset(NodeState& state, LocalTime now) { state.pulse_local = now; }

std::optional<LocalTime> next_wakeup(const NodeState& state, const ProtocolContext& ctx,
                                     LocalTime now) {
  const int n = ctx.params.n;
  const auto& tau_ns = ctx.constants.tau_ns;
  std::optional<LocalTime> best;
  auto offer = [&](LocalTime t) {
    t = std::max(t, now + 1);
    if (!best || t < *best) best = t;
  };

  const int level = ctx.ref.threshold_at(state.elapsed(now));
  if (level > 0) {
    offer(state.pulse_local + ctx.ref.level_start(level - 1));
  } else {
    offer(now + 1);
  }

  const auto& pool = state.pool;
  if (!pool.cs.empty()) {
    const auto k = std::max<std::size_t>(1, pool.cs.size());
    LocalTime oldest = pool.cs.front().arrival_local;
    for (const auto& m : pool.cs) oldest = std::min(oldest, m.arrival_local);
    offer(oldest + tau_ns[k - 1] + 1);
  }
  for (const auto* set : {&pool.cs, &pool.ucs}) {
    for (const auto& m : *set) {
      offer(m.arrival_local + tau_ns[static_cast<std::size_t>(n + 1)] + 1);
    }
  }
  for (const auto& m : pool.rucs) {
    offer(m.arrival_local + tau_ns[static_cast<std::size_t>(n + 2)] + 1);
  }
  for (const auto& p : state.pending) offer(p.deadline_local + 1);
  return best;
}

NodeOutput start_node(NodeState& state, const ProtocolContext& ctx, LocalTime now) {
  NodeOutput out;
  StepRecorder step(state, out);
  state.last_seen = now;
  step.prune(ctx, now);
  step.fire_check(ctx, now);
  return out;
}

NodeOutput on_receive(NodeState& state, const ProtocolContext& ctx, const FireMessage& msg,
                      LocalTime now, std::uint64_t tag) {
  NodeOutput out;
  StepRecorder step(state, out);
  state.last_seen = now;
  step.prune(ctx, now);
  step.expire(now);

  const std::int64_t k = msg.counter;
  PendingAssessment self;
  self.sender = msg.sender;
  self.counter = k;
  self.arrival_local = now;
  self.tag = tag;

  if (k < 0 || k > ctx.params.n - 1) {
    step.assess(self, now, Verdict::kNotTimely, VerdictReason::kInvalidCounter);
  } else {
    StoredMessage entry{msg.sender, now, state.next_entry_id++};
    self.entry_id = entry.id;
    self.deadline_local = now + ctx.constants.assessment_window;
    auto& pool = state.pool;
    pool.ucs.push_back(entry);

    auto other = [&](const StoredMessage& m) {
      return m.sender == msg.sender && m.id != entry.id;
    };
    const bool duplicate = std::any_of(pool.cs.begin(), pool.cs.end(), other) ||
                           std::any_of(pool.ucs.begin(), pool.ucs.end(), other) ||
                           std::any_of(pool.rucs.begin(), pool.rucs.end(), other);
    if (duplicate) {
      std::vector<std::uint64_t> removed;
      for (auto* set : {&pool.cs, &pool.ucs}) {
        for (const auto& m : *set) {
          if (other(m)) removed.push_back(m.id);
        }
        std::erase_if(*set, other);
      }
      state.counter = static_cast<int>(pool.cs.size());
      step.cancel(removed, now);
      step.assess(self, now, Verdict::kNotTimely, VerdictReason::kDuplicateSender);
    } else if (timeliness(state, ctx, k, now) == Verdict::kTimely) {
      make_accountable(state, entry.id, k);
      step.prune(ctx, now);
      step.assess(self, now, Verdict::kTimely, VerdictReason::kSupported);
    } else {
      // Evaluated below together with the older open assessments.
      state.pending.push_back(self);
    }
  }

  step.reevaluate(ctx, now);
  step.fire_check(ctx, now);
  return out;
}

NodeOutput on_timer(NodeState& state, const ProtocolContext& ctx, LocalTime now) {
  NodeOutput out;
  StepRecorder step(state, out);
  state.last_seen = now;
  step.prune(ctx, now);
  step.expire(now);
  step.fire_check(ctx, now);
  return out;
}

}  // namespace pulsesync
