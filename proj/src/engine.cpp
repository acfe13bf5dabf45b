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

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <set>

namespace pulsesync {
namespace {

// Ties at one real instant: timers, then deliveries, then the adversary.
enum class EventType : int { kTimer = 0, kDelivery = 1, kAdversary = 2 };

struct Event {
  RealTime t = 0;
  EventType type = EventType::kTimer;
  std::uint64_t seq = 0;
  NodeId node = 0;          // timer/delivery: the node stepped; adversary: group
  std::uint64_t gen = 0;    // timer/adversary generation
  std::uint64_t delivery = 0;

  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (type != o.type) return static_cast<int>(type) > static_cast<int>(o.type);
    return seq > o.seq;
  }
};

struct DeliveryInfo {
  FireMessage message;
  std::uint64_t msg = 0;
  RealTime deliver_real = 0;
};

struct AdversaryGroup {
  std::unique_ptr<Adversary> adversary;
  Rng rng{0};
  std::uint64_t gen = 0;
};

class Simulation {
 public:
  explicit Simulation(const Scenario& s)
      : scenario_(s), ctx_(s.params), n_(s.params.n), end_(s.end_real()) {}

  RunResult run() {
    setup();
    while (!queue_.empty()) {
      if (queue_.size() > scenario_.max_queue) {
        throw EventOverflow("event queue exceeded " + std::to_string(scenario_.max_queue));
      }
      Event ev = queue_.top();
      if (ev.t > end_) break;
      queue_.pop();
      if (++result_.stats.events > scenario_.max_events) {
        throw EventOverflow("more than " + std::to_string(scenario_.max_events) + " events");
      }
      now_ = ev.t;
      switch (ev.type) {
        case EventType::kTimer:
          if (ev.gen != timer_gen_[static_cast<std::size_t>(ev.node)]) break;
          handle(ev.node, on_timer(state(ev.node), ctx_, local(ev.node)));
          break;
        case EventType::kDelivery:
          deliver(ev);
          break;
        case EventType::kAdversary:
          if (ev.gen != groups_[static_cast<std::size_t>(ev.node)].gen) break;
          step_group(static_cast<std::size_t>(ev.node));
          break;
      }
    }
    result_.trace.header.end = end_;
    return std::move(result_);
  }

 private:
  void setup() {
    const auto& p = scenario_.params;
    faulty_.assign(static_cast<std::size_t>(n_), false);
    for (const auto& b : scenario_.byzantine) faulty_[static_cast<std::size_t>(b.id)] = true;

    clocks_ = make_clocks(scenario_);
    std::vector<LocalTime> start(static_cast<std::size_t>(n_));
    for (NodeId i = 0; i < n_; ++i) start[i] = clocks_[i].real_to_local(scenario_.chaos_until);
    states_ = inject_arbitrary_state(scenario_, ctx_, start);
    timer_gen_.assign(static_cast<std::size_t>(n_), 0);
    level_.assign(static_cast<std::size_t>(n_), -1);
    last_fire_.assign(static_cast<std::size_t>(n_), kNever);
    for (NodeId i = 0; i < n_; ++i) {
      delay_rng_.push_back(Rng::substream(scenario_.seed, Channel::kDelay, static_cast<std::uint64_t>(i)));
      if (!faulty_[i]) correct_.push_back(i);
    }

    auto& h = result_.trace.header;
    h.params = p;
    h.delay_model = scenario_.delay_model;
    h.seed = scenario_.seed;
    for (const auto& b : scenario_.byzantine) h.byzantine.push_back(b.id);
    std::sort(h.byzantine.begin(), h.byzantine.end());
    h.chaos_until = scenario_.chaos_until;
    h.end = end_;
    h.detail = scenario_.detail;

    now_ = scenario_.chaos_until;
    TraceRecord epoch;
    epoch.kind = RecordKind::kEpoch;
    epoch.label = "coherent";
    record(epoch);
    for (NodeId i : correct_) {
      const NodeState& s = state(i);
      TraceRecord r;
      r.kind = RecordKind::kInject;
      r.node = i;
      r.elapsed = s.elapsed(start[i]);
      r.counter = s.counter;
      r.cs = static_cast<int>(s.pool.cs.size());
      r.ucs = static_cast<int>(s.pool.ucs.size());
      r.rucs = static_cast<int>(s.pool.rucs.size());
      record(r);
    }

    // Strategies sharing a kind coordinate as one adversary.
    for (StrategyKind kind : {StrategyKind::kSilent, StrategyKind::kRandomNoise,
                              StrategyKind::kAccelerator, StrategyKind::kTargetedDesync,
                              StrategyKind::kDuplicateSpammer}) {
      std::vector<NodeId> ids;
      const StrategyParams* params = nullptr;
      for (const auto& b : scenario_.byzantine) {
        if (b.strategy != kind) continue;
        ids.push_back(b.id);
        if (!params) params = &b.params;
      }
      if (ids.empty() || kind == StrategyKind::kSilent) continue;
      AdversaryGroup g;
      g.adversary = make_adversary(kind, *params, ids);
      g.rng = Rng::substream(scenario_.seed, Channel::kAdversary, static_cast<std::uint64_t>(kind));
      groups_.push_back(std::move(g));
    }

    for (NodeId i : correct_) handle(i, start_node(state(i), ctx_, local(i)));
    for (std::size_t g = 0; g < groups_.size(); ++g) step_group(g);
  }

  NodeState& state(NodeId i) { return states_[static_cast<std::size_t>(i)]; }
  LocalTime local(NodeId i) const { return clocks_[static_cast<std::size_t>(i)].real_to_local(now_); }

  bool at_least(TraceDetail level) const {
    return static_cast<int>(scenario_.detail) >= static_cast<int>(level);
  }

  void record(TraceRecord r) {
    r.t = now_;
    r.seq = result_.trace.records.size();
    result_.trace.records.push_back(std::move(r));
  }

  void push(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(ev);
  }

  void deliver(const Event& ev) {
    const DeliveryInfo& info = deliveries_[ev.delivery];
    if (at_least(TraceDetail::kFiresDeliveries)) {
      TraceRecord r;
      r.kind = RecordKind::kDeliver;
      r.node = ev.node;
      r.sender = info.message.sender;
      r.counter = info.message.counter;
      r.msg = info.msg;
      record(r);
    }
    handle(ev.node, on_receive(state(ev.node), ctx_, info.message, local(ev.node), ev.delivery));
  }

  void handle(NodeId node, const NodeOutput& out) {
    if (at_least(TraceDetail::kFiresDeliveries)) {
      for (const auto& a : out.assessments) {
        const DeliveryInfo& info = deliveries_[a.tag];
        TraceRecord r;
        r.kind = RecordKind::kAssess;
        r.node = node;
        r.sender = a.sender;
        r.counter = a.counter;
        r.msg = info.msg;
        r.verdict = a.verdict;
        r.reason = a.reason;
        r.counter_after = a.counter_after;
        r.delivered = info.deliver_real;
        record(r);
      }
    }
    if (at_least(TraceDetail::kFull)) {
      for (const auto& pr : out.prunes) {
        TraceRecord r;
        r.kind = RecordKind::kPrune;
        r.node = node;
        r.deleted = pr.deleted;
        r.retired = pr.retired;
        r.trimmed = pr.trimmed;
        r.counter_after = pr.counter_after;
        record(r);
      }
      if (out.level != level_[static_cast<std::size_t>(node)]) {
        TraceRecord r;
        r.kind = RecordKind::kThreshold;
        r.node = node;
        r.level = out.level;
        record(r);
      }
    }
    level_[static_cast<std::size_t>(node)] = out.level;

    if (out.fired) {
      ++result_.stats.correct_fires;
      last_fire_[static_cast<std::size_t>(node)] = now_;
      broadcast(*out.fired, std::nullopt, false);
    }
    auto& gen = timer_gen_[static_cast<std::size_t>(node)];
    ++gen;
    if (out.next_wakeup_local) {
      Event ev;
      ev.type = EventType::kTimer;
      ev.node = node;
      ev.gen = gen;
      ev.t = std::max(now_ + 1, clocks_[static_cast<std::size_t>(node)].local_to_real(
                                    *out.next_wakeup_local));
      push(ev);
    }
    if (out.fired) {
      for (std::size_t g = 0; g < groups_.size(); ++g) step_group(g);
    }
  }

  void broadcast(const FireMessage& msg, std::optional<Duration> forced, bool faulty) {
    const std::uint64_t id = ++next_msg_;
    TraceRecord fr;
    fr.kind = RecordKind::kFire;
    fr.node = msg.sender;
    fr.counter = msg.counter;
    fr.msg = id;
    fr.faulty = faulty;
    record(fr);

    DeliveryPlan plan = plan_broadcast(scenario_.params, scenario_.delay_model, msg, now_, correct_,
                                       delay_rng_[static_cast<std::size_t>(msg.sender)], forced);
    if (!plan_conforms(scenario_.params, plan)) {
      throw std::logic_error("delivery plan violates the network contract");
    }
    for (const auto& dlv : plan.deliveries) {
      Event ev;
      ev.type = EventType::kDelivery;
      ev.t = dlv.deliver_real;
      ev.node = dlv.recipient;
      ev.delivery = deliveries_.size();
      deliveries_.push_back({msg, id, dlv.deliver_real});
      push(ev);
    }
  }

  void step_group(std::size_t g) {
    auto& group = groups_[g];
    WorldView view;
    view.ctx = &ctx_;
    view.now = now_;
    view.clocks = &clocks_;
    view.states = &states_;
    view.faulty = &faulty_;
    view.last_fire_real = &last_fire_;
    AdversaryAction action = group.adversary->step(view, group.rng);
    for (const auto& m : action.messages) {
      ++result_.stats.faulty_messages;
      broadcast(m.message, m.forced_delay, true);
    }
    ++group.gen;
    if (action.next_wake) {
      Event ev;
      ev.type = EventType::kAdversary;
      ev.node = static_cast<NodeId>(g);
      ev.gen = group.gen;
      ev.t = std::max(now_ + 1, *action.next_wake);
      push(ev);
    }
  }

  const Scenario& scenario_;
  ProtocolContext ctx_;
  int n_;
  RealTime end_;
  RealTime now_ = 0;
  std::vector<bool> faulty_;
  std::vector<NodeId> correct_;
  std::vector<Clock> clocks_;
  std::vector<NodeState> states_;
  std::vector<std::uint64_t> timer_gen_;
  std::vector<int> level_;
  std::vector<RealTime> last_fire_;
  std::vector<Rng> delay_rng_;
  std::vector<AdversaryGroup> groups_;
  std::vector<DeliveryInfo> deliveries_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_msg_ = 0;
  RunResult result_;
};

}  // namespace

std::string_view to_string(InitialState s) {
  switch (s) {
    case InitialState::kSynchronized:
      return "synchronized";
    case InitialState::kRandomPhases:
      return "random_phases";
    case InitialState::kAdversarialPools:
      return "adversarial_pools";
  }
  return "?";
}

std::optional<InitialState> parse_initial_state(std::string_view text) {
  if (text == "synchronized") return InitialState::kSynchronized;
  if (text == "random_phases") return InitialState::kRandomPhases;
  if (text == "adversarial_pools") return InitialState::kAdversarialPools;
  return std::nullopt;
}

RealTime Scenario::end_real() const {
  return chaos_until +
         static_cast<RealTime>(std::llround(duration_cycles * static_cast<long double>(params.cycle)));
}

void check_scenario(const Scenario& s) {
  const auto& p = s.params;
  if (p.n < 4 || p.cycle <= 0 || p.d <= 0) throw ScenarioInvalid("parameters not validated");
  std::set<NodeId> ids;
  for (const auto& b : s.byzantine) {
    if (b.id < 0 || b.id >= p.n) throw ScenarioInvalid("byzantine id out of range");
    if (!ids.insert(b.id).second) throw ScenarioInvalid("byzantine id repeated");
    if (b.params.target && (*b.params.target < 0 || *b.params.target >= p.n)) {
      throw ScenarioInvalid("target out of range");
    }
  }
  if (static_cast<int>(ids.size()) > p.f) {
    throw ScenarioInvalid("more than f byzantine nodes after coherence");
  }
  if (!(s.duration_cycles >= 0) || s.duration_cycles > 1e6) {
    throw ScenarioInvalid("duration_cycles out of range");
  }
  if (s.chaos_until < 0) throw ScenarioInvalid("chaos_until must be non-negative");
  if (s.initial_elapsed) {
    if (static_cast<int>(s.initial_elapsed->size()) != p.n) {
      throw ScenarioInvalid("initial_elapsed needs one value per node");
    }
    for (Duration e : *s.initial_elapsed) {
      if (e < 0 || e > p.cycle) throw ScenarioInvalid("initial_elapsed outside [0, Cycle]");
    }
  }
  if (s.clocks.mode == ClockMode::kExplicit) {
    if (static_cast<int>(s.clocks.rate_nums.size()) != p.n) {
      throw ScenarioInvalid("clock_rates needs one value per node");
    }
    for (auto r : s.clocks.rate_nums) {
      if (r < min_rate_num(p.rho) || r > max_rate_num(p.rho)) {
        throw ScenarioInvalid("clock rate outside [1-rho, 1+rho]");
      }
    }
  }
}

std::vector<Clock> make_clocks(const Scenario& s) {
  const auto& p = s.params;
  std::vector<Clock> clocks;
  for (NodeId i = 0; i < p.n; ++i) {
    Rng rng = Rng::substream(s.seed, Channel::kClockRate, static_cast<std::uint64_t>(i));
    Clock c;
    switch (s.clocks.mode) {
      case ClockMode::kSampled:
        c = sample_clock(p.rho, rng);
        break;
      case ClockMode::kNominal:
        break;
      case ClockMode::kFastSlow:
        c.rate_num = i % 2 == 0 ? max_rate_num(p.rho) : min_rate_num(p.rho);
        break;
      case ClockMode::kExplicit:
        c.rate_num = s.clocks.rate_nums[static_cast<std::size_t>(i)];
        break;
    }
    // Local clocks start at unrelated readings.
    if (s.clocks.mode != ClockMode::kNominal) c.offset = -rng.range(0, 1'000'000'000'000);
    clocks.push_back(c);
  }
  return clocks;
}

std::vector<NodeState> inject_arbitrary_state(const Scenario& s, const ProtocolContext& ctx,
                                              const std::vector<LocalTime>& local_start) {
  const auto& p = s.params;
  const Duration decay = ctx.constants.tau_ns[static_cast<std::size_t>(p.n + 2)];
  std::vector<NodeState> states;
  for (NodeId i = 0; i < p.n; ++i) {
    Rng rng = Rng::substream(s.seed, Channel::kInitialState, static_cast<std::uint64_t>(i));
    const LocalTime now = local_start[static_cast<std::size_t>(i)];
    NodeState st;
    st.id = i;
    Duration elapsed = 0;
    if (s.initial_state != InitialState::kSynchronized) elapsed = rng.range(0, p.cycle);
    if (s.initial_elapsed) elapsed = (*s.initial_elapsed)[static_cast<std::size_t>(i)];
    st.pulse_local = now - elapsed;
    st.last_seen = now;

    if (s.initial_state == InitialState::kAdversarialPools) {
      for (NodeId sender = 0; sender < p.n; ++sender) {
        const auto where = rng.below(4);
        if (where == 1 || where == 2) {
          StoredMessage m{sender, now - rng.range(0, decay), st.next_entry_id++};
          (where == 1 ? st.pool.cs : st.pool.ucs).push_back(m);
        }
        if (rng.below(3) == 0) {
          st.pool.rucs.push_back(StoredMessage{sender, now - rng.range(0, decay), st.next_entry_id++});
        }
      }
      st.counter = static_cast<int>(st.pool.cs.size());
    }
    st.last_threshold = ctx.ref.threshold_at(st.elapsed(now));
    states.push_back(std::move(st));
  }
  return states;
}

RunResult run(const Scenario& scenario) {
  check_scenario(scenario);
  Simulation sim(scenario);
  return sim.run();
}

}  // namespace pulsesync
