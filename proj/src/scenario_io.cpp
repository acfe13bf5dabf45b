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

#include "pulsesync/scenario_io.hpp"

#include <set>
#include <sstream>

#include "json.hpp"

namespace pulsesync {
namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxListedViolations = 100;

[[noreturn]] void fail(const std::string& what) { throw ScenarioFileError(what); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* where) {
  if (!obj.is_object()) fail(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail("unknown key \"" + key + "\" in " + where);
  }
}

Duration duration_of(const json& v, const char* key) {
  if (v.is_number_integer()) return v.get<Duration>();
  if (v.is_string()) {
    if (auto d = parse_duration(v.get<std::string>())) return *d;
  }
  fail(std::string(key) + ": expected integer ns or a duration string like \"100s\"");
}

template <typename T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(std::string(key) + ": wrong type");
  }
}

std::string string_of(const json& v, const char* key) { return get_as<std::string>(v, key); }

template <typename Enum, typename Parser>
Enum enum_of(const json& v, const char* key, Parser parse) {
  auto e = parse(string_of(v, key));
  if (!e) fail(std::string(key) + ": unknown value \"" + v.get<std::string>() + "\"");
  return *e;
}

ProtocolParams params_from(const json& p) {
  reject_unknown(p, {"n", "f", "cycle_ns", "d_ns", "rho", "mode"}, "params");
  for (const char* k : {"n", "f", "cycle_ns", "d_ns"}) {
    if (!p.contains(k)) fail(std::string("params.") + k + " is required");
  }
  NetworkMode mode = NetworkMode::kStrongBroadcast;
  if (p.contains("mode")) mode = enum_of<NetworkMode>(p["mode"], "params.mode", parse_network_mode);
  return validate_params(get_as<int>(p["n"], "params.n"), get_as<int>(p["f"], "params.f"),
                         duration_of(p["cycle_ns"], "params.cycle_ns"),
                         duration_of(p["d_ns"], "params.d_ns"),
                         p.contains("rho") ? get_as<double>(p["rho"], "params.rho") : 0.0, mode);
}

StrategyParams strategy_params_from(const json& j) {
  reject_unknown(j, {"period_ns", "burst", "burst_gap_ns", "target", "lag_ns"},
                 "byzantine[].params");
  StrategyParams sp;
  if (j.contains("period_ns")) sp.period = duration_of(j["period_ns"], "period_ns");
  if (j.contains("burst")) sp.burst = get_as<int>(j["burst"], "burst");
  if (j.contains("burst_gap_ns")) sp.burst_gap = duration_of(j["burst_gap_ns"], "burst_gap_ns");
  if (j.contains("target")) sp.target = get_as<NodeId>(j["target"], "target");
  if (j.contains("lag_ns")) sp.lag = duration_of(j["lag_ns"], "lag_ns");
  if (sp.period && *sp.period <= 0) fail("period_ns must be positive");
  if (sp.burst < 1) fail("burst must be at least 1");
  if (sp.burst_gap && *sp.burst_gap <= 0) fail("burst_gap_ns must be positive");
  if (sp.lag < 0) fail("lag_ns must be non-negative");
  return sp;
}

Scenario scenario_from(const json& j) {
  reject_unknown(j,
                 {"params", "seed", "duration_cycles", "byzantine", "initial_state",
                  "chaos_until_ns", "clock_rates", "trace_detail", "delay_model",
                  "initial_elapsed_ns", "max_queue", "max_events"},
                 "scenario");
  if (!j.contains("params")) fail("params is required");
  Scenario s;
  s.params = params_from(j["params"]);
  if (j.contains("seed")) s.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("duration_cycles")) {
    s.duration_cycles = get_as<double>(j["duration_cycles"], "duration_cycles");
  }
  if (j.contains("byzantine")) {
    if (!j["byzantine"].is_array()) fail("byzantine must be an array");
    for (const auto& b : j["byzantine"]) {
      reject_unknown(b, {"id", "strategy", "params"}, "byzantine[]");
      if (!b.contains("id")) fail("byzantine[].id is required");
      ByzantineSpec spec;
      spec.id = get_as<NodeId>(b["id"], "byzantine[].id");
      if (b.contains("strategy")) {
        spec.strategy = enum_of<StrategyKind>(b["strategy"], "byzantine[].strategy", parse_strategy);
      }
      if (b.contains("params")) spec.params = strategy_params_from(b["params"]);
      s.byzantine.push_back(spec);
    }
  }
  if (j.contains("initial_state")) {
    s.initial_state =
        enum_of<InitialState>(j["initial_state"], "initial_state", parse_initial_state);
  }
  if (j.contains("chaos_until_ns")) s.chaos_until = duration_of(j["chaos_until_ns"], "chaos_until_ns");
  if (j.contains("clock_rates")) {
    const json& c = j["clock_rates"];
    if (c.is_array()) {
      s.clocks.mode = ClockMode::kExplicit;
      for (const auto& r : c) s.clocks.rate_nums.push_back(get_as<std::int64_t>(r, "clock_rates[]"));
    } else {
      const std::string mode = string_of(c, "clock_rates");
      if (mode == "sampled") {
        s.clocks.mode = ClockMode::kSampled;
      } else if (mode == "nominal") {
        s.clocks.mode = ClockMode::kNominal;
      } else if (mode == "fast_slow") {
        s.clocks.mode = ClockMode::kFastSlow;
      } else {
        fail("clock_rates: expected \"sampled\", \"nominal\", \"fast_slow\" or an array");
      }
    }
  }
  if (j.contains("trace_detail")) {
    s.detail = enum_of<TraceDetail>(j["trace_detail"], "trace_detail", parse_trace_detail);
  }
  if (j.contains("delay_model")) {
    s.delay_model = enum_of<DelayModel>(j["delay_model"], "delay_model", parse_delay_model);
  }
  if (j.contains("initial_elapsed_ns")) {
    if (!j["initial_elapsed_ns"].is_array()) fail("initial_elapsed_ns must be an array");
    std::vector<Duration> e;
    for (const auto& v : j["initial_elapsed_ns"]) e.push_back(duration_of(v, "initial_elapsed_ns[]"));
    s.initial_elapsed = std::move(e);
  }
  if (j.contains("max_queue")) s.max_queue = get_as<std::size_t>(j["max_queue"], "max_queue");
  if (j.contains("max_events")) s.max_events = get_as<std::uint64_t>(j["max_events"], "max_events");
  check_scenario(s);
  return s;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
}

std::string clock_mode_name(ClockMode m) {
  switch (m) {
    case ClockMode::kSampled:
      return "sampled";
    case ClockMode::kNominal:
      return "nominal";
    case ClockMode::kFastSlow:
      return "fast_slow";
    case ClockMode::kExplicit:
      return "explicit";
  }
  return "?";
}

json params_json(const ProtocolParams& p) {
  return {{"n", p.n},         {"f", p.f},     {"cycle_ns", p.cycle},
          {"d_ns", p.d},      {"rho", p.rho}, {"mode", std::string(to_string(p.mode))}};
}

json scenario_json(const Scenario& s) {
  json j;
  j["params"] = params_json(s.params);
  j["seed"] = s.seed;
  j["duration_cycles"] = s.duration_cycles;
  j["byzantine"] = json::array();
  for (const auto& b : s.byzantine) {
    json p = json::object();
    if (b.params.period) p["period_ns"] = *b.params.period;
    p["burst"] = b.params.burst;
    if (b.params.burst_gap) p["burst_gap_ns"] = *b.params.burst_gap;
    if (b.params.target) p["target"] = *b.params.target;
    p["lag_ns"] = b.params.lag;
    j["byzantine"].push_back(
        {{"id", b.id}, {"strategy", std::string(to_string(b.strategy))}, {"params", p}});
  }
  j["initial_state"] = std::string(to_string(s.initial_state));
  j["chaos_until_ns"] = s.chaos_until;
  if (s.clocks.mode == ClockMode::kExplicit) {
    j["clock_rates"] = s.clocks.rate_nums;
  } else {
    j["clock_rates"] = clock_mode_name(s.clocks.mode);
  }
  j["trace_detail"] = std::string(to_string(s.detail));
  j["delay_model"] = std::string(to_string(s.delay_model));
  if (s.initial_elapsed) j["initial_elapsed_ns"] = *s.initial_elapsed;
  j["max_queue"] = s.max_queue;
  j["max_events"] = s.max_events;
  return j;
}

json optional_time(const std::optional<RealTime>& t) { return t ? json(*t) : json(nullptr); }

}  // namespace

Scenario parse_scenario(std::string_view text) { return scenario_from(parse_json(text)); }

std::string scenario_to_json(const Scenario& scenario, int indent) {
  return scenario_json(scenario).dump(indent);
}

SweepSpec parse_sweep(std::string_view text) {
  const json j = parse_json(text);
  reject_unknown(j,
                 {"base", "seeds", "strategies", "rho", "modes", "initial_states",
                  "assert_convergence_within"},
                 "sweep");
  if (!j.contains("base")) fail("sweep.base is required");
  SweepSpec spec;
  spec.base = scenario_from(j["base"]);
  auto list = [&](const char* key) -> const json* {
    if (!j.contains(key)) return nullptr;
    if (!j[key].is_array()) fail(std::string("sweep.") + key + " must be an array");
    return &j[key];
  };
  if (j.contains("seeds") && j["seeds"].is_object()) {
    const json& r = j["seeds"];
    reject_unknown(r, {"from", "count"}, "sweep.seeds");
    const auto from = r.contains("from") ? get_as<std::uint64_t>(r["from"], "seeds.from") : 0;
    const auto count = get_as<std::uint64_t>(r.at("count"), "seeds.count");
    for (std::uint64_t i = 0; i < count; ++i) spec.seeds.push_back(from + i);
  } else if (const json* s = list("seeds")) {
    for (const auto& v : *s) spec.seeds.push_back(get_as<std::uint64_t>(v, "seeds[]"));
  } else {
    spec.seeds = {spec.base.seed};
  }
  if (const json* s = list("strategies")) {
    for (const auto& v : *s) {
      spec.strategies.push_back(enum_of<StrategyKind>(v, "strategies[]", parse_strategy));
    }
  } else {
    spec.strategies = {spec.base.byzantine.empty() ? StrategyKind::kSilent
                                                   : spec.base.byzantine.front().strategy};
  }
  if (const json* s = list("rho")) {
    for (const auto& v : *s) spec.rhos.push_back(get_as<double>(v, "rho[]"));
  } else {
    spec.rhos = {spec.base.params.rho};
  }
  if (const json* s = list("modes")) {
    for (const auto& v : *s) spec.modes.push_back(enum_of<NetworkMode>(v, "modes[]", parse_network_mode));
  } else {
    spec.modes = {spec.base.params.mode};
  }
  if (const json* s = list("initial_states")) {
    for (const auto& v : *s) {
      spec.initial_states.push_back(
          enum_of<InitialState>(v, "initial_states[]", parse_initial_state));
    }
  } else {
    spec.initial_states = {spec.base.initial_state};
  }
  if (j.contains("assert_convergence_within")) {
    spec.assert_convergence_within =
        get_as<double>(j["assert_convergence_within"], "assert_convergence_within");
  }
  return spec;
}

std::vector<Scenario> expand_sweep(const SweepSpec& spec) {
  std::vector<Scenario> out;
  const ProtocolParams& bp = spec.base.params;
  for (double rho : spec.rhos) {
    for (NetworkMode mode : spec.modes) {
      const ProtocolParams p = validate_params(bp.n, bp.f, bp.cycle, bp.d, rho, mode);
      for (StrategyKind kind : spec.strategies) {
        for (InitialState init : spec.initial_states) {
          for (std::uint64_t seed : spec.seeds) {
            Scenario s = spec.base;
            s.params = p;
            s.seed = seed;
            s.initial_state = init;
            if (s.byzantine.empty()) {
              for (int i = 0; i < p.f; ++i) s.byzantine.push_back({p.n - 1 - i, kind, {}});
            }
            for (auto& b : s.byzantine) b.strategy = kind;
            check_scenario(s);
            out.push_back(std::move(s));
          }
        }
      }
    }
  }
  return out;
}

std::string report_to_json(const AnalysisReport& r, const TraceHeader& header,
                           const Scenario* resolved, int indent) {
  const DerivedConstants c = derive_constants(header.params);
  json j;
  j["format"] = "pulsesync-report";
  j["version"] = 1;
  if (resolved) j["scenario"] = scenario_json(*resolved);
  j["params"] = params_json(header.params);
  j["seed"] = header.seed;
  j["byzantine"] = header.byzantine;
  j["detail"] = std::string(to_string(header.detail));
  j["constants"] = {{"sigma_ns", header.params.sigma()},
                    {"cycle_min_ns", static_cast<double>(c.cycle_min)},
                    {"cycle_max_ns", static_cast<double>(c.cycle_max)},
                    {"correctness_warmup_ns", static_cast<double>(c.correctness_warmup)}};
  j["bounds"] = {{"sigma_ns", static_cast<double>(r.bounds.sigma)},
                 {"cycle_min_ns", static_cast<double>(r.bounds.cycle_min)},
                 {"cycle_max_ns", static_cast<double>(r.bounds.cycle_max)},
                 {"gap_allowance_ns", static_cast<double>(r.bounds.gap_allowance)}};
  j["measurement_start_ns"] = r.measurement_start;
  j["end_ns"] = header.end;
  j["correct_fires"] = r.correct_fires;
  j["converged"] = r.converged_at.has_value();
  j["converged_at_ns"] = optional_time(r.converged_at);
  j["convergence_cycles"] = r.convergence_cycles ? json(*r.convergence_cycles) : json(nullptr);
  if (r.tightness) {
    j["tightness"] = {{"rounds", r.tightness->rounds.size()},
                      {"max_spread_ns", r.tightness->max_spread},
                      {"within_sigma", r.tightness->max_spread <= header.params.sigma()}};
  }
  if (r.cycle_bounds) {
    json v = json::array();
    for (const auto& g : r.cycle_bounds->violations) {
      if (v.size() == kMaxListedViolations) break;
      v.push_back({{"node", g.node}, {"from_ns", g.from}, {"to_ns", g.to}, {"gap_ns", g.gap}});
    }
    j["cycle_bounds"] = {{"gaps", r.cycle_bounds->gaps},
                         {"min_gap_ns", r.cycle_bounds->min_gap},
                         {"max_gap_ns", r.cycle_bounds->max_gap},
                         {"violation_count", r.cycle_bounds->violations.size()},
                         {"violations", v}};
  }
  if (r.summation) {
    json v = json::array();
    for (const auto& s : r.summation->violations) {
      if (v.size() == kMaxListedViolations) break;
      v.push_back({{"property", s.property},
                   {"msg", s.msg},
                   {"node", s.node},
                   {"t_ns", s.t},
                   {"detail", s.detail}});
    }
    j["summation"] = {{"window_start_ns", r.summation->window_start},
                      {"messages_checked", r.summation->messages_checked},
                      {"assessments_checked", r.summation->assessments_checked},
                      {"pre_window_misses", r.summation->pre_window_misses},
                      {"violation_count", r.summation->violations.size()},
                      {"violations", v}};
  }
  if (r.complexity) {
    j["message_complexity"] = {{"rounds", r.complexity->rounds},
                               {"bad_rounds", r.complexity->bad_rounds}};
  }
  j["closure_ok"] = r.closure_ok;
  return j.dump(indent);
}

std::string rounds_csv(const AnalysisReport& report) {
  std::ostringstream out;
  out << "round,first_ns,last_ns,spread_ns,fires\n";
  if (!report.tightness) return out.str();
  std::size_t i = 0;
  for (const auto& r : report.tightness->rounds) {
    int fires = 0;
    for (int c : r.fires_per_node) fires += c;
    out << i++ << ',' << r.first << ',' << r.last << ',' << r.spread << ',' << fires << '\n';
  }
  return out.str();
}

}  // namespace pulsesync
