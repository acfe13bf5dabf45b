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

// pulsesync: check-params | simulate | sweep | analyze
//
// Exit codes: 0 ok, 2 invalid input, 3 assertion/closure failure, 4 I/O.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pulsesync/analysis.hpp"
#include "pulsesync/engine.hpp"
#include "pulsesync/scenario_io.hpp"
#include "pulsesync/trace.hpp"

namespace fs = std::filesystem;
using namespace pulsesync;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kAssertion = 3;
constexpr int kIo = 4;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_dir() {
  const char* env = std::getenv("PULSESYNC_OUT_DIR");
  return env && *env ? fs::path(env) : fs::current_path();
}

fs::path resolve_out(const std::string& given, const fs::path& fallback_name) {
  if (!given.empty()) return given;
  return default_dir() / fallback_name;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

Duration duration_arg(const std::string& text, const char* flag) {
  auto d = parse_duration(text);
  if (!d) throw CLI::ValidationError(flag, "expected a duration such as 100s, 5ms or 1000ns");
  return *d;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---- check-params --------------------------------------------------------

struct CheckParamsArgs {
  int n = 0;
  int f = 0;
  std::string cycle;
  std::string d;
  double rho = 0;
  std::string mode = "strong-broadcast";
};

int cmd_check_params(const CheckParamsArgs& a) {
  auto mode = parse_network_mode(a.mode);
  if (!mode) {
    std::cerr << "error: unknown mode " << a.mode << '\n';
    return kInvalid;
  }
  ProtocolParams p;
  try {
    p = validate_params(a.n, a.f, duration_arg(a.cycle, "--cycle"), duration_arg(a.d, "--d"),
                        a.rho, *mode);
  } catch (const ParamsError& e) {
    std::cout << "invalid: " << e.what() << '\n';
    if (e.kind() == ParamsErrorKind::kCycleTooShort && !e.minimum_cycle()) {
      std::cout << "no Cycle satisfies the restriction for this rho\n";
    }
    return kInvalid;
  }
  const RefractoryFunction ref = build_ref(p);
  const DerivedConstants c = derive_constants(p);
  const auto exact = exact_ref_steps(p);

  std::cout << "n=" << p.n << " f=" << p.f << " Cycle=" << format_duration(p.cycle)
            << " d=" << format_duration(p.d) << " rho=" << p.rho << " mode=" << to_string(p.mode)
            << " sigma=" << format_duration(p.sigma()) << '\n';
  if (auto m = minimum_cycle(p.n, p.f, p.effective_d(), p.rho)) {
    std::cout << "minimum Cycle > " << format_duration(*m) << '\n';
  }
  std::cout << "\nREF\n";
  for (int i = 1; i <= p.n + 1; ++i) {
    std::printf("  R_%-3d %22s  (exact %s)\n", i, format_duration(ref.step(i)).c_str(),
                format_duration(exact[static_cast<std::size_t>(i - 1)]).c_str());
  }
  std::cout << "\ntau\n";
  for (std::size_t k = 0; k < c.tau_table.size(); ++k) {
    std::printf("  tau(%zu) %s\n", k, format_duration(c.tau_table[k]).c_str());
  }
  std::cout << "\nabsorbance distance ad(C) by cluster size\n";
  for (int size = 1; size <= p.n - p.f; ++size) {
    std::printf("  |C|=%-3d %s\n", size,
                format_duration(absorbance_distance(ref, p.f, size)).c_str());
  }
  std::cout << "\ncycle_min " << format_duration(c.cycle_min) << "\ncycle_max "
            << format_duration(c.cycle_max) << "\nmessage decay "
            << format_duration(c.message_decay) << "\ncorrectness warmup "
            << format_duration(c.correctness_warmup) << '\n';
  const PropertyReport props = check_ref_properties(ref, p);
  std::cout << "\nproperties\n";
  for (const auto& chk : props.checks) {
    std::cout << "  P" << chk.property << ' ' << (chk.passed ? "pass" : "FAIL");
    if (!chk.detail.empty()) std::cout << "  " << chk.detail;
    std::cout << '\n';
  }
  return props.all_passed() ? kOk : kInvalid;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string report;
  std::string csv;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<double> assert_within;
  bool quiet = false;
  bool exact_bounds = false;
};

AnalysisReport analyze_with(const Trace& trace, bool exact_bounds) {
  return exact_bounds ? analyze(trace, exact_sync_bounds(trace.header.params)) : analyze(trace);
}

int cmd_simulate(const SimulateArgs& a) {
  Scenario s;
  try {
    s = parse_scenario(read_file(a.scenario));
    if (a.seed) s.seed = *a.seed;
    if (!a.mode.empty()) {
      auto mode = parse_network_mode(a.mode);
      if (!mode) throw ScenarioFileError("unknown mode " + a.mode);
      const auto& p = s.params;
      s.params = validate_params(p.n, p.f, p.cycle, p.d, p.rho, *mode);
    }
    check_scenario(s);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kInvalid;
  }

  RunResult res;
  try {
    res = run(s);
  } catch (const EventOverflow& e) {
    std::cerr << "simulation aborted: " << e.what() << '\n';
    return kInvalid;
  }
  const std::string stem = stem_of(a.scenario);
  const std::string text = trace_to_string(res.trace);
  write_file(resolve_out(a.out, stem + ".trace.jsonl"), text);

  const AnalysisReport rep = analyze_with(res.trace, a.exact_bounds);
  write_file(resolve_out(a.report, stem + ".report.json"),
             report_to_json(rep, res.trace.header, &s) + "\n");
  if (!a.csv.empty()) write_file(a.csv, rounds_csv(rep));

  std::cout << "trace checksum fnv1a64 " << hex64(fnv1a(text)) << '\n';
  if (!a.quiet) {
    std::cout << "events " << res.stats.events << ", correct fires " << res.stats.correct_fires
              << ", faulty messages " << res.stats.faulty_messages << '\n';
    if (rep.converged_at) {
      std::printf("converged %.3f cycles after measurement start\n", *rep.convergence_cycles);
      std::cout << "tightness max spread " << format_duration(rep.tightness->max_spread)
                << " (sigma " << format_duration(s.params.sigma()) << ")\n";
      std::cout << "cycle-bound violations " << rep.cycle_bounds->violations.size() << '\n';
    } else {
      std::cout << "not converged\n";
    }
    if (rep.summation) {
      std::cout << "summation violations " << rep.summation->violations.size() << '\n';
    }
  }
  if (a.assert_within) {
    if (!rep.convergence_cycles || *rep.convergence_cycles > *a.assert_within) {
      std::cerr << "assertion failed: convergence not within " << *a.assert_within
                << " cycles\n";
      return kAssertion;
    }
  }
  return rep.converged_at && rep.closure_ok ? kOk : kAssertion;
}

// ---- sweep ---------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::string out_dir;
  unsigned jobs = 0;
  bool strict = false;
  bool exact_bounds = false;
};

struct SweepRow {
  const Scenario* scenario = nullptr;
  std::string error;
  std::optional<AnalysisReport> report;
  std::string checksum;
};

nlohmann::json row_json(std::size_t index, const SweepRow& r) {
  const Scenario& s = *r.scenario;
  nlohmann::json j;
  j["index"] = index;
  j["seed"] = s.seed;
  j["strategy"] = s.byzantine.empty() ? "none" : std::string(to_string(s.byzantine[0].strategy));
  j["rho"] = s.params.rho;
  j["mode"] = std::string(to_string(s.params.mode));
  j["initial_state"] = std::string(to_string(s.initial_state));
  j["error"] = r.error;
  if (r.report) {
    const auto& rep = *r.report;
    j["checksum"] = r.checksum;
    j["converged"] = rep.converged_at.has_value();
    j["convergence_cycles"] =
        rep.convergence_cycles ? nlohmann::json(*rep.convergence_cycles) : nlohmann::json(nullptr);
    j["max_spread_ns"] = rep.tightness ? nlohmann::json(rep.tightness->max_spread) : nullptr;
    j["cycle_violations"] = rep.cycle_bounds ? rep.cycle_bounds->violations.size() : 0;
    j["summation_violations"] = rep.summation ? rep.summation->violations.size() : 0;
    j["bad_rounds"] = rep.complexity ? rep.complexity->bad_rounds : 0;
    j["closure_ok"] = rep.closure_ok;
  }
  return j;
}

int cmd_sweep(const SweepArgs& a) {
  SweepSpec spec;
  std::vector<Scenario> scenarios;
  try {
    spec = parse_sweep(read_file(a.spec));
    scenarios = expand_sweep(spec);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "invalid sweep: " << e.what() << '\n';
    return kInvalid;
  }

  std::vector<SweepRow> rows(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      SweepRow& row = rows[i];
      row.scenario = &scenarios[i];
      try {
        RunResult res = run(scenarios[i]);
        row.checksum = hex64(fnv1a(trace_to_string(res.trace)));
        row.report = analyze_with(res.trace, a.exact_bounds);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  unsigned jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::json out;
  out["format"] = "pulsesync-sweep";
  out["version"] = 1;
  out["base"] = nlohmann::json::parse(scenario_to_json(spec.base));
  out["rows"] = nlohmann::json::array();
  std::ostringstream csv;
  csv << "index,seed,strategy,rho,mode,initial_state,converged,convergence_cycles,max_spread_ns,"
         "cycle_violations,summation_violations,bad_rounds,closure_ok,error\n";
  std::size_t failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    nlohmann::json j = row_json(i, r);
    bool ok = r.error.empty() && r.report && r.report->converged_at && r.report->closure_ok;
    if (ok && spec.assert_convergence_within) {
      ok = *r.report->convergence_cycles <= *spec.assert_convergence_within;
    }
    j["ok"] = ok;
    failures += ok ? 0 : 1;
    auto field = [&](const char* k) {
      const auto& v = j[k];
      if (v.is_null()) return std::string();
      if (v.is_string()) return v.get<std::string>();
      return v.dump();
    };
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    csv << i << ',' << field("seed") << ',' << field("strategy") << ',' << field("rho") << ','
        << field("mode") << ',' << field("initial_state") << ',' << field("converged") << ','
        << field("convergence_cycles") << ',' << field("max_spread_ns") << ','
        << field("cycle_violations") << ',' << field("summation_violations") << ','
        << field("bad_rounds") << ',' << field("closure_ok") << ',' << err << '\n';
    out["rows"].push_back(std::move(j));
  }
  out["summary"] = {{"rows", rows.size()}, {"failures", failures}};

  const fs::path dir = a.out_dir.empty() ? default_dir() : fs::path(a.out_dir);
  const std::string stem = stem_of(a.spec);
  write_file(dir / (stem + ".sweep.json"), out.dump(2) + "\n");
  write_file(dir / (stem + ".sweep.csv"), csv.str());
  std::cout << rows.size() << " runs, " << failures << " failing\n";
  return a.strict && failures > 0 ? kAssertion : kOk;
}

// ---- analyze -------------------------------------------------------------

struct AnalyzeArgs {
  std::string trace;
  std::string report;
  std::string csv;
  bool exact_bounds = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  std::ifstream in(a.trace, std::ios::binary);
  if (!in) throw IoError("cannot read " + a.trace);
  Trace trace;
  try {
    trace = read_trace(in);
  } catch (const TraceFormatError& e) {
    std::cerr << "invalid trace: " << e.what() << '\n';
    return kInvalid;
  }
  const AnalysisReport rep = analyze_with(trace, a.exact_bounds);
  const std::string doc = report_to_json(rep, trace.header, nullptr) + "\n";
  if (a.report.empty()) {
    std::cout << doc;
  } else {
    write_file(a.report, doc);
  }
  if (!a.csv.empty()) write_file(a.csv, rounds_csv(rep));
  return rep.converged_at && rep.closure_ok ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-stabilizing Byzantine pulse synchronization simulator"};
  app.require_subcommand(1);

  CheckParamsArgs cp;
  auto* check = app.add_subcommand("check-params", "validate parameters and print REF, tau, ad");
  check->add_option("--n", cp.n, "number of nodes")->required();
  check->add_option("--f", cp.f, "fault bound")->required();
  check->add_option("--cycle", cp.cycle, "Cycle, e.g. 100s")->required();
  check->add_option("--d", cp.d, "network delay bound, e.g. 1s")->required();
  check->add_option("--rho", cp.rho, "clock drift bound")->default_val(0.0);
  check->add_option("--mode", cp.mode, "strong-broadcast | relay")->default_val("strong-broadcast");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a scenario file");
  simulate->add_option("scenario", sim.scenario, "scenario JSON")->required();
  simulate->add_option("--out", sim.out, "trace output (JSONL)");
  simulate->add_option("--report", sim.report, "report output (JSON)");
  simulate->add_option("--csv", sim.csv, "per-round CSV output");
  simulate->add_option("--seed", sim.seed, "override the scenario seed");
  simulate->add_option("--mode", sim.mode, "override the network mode");
  simulate->add_option("--assert-convergence-within", sim.assert_within,
                       "fail with exit 3 unless converged within K cycles");
  simulate->add_flag("--quiet", sim.quiet, "only print the checksum");
  simulate->add_flag("--exact-bounds", sim.exact_bounds, "use the exact drift bounds instead of the closed-form cycle_min/cycle_max");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "run a grid of scenarios");
  sweep->add_option("spec", sw.spec, "sweep spec JSON")->required();
  sweep->add_option("--out-dir", sw.out_dir, "directory for the JSON and CSV reports");
  sweep->add_option("--jobs", sw.jobs, "worker threads (default: hardware concurrency)");
  sweep->add_flag("--strict", sw.strict, "exit 3 if any run fails");
  sweep->add_flag("--exact-bounds", sw.exact_bounds, "use the exact drift bounds instead of the closed-form cycle_min/cycle_max");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "analyze a recorded trace");
  analyze_cmd->add_option("trace", an.trace, "trace JSONL")->required();
  analyze_cmd->add_option("--report", an.report, "write the report here instead of stdout");
  analyze_cmd->add_option("--csv", an.csv, "per-round CSV output");
  analyze_cmd->add_flag("--exact-bounds", an.exact_bounds, "use the exact drift bounds instead of the closed-form cycle_min/cycle_max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*check) return cmd_check_params(cp);
    if (*simulate) return cmd_simulate(sim);
    if (*sweep) return cmd_sweep(sw);
    if (*analyze_cmd) return cmd_analyze(an);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
