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

#include "pulsesync/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pulsesync {
namespace {

std::string describe(long double ns) { return format_duration(ns); }

// Cycle/(1−ρ); shared by REF construction and the Property 7 checks so both
// sides of the comparison see the same rounding.
long double stretched_cycle(const ProtocolParams& p) {
  return static_cast<long double>(p.cycle) / (1.0L - static_cast<long double>(p.rho));
}

// Smallest integer R with (n−f)·R ≥ Cycle/(1−ρ).
Duration first_branch_step(const ProtocolParams& p) {
  const long double target = stretched_cycle(p);
  const Duration m = p.n - p.f;
  auto step = static_cast<Duration>(std::ceil(target / static_cast<long double>(m)));
  while (static_cast<long double>(m * (step - 1)) >= target) --step;
  while (static_cast<long double>(m * step) < target) ++step;
  return step;
}

void enumerate_partitions(int remaining, int max_part, std::vector<int>& current,
                          std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(current);
    return;
  }
  for (int part = std::min(remaining, max_part); part >= 1; --part) {
    current.push_back(part);
    enumerate_partitions(remaining - part, part, current, out);
    current.pop_back();
  }
}

}  // namespace

std::string_view to_string(NetworkMode mode) {
  return mode == NetworkMode::kRelay ? "relay" : "strong-broadcast";
}

std::optional<NetworkMode> parse_network_mode(std::string_view text) {
  if (text == "strong-broadcast" || text == "strong" || text == "broadcast") {
    return NetworkMode::kStrongBroadcast;
  }
  if (text == "relay") return NetworkMode::kRelay;
  return std::nullopt;
}

long double geometric_sum(long double rho, int terms) {
  if (rho == 0.0L) return static_cast<long double>(terms);
  const long double r = (1.0L + rho) / (1.0L - rho);
  long double sum = 0.0L;
  long double power = 1.0L;
  for (int i = 0; i < terms; ++i) {
    sum += power;
    power *= r;
  }
  return sum;
}

std::optional<long double> minimum_cycle(int n, int f, long double d, long double rho) {
  const long double s = geometric_sum(rho, n + 3);
  const long double denom = (1.0L - rho) / static_cast<long double>(n - f) - 3.0L * rho + rho * rho;
  if (!(denom > 0.0L)) return std::nullopt;
  const long double numer =
      d * (1.0L - rho * rho) *
      ((1.0L - rho) * static_cast<long double>(f + 1) + 2.0L * (1.0L + rho) * s);
  return numer / denom;
}

ProtocolParams validate_params(int n, int f, Duration cycle, Duration d, double rho,
                               NetworkMode mode) {
  if (!std::isfinite(rho) || rho < 0.0 || rho >= 1.0) {
    throw ParamsError(ParamsErrorKind::kRange, "rho must lie in [0, 1)");
  }
  if (d <= 0 || cycle <= 0) {
    throw ParamsError(ParamsErrorKind::kRange, "cycle and d must be positive");
  }
  if (f < 0) throw ParamsError(ParamsErrorKind::kRange, "f must be non-negative");
  if (n < 3 * f + 1) {
    std::ostringstream msg;
    msg << "n=" << n << " tolerates fewer than f=" << f << " faults (need n >= 3f+1)";
    throw ParamsError(ParamsErrorKind::kFaultRatio, msg.str());
  }
  if (n < 4) throw ParamsError(ParamsErrorKind::kRange, "n must be at least 4");
  if (d > std::numeric_limits<Duration>::max() / 8) {
    throw ParamsError(ParamsErrorKind::kRange, "d out of range");
  }

  ProtocolParams p;
  p.n = n;
  p.f = f;
  p.cycle = cycle;
  p.d = d;
  p.rho = rho;
  p.mode = mode;

  auto minimum = minimum_cycle(n, f, static_cast<long double>(p.effective_d()), rho);
  if (!minimum) {
    throw ParamsError(ParamsErrorKind::kCycleTooShort,
                      "no Cycle satisfies the restriction at this rho", std::nullopt);
  }
  if (!(static_cast<long double>(cycle) > *minimum)) {
    std::ostringstream msg;
    msg << "Cycle " << describe(cycle) << " too short; minimum Cycle > " << describe(*minimum);
    throw ParamsError(ParamsErrorKind::kCycleTooShort, msg.str(), *minimum);
  }
  return p;
}

long double tau(const ProtocolParams& params, int k) {
  if (k < 0 || k > params.n + 3) {
    throw ParamsError(ParamsErrorKind::kRange, "tau index out of range");
  }
  const long double rho = params.rho;
  return 2.0L * static_cast<long double>(params.effective_d()) * (1.0L + rho) *
         geometric_sum(rho, k + 1);
}

DerivedConstants derive_constants(const ProtocolParams& params) {
  DerivedConstants c;
  for (int k = 0; k <= params.n + 3; ++k) {
    const long double t = tau(params, k);
    c.tau_table.push_back(t);
    c.tau_ns.push_back(static_cast<Duration>(std::floor(t)));
  }
  const long double rho = params.rho;
  const long double cycle = static_cast<long double>(params.cycle);
  c.cycle_min = static_cast<long double>(params.n - 2 * params.f) /
                static_cast<long double>(params.n - params.f) * cycle * (1.0L - rho);
  c.cycle_max = cycle * (1.0L + rho);
  c.message_decay = c.tau_table[static_cast<std::size_t>(params.n + 2)];
  c.correctness_warmup =
      c.cycle_max + static_cast<long double>(params.sigma()) + c.message_decay;
  c.assessment_window = static_cast<Duration>(
      std::floor(static_cast<long double>(params.effective_d()) * (1.0L + rho)));
  return c;
}

RefractoryFunction::RefractoryFunction(std::vector<Duration> steps) : steps_(std::move(steps)) {
  level_start_.assign(steps_.size() + 1, 0);
  // level_start_[j] = Σ_{i=j+1}^{n+1} R_i
  for (int j = static_cast<int>(steps_.size()) - 1; j >= 0; --j) {
    level_start_[static_cast<std::size_t>(j)] =
        level_start_[static_cast<std::size_t>(j) + 1] + steps_[static_cast<std::size_t>(j)];
  }
}

int RefractoryFunction::threshold_at(Duration elapsed_local) const {
  const int top = static_cast<int>(steps_.size());
  for (int level = 0; level < top; ++level) {
    if (elapsed_local >= level_start_[static_cast<std::size_t>(level)]) return level;
  }
  return top;
}

std::vector<long double> exact_ref_steps(const ProtocolParams& params) {
  const int n = params.n;
  const int f = params.f;
  const long double rho = params.rho;
  const long double cycle = params.cycle;
  const long double r1 = cycle / ((1.0L - rho) * static_cast<long double>(n - f));
  const long double last = tau(params, n + 2);
  const long double tail = (r1 - last - rho / (1.0L - rho) * cycle) / static_cast<long double>(f + 1);
  std::vector<long double> steps;
  for (int i = 1; i <= n - f - 1; ++i) steps.push_back(r1);
  for (int i = n - f; i <= n; ++i) steps.push_back(tail);
  steps.push_back(last);
  return steps;
}

RefractoryFunction build_ref(const ProtocolParams& params) {
  const int n = params.n;
  const int f = params.f;
  const Duration head = first_branch_step(params);
  const auto last = static_cast<Duration>(std::ceil(tau(params, n + 2)));
  const Duration rest = params.cycle - static_cast<Duration>(n - f - 1) * head - last;
  const Duration share = rest / (f + 1);
  const Duration extra = rest % (f + 1);

  std::vector<Duration> steps;
  for (int i = 1; i <= n - f - 1; ++i) steps.push_back(head);
  for (int j = 0; j <= f; ++j) steps.push_back(share + (j < extra ? 1 : 0));
  steps.push_back(last);
  return RefractoryFunction(std::move(steps));
}

Duration absorbance_distance(const RefractoryFunction& ref, int f, int cluster_size) {
  const int n = ref.n();
  if (cluster_size < 1 || cluster_size > n - f) {
    throw ParamsError(ParamsErrorKind::kRange, "cluster size out of range");
  }
  Duration total = 0;
  for (int g = f + 1; g <= f + cluster_size; ++g) total += ref.step(g);
  return total;
}

bool PropertyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
}

std::vector<std::vector<int>> integer_partitions(int total) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  if (total < 0) return out;
  enumerate_partitions(total, total, current, out);
  return out;
}

PropertyReport check_ref_properties(const RefractoryFunction& ref, const ProtocolParams& params) {
  PropertyReport report;
  const int n = params.n;
  const int f = params.f;
  const long double rho = params.rho;
  const long double d = params.effective_d();
  const long double sigma = params.sigma();
  const long double total = std::accumulate(ref.steps().begin(), ref.steps().end(), 0.0L);
  const bool shape_ok = static_cast<int>(ref.steps().size()) == n + 1;

  {
    PropertyCheck c{2, shape_ok, ""};
    for (int i = 1; c.passed && i <= n - 1; ++i) {
      if (ref.step(i) < ref.step(i + 1)) {
        c.passed = false;
        c.detail = "R" + std::to_string(i) + " < R" + std::to_string(i + 1);
      }
    }
    report.checks.push_back(c);
  }
  {
    PropertyCheck c{3, shape_ok, ""};
    const long double bound = 3.0L * d + 2.0L * rho / (1.0L - rho * rho) * total;
    for (int i = 1; c.passed && i <= n - f - 1; ++i) {
      if (!(static_cast<long double>(ref.step(i)) > bound)) {
        c.passed = false;
        c.detail = "R" + std::to_string(i) + " <= " + describe(bound);
      }
    }
    report.checks.push_back(c);
  }
  {
    PropertyCheck c{4, shape_ok, ""};
    const long double bound = sigma * (1.0L - rho) + 2.0L * rho / (1.0L + rho) * total;
    for (int i = 1; c.passed && i <= n; ++i) {
      if (!(static_cast<long double>(ref.step(i)) > bound)) {
        c.passed = false;
        c.detail = "R" + std::to_string(i) + " <= " + describe(bound);
      }
    }
    report.checks.push_back(c);
  }
  {
    PropertyCheck c{5, shape_ok, ""};
    if (c.passed) {
      const long double bound = tau(params, n + 2);
      if (!(static_cast<long double>(ref.step(n + 1)) >= bound)) {
        c.passed = false;
        c.detail = "R" + std::to_string(n + 1) + " < " + describe(bound);
      }
    }
    report.checks.push_back(c);
  }
  {
    PropertyCheck c{6, shape_ok, ""};
    Duration sum = 0;
    for (Duration s : ref.steps()) sum += s;
    if (sum != params.cycle) {
      c.passed = false;
      c.detail = "sum " + std::to_string(sum) + " != " + std::to_string(params.cycle);
    }
    report.checks.push_back(c);
  }
  {
    PropertyCheck c{7, shape_ok, ""};
    const long double target = stretched_cycle(params);
    const int correct = n - f;
    if (c.passed) {
      // Reduced form: (n−f)·R_i ≥ Cycle/(1−ρ) for every i ≤ n−f−1.
      for (int i = 1; c.passed && i <= correct - 1; ++i) {
        if (static_cast<long double>(correct * ref.step(i)) < target) {
          c.passed = false;
          c.detail = "reduced form fails at R" + std::to_string(i);
        }
      }
    }
    if (c.passed && correct <= kExhaustivePartitionLimit) {
      for (const auto& parts : integer_partitions(correct)) {
        if (parts.size() < 2) continue;  // one cluster: already synchronized
        // parts[0] is the largest cluster j'.
        Duration sum = 0;
        for (int g = 1; g <= parts[0]; ++g) sum += ref.step(g);
        for (std::size_t j = 1; j < parts.size(); ++j) {
          for (int g = f + 1; g <= f + parts[j]; ++g) sum += ref.step(g);
        }
        if (static_cast<long double>(sum) < target) {
          c.passed = false;
          std::ostringstream msg;
          msg << "partition {";
          for (std::size_t j = 0; j < parts.size(); ++j) msg << (j ? "," : "") << parts[j];
          msg << "} sums to " << describe(sum);
          c.detail = msg.str();
          break;
        }
      }
    }
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace pulsesync
