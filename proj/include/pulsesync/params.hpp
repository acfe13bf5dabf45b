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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pulsesync/time.hpp"

namespace pulsesync {

enum class NetworkMode { kStrongBroadcast, kRelay };

std::string_view to_string(NetworkMode mode);
std::optional<NetworkMode> parse_network_mode(std::string_view text);

enum class ParamsErrorKind { kFaultRatio, kCycleTooShort, kRange };

class ParamsError : public std::runtime_error {
 public:
  ParamsError(ParamsErrorKind kind, const std::string& what,
              std::optional<long double> minimum_cycle = std::nullopt)
      : std::runtime_error(what), kind_(kind), minimum_cycle_(minimum_cycle) {}

  ParamsErrorKind kind() const { return kind_; }
  // Only for kCycleTooShort: the infimum of admissible Cycle values (ns).
  // Empty when no Cycle satisfies the restriction for the given ρ.
  std::optional<long double> minimum_cycle() const { return minimum_cycle_; }

 private:
  ParamsErrorKind kind_;
  std::optional<long double> minimum_cycle_;
};

/// Validated protocol parameters.
///
/// `d` is the network's end-to-end bound as configured. In relay mode every
/// message may take up to three times as long and arrive with 2d of skew, so
/// the protocol itself runs against `effective_d()` = 3d; all refractory
/// steps, τ values and timeliness windows use the effective bound.
struct ProtocolParams {
  int n = 0;
  int f = 0;
  Duration cycle = 0;
  Duration d = 0;
  double rho = 0.0;
  NetworkMode mode = NetworkMode::kStrongBroadcast;

  Duration effective_d() const { return mode == NetworkMode::kRelay ? 3 * d : d; }
  // Tightness target σ.
  Duration sigma() const { return effective_d(); }
};

// Infimum of admissible Cycle for (n, f, d, ρ); nullopt when the restriction's
// denominator is non-positive (ρ too large for this n, f).
std::optional<long double> minimum_cycle(int n, int f, long double d, long double rho);

ProtocolParams validate_params(int n, int f, Duration cycle, Duration d, double rho,
                               NetworkMode mode = NetworkMode::kStrongBroadcast);

// Σ_{i=0}^{terms-1} r^i with r = (1+ρ)/(1−ρ); equals `terms` at ρ = 0.
long double geometric_sum(long double rho, int terms);

/// τ(k) = 2d(1+ρ)·Σ_{i=0}^{k} r^i, in local nanoseconds (unquantized).
/// Throws ParamsError(kRange) unless 0 ≤ k ≤ n+3.
long double tau(const ProtocolParams& params, int k);

struct DerivedConstants {
  std::vector<long double> tau_table;  // τ(0)..τ(n+3)
  std::vector<Duration> tau_ns;        // floor(τ(k)); age ≤ τ(k) ⇔ age ≤ tau_ns[k]
  long double cycle_min = 0;
  long double cycle_max = 0;
  long double message_decay = 0;        // τ(n+2)
  long double correctness_warmup = 0;   // cycle_max + σ + message_decay
  Duration assessment_window = 0;       // floor(d(1+ρ)), local ns
};

DerivedConstants derive_constants(const ProtocolParams& params);

/// Step durations of the refractory function and the threshold-level lookup.
class RefractoryFunction {
 public:
  RefractoryFunction() = default;
  // `steps[i-1]` = R_i for i = 1..n+1.
  explicit RefractoryFunction(std::vector<Duration> steps);

  int n() const { return static_cast<int>(steps_.size()) - 1; }
  // R_i, 1-based.
  Duration step(int i) const { return steps_.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<Duration>& steps() const { return steps_; }
  Duration cycle() const { return level_start_.front(); }

  // Elapsed local time at which threshold level `level` begins (0..n+1).
  // level_start(n+1) = 0, level_start(0) = Cycle.
  Duration level_start(int level) const {
    return level_start_.at(static_cast<std::size_t>(level));
  }

  int threshold_at(Duration elapsed_local) const;

 private:
  std::vector<Duration> steps_;
  std::vector<Duration> level_start_;
};

RefractoryFunction build_ref(const ProtocolParams& params);

// The real-valued steps before quantization.
std::vector<long double> exact_ref_steps(const ProtocolParams& params);

/// ad = Σ_{g=f+1}^{f+cluster_size} R_g. Throws ParamsError(kRange) unless
/// 1 ≤ cluster_size ≤ n−f.
Duration absorbance_distance(const RefractoryFunction& ref, int f, int cluster_size);

struct PropertyCheck {
  int property = 0;
  bool passed = false;
  std::string detail;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;  // Properties 2..7 in order
  bool all_passed() const;
};

// Exhaustive Property 7 evaluation is used while n−f ≤ this bound.
inline constexpr int kExhaustivePartitionLimit = 12;

PropertyReport check_ref_properties(const RefractoryFunction& ref, const ProtocolParams& params);

// All integer partitions of `total` as non-increasing part lists.
std::vector<std::vector<int>> integer_partitions(int total);

}  // namespace pulsesync
