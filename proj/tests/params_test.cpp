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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace pulsesync {
namespace {

constexpr Duration kSec = kNanosPerSecond;

ProtocolParams Base() { return validate_params(4, 1, 100 * kSec, kSec, 0.0); }

// Closed-form τ, independent of the library's summation.
long double OracleTau(long double d, long double rho, int k) {
  if (rho == 0) return 2 * d * (k + 1);
  const long double r = (1 + rho) / (1 - rho);
  return 2 * d * (1 + rho) * (std::pow(r, k + 1) - 1) / (r - 1);
}

TEST(ValidateParams, AcceptsReferenceSet) {
  ProtocolParams p = Base();
  EXPECT_EQ(p.n, 4);
  EXPECT_EQ(p.sigma(), kSec);
}

TEST(ValidateParams, RelayTripleSigma) {
  ProtocolParams p = validate_params(4, 1, 300 * kSec, kSec, 0.0, NetworkMode::kRelay);
  EXPECT_EQ(p.sigma(), 3 * kSec);
  EXPECT_EQ(p.effective_d(), 3 * kSec);
}

TEST(ValidateParams, CycleTooShortCarriesMinimum) {
  try {
    validate_params(4, 1, 5 * kSec, kSec, 0.0);
    FAIL() << "expected CycleTooShort";
  } catch (const ParamsError& e) {
    EXPECT_EQ(e.kind(), ParamsErrorKind::kCycleTooShort);
    ASSERT_TRUE(e.minimum_cycle().has_value());
    // d(n−f)[(f+1) + 2(n+3)] at ρ = 0
    EXPECT_NEAR(static_cast<double>(*e.minimum_cycle()), 48e9, 1e-3);
  }
}

TEST(ValidateParams, BoundaryIsStrict) {
  EXPECT_THROW(validate_params(4, 1, 48 * kSec, kSec, 0.0), ParamsError);
  EXPECT_NO_THROW(validate_params(4, 1, 48 * kSec + 1, kSec, 0.0));
}

TEST(ValidateParams, FaultRatio) {
  try {
    validate_params(3, 1, 100 * kSec, kSec, 0.0);
    FAIL();
  } catch (const ParamsError& e) {
    EXPECT_EQ(e.kind(), ParamsErrorKind::kFaultRatio);
  }
}

TEST(ValidateParams, RangeErrors) {
  auto kind_of = [](auto fn) {
    try {
      fn();
    } catch (const ParamsError& e) {
      return e.kind();
    }
    return ParamsErrorKind::kFaultRatio;
  };
  EXPECT_EQ(kind_of([] { validate_params(4, 1, 100 * kSec, 0, 0.0); }), ParamsErrorKind::kRange);
  EXPECT_EQ(kind_of([] { validate_params(4, 1, -1, kSec, 0.0); }), ParamsErrorKind::kRange);
  EXPECT_EQ(kind_of([] { validate_params(4, 1, 100 * kSec, kSec, 1.0); }),
            ParamsErrorKind::kRange);
  EXPECT_EQ(kind_of([] { validate_params(4, 1, 100 * kSec, kSec, -0.1); }),
            ParamsErrorKind::kRange);
}

TEST(ValidateParams, LargeRhoHasNoAdmissibleCycle) {
  try {
    validate_params(4, 1, 1000000 * kSec, kSec, 0.2);
    FAIL();
  } catch (const ParamsError& e) {
    EXPECT_EQ(e.kind(), ParamsErrorKind::kCycleTooShort);
    EXPECT_FALSE(e.minimum_cycle().has_value());
  }
}

TEST(Tau, ReferenceValues) {
  ProtocolParams p = Base();
  EXPECT_EQ(tau(p, 0), 2.0L * kSec);
  EXPECT_EQ(tau(p, 5), 12.0L * kSec);
  EXPECT_THROW(tau(p, -1), ParamsError);
  EXPECT_THROW(tau(p, p.n + 4), ParamsError);
}

TEST(Tau, MatchesClosedForm) {
  ProtocolParams p = validate_params(7, 2, 1000 * kSec, kSec, 1e-4);
  for (int k = 0; k <= p.n + 3; ++k) {
    long double want = OracleTau(kSec, 1e-4L, k);
    EXPECT_NEAR(static_cast<double>(tau(p, k) / want), 1.0, 1e-12) << k;
  }
}

TEST(Tau, Recurrence) {
  ProtocolParams p = validate_params(10, 3, 2000 * kSec, kSec, 1e-4);
  const long double rho = p.rho;
  const long double r = (1 + rho) / (1 - rho);
  for (int k = 0; k + 1 <= p.n + 3; ++k) {
    long double lhs = tau(p, k + 1);
    long double rhs = tau(p, k) * r + 2.0L * kSec * (1 + rho);
    EXPECT_LE(std::fabs(static_cast<double>((lhs - rhs) / lhs)), 1e-12);
  }
}

TEST(BuildRef, ReferenceTable) {
  ProtocolParams p = Base();
  RefractoryFunction ref = build_ref(p);
  ASSERT_EQ(ref.steps().size(), 5u);
  const long double third = 100e9L / 3;
  EXPECT_LE(std::fabs(static_cast<double>(ref.step(1) - third)), 1.0);
  EXPECT_EQ(ref.step(1), ref.step(2));
  EXPECT_EQ(ref.step(5), 14 * kSec);
  const long double tail = (third - 14e9L) / 2;
  EXPECT_LE(std::fabs(static_cast<double>(ref.step(3) - tail)), 1.0);
  EXPECT_LE(std::fabs(static_cast<double>(ref.step(4) - tail)), 1.0);
  EXPECT_EQ(std::accumulate(ref.steps().begin(), ref.steps().end(), Duration{0}), 100 * kSec);
}

TEST(BuildRef, QuantizationStaysClose) {
  for (double rho : {0.0, 1e-6, 1e-4}) {
    ProtocolParams p = validate_params(13, 4, 5000 * kSec + 7, kSec / 3, rho);
    RefractoryFunction ref = build_ref(p);
    auto exact = exact_ref_steps(p);
    for (int i = 1; i <= p.n + 1; ++i) {
      EXPECT_LE(std::fabs(static_cast<double>(ref.step(i) - exact[i - 1])), p.n + 1.0);
    }
    EXPECT_EQ(std::accumulate(ref.steps().begin(), ref.steps().end(), Duration{0}), p.cycle);
  }
}

TEST(ThresholdAt, ReferenceLevels) {
  RefractoryFunction ref = build_ref(Base());
  EXPECT_EQ(ref.threshold_at(0), 5);
  EXPECT_EQ(ref.threshold_at(14 * kSec - 1), 5);
  EXPECT_EQ(ref.threshold_at(14 * kSec), 4);
  // Start of R2's span: R3+R4+R5 after the pulse.
  const Duration b2 = ref.step(3) + ref.step(4) + ref.step(5);
  EXPECT_EQ(ref.threshold_at(b2 - 1), 3);
  EXPECT_EQ(ref.threshold_at(b2), 2);
  EXPECT_EQ(ref.threshold_at(33'333'333'334), 2);
  EXPECT_EQ(ref.threshold_at(50 * kSec), 2);
  EXPECT_EQ(ref.threshold_at(70 * kSec), 1);
  EXPECT_EQ(ref.threshold_at(100 * kSec - 1), 1);
  EXPECT_EQ(ref.threshold_at(100 * kSec), 0);
  EXPECT_EQ(ref.threshold_at(500 * kSec), 0);
}

TEST(ThresholdAt, MonotoneAndSurjective) {
  ProtocolParams p = validate_params(7, 2, 300 * kSec, kSec, 1e-6);
  RefractoryFunction ref = build_ref(p);
  std::vector<bool> seen(p.n + 2, false);
  int previous = p.n + 1;
  for (int level = p.n + 1; level >= 0; --level) {
    Duration start = ref.level_start(level);
    for (Duration t : {start, start + 1}) {
      int got = ref.threshold_at(t);
      EXPECT_LE(got, previous);
      previous = got;
      seen[got] = true;
    }
  }
  for (bool s : seen) EXPECT_TRUE(s);
}

TEST(AbsorbanceDistance, ReferenceValues) {
  RefractoryFunction ref = build_ref(Base());
  EXPECT_NEAR(static_cast<double>(absorbance_distance(ref, 1, 1)), 100e9 / 3, 1.0);
  EXPECT_NEAR(static_cast<double>(absorbance_distance(ref, 1, 2)), 43e9, 1.0);
  EXPECT_NEAR(static_cast<double>(absorbance_distance(ref, 1, 3)), 52.666666667e9, 1.0);
  EXPECT_THROW(absorbance_distance(ref, 1, 0), ParamsError);
  EXPECT_THROW(absorbance_distance(ref, 1, 4), ParamsError);
}

TEST(Properties, ReferencePasses) {
  ProtocolParams p = Base();
  PropertyReport report = check_ref_properties(build_ref(p), p);
  ASSERT_EQ(report.checks.size(), 6u);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.property << " " << c.detail;
}

TEST(Properties, HalvedFirstStepBreaksSum) {
  ProtocolParams p = Base();
  auto steps = build_ref(p).steps();
  steps[0] /= 2;
  PropertyReport report = check_ref_properties(RefractoryFunction(steps), p);
  EXPECT_FALSE(report.checks[4].passed);
  EXPECT_EQ(report.checks[4].property, 6);
}

TEST(Properties, SwapBreaksMonotonicity) {
  ProtocolParams p = Base();
  auto steps = build_ref(p).steps();
  std::swap(steps[1], steps[2]);
  PropertyReport report = check_ref_properties(RefractoryFunction(steps), p);
  EXPECT_FALSE(report.checks[0].passed);
  EXPECT_EQ(report.checks[0].property, 2);
}

TEST(Properties, ShortAbsoluteRefractoryFailsFive) {
  ProtocolParams p = Base();
  auto steps = build_ref(p).steps();
  steps[4] -= 1;
  steps[0] += 1;
  PropertyReport report = check_ref_properties(RefractoryFunction(steps), p);
  EXPECT_FALSE(report.checks[3].passed);
}

TEST(IntegerPartitions, Counts) {
  // Partition numbers p(1..9)
  const int expected[] = {1, 2, 3, 5, 7, 11, 15, 22, 30};
  for (int n = 1; n <= 9; ++n) {
    EXPECT_EQ(integer_partitions(n).size(), static_cast<std::size_t>(expected[n - 1])) << n;
  }
  for (const auto& parts : integer_partitions(6)) {
    EXPECT_EQ(std::accumulate(parts.begin(), parts.end(), 0), 6);
    EXPECT_TRUE(std::is_sorted(parts.rbegin(), parts.rend()));
  }
}

TEST(DerivedConstants, ReferenceValues) {
  ProtocolParams p = Base();
  DerivedConstants c = derive_constants(p);
  ASSERT_EQ(c.tau_table.size(), static_cast<std::size_t>(p.n + 4));
  EXPECT_EQ(c.message_decay, 14e9L);
  EXPECT_NEAR(static_cast<double>(c.cycle_min), 2.0 / 3.0 * 100e9, 1e-3);
  EXPECT_EQ(c.cycle_max, 100e9L);
  EXPECT_EQ(c.correctness_warmup, 100e9L + 1e9L + 14e9L);
  EXPECT_EQ(c.assessment_window, kSec);
}

TEST(ParseDuration, Units) {
  EXPECT_EQ(parse_duration("100s"), 100 * kSec);
  EXPECT_EQ(parse_duration("1.5ms"), 1'500'000);
  EXPECT_EQ(parse_duration("7us"), 7000);
  EXPECT_EQ(parse_duration("42"), 42);
  EXPECT_EQ(parse_duration("42ns"), 42);
  EXPECT_EQ(parse_duration("0.1s"), 100'000'000);
  EXPECT_FALSE(parse_duration("abc").has_value());
  EXPECT_FALSE(parse_duration("1h").has_value());
  EXPECT_FALSE(parse_duration("").has_value());
  EXPECT_FALSE(parse_duration("1.5").has_value());
}

}  // namespace
}  // namespace pulsesync
