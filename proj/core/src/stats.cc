/* Copyright 2026 The DeltaDiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "deltadiff/stats.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "deltadiff/errors.h"

namespace deltadiff {
namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kPrecondition, "incomplete beta out of domain");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double FDistributionSf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    throw Error(ErrorCode::kPrecondition, "F degrees of freedom must be > 0");
  }
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  return RegularizedIncompleteBeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double Mean(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kPrecondition, "mean of an empty sample");
  }
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

AnovaResult OneWayAnova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    throw Error(ErrorCode::kPrecondition, "ANOVA needs at least two groups");
  }
  double total = 0.0;
  size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) {
      throw Error(ErrorCode::kPrecondition,
                  "ANOVA needs at least two samples per group");
    }
    total = std::accumulate(g.begin(), g.end(), total);
    n += g.size();
  }
  const double grand = total / static_cast<double>(n);
  AnovaResult r;
  for (const auto& g : groups) {
    const double m = Mean(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) r.ss_within += (v - m) * (v - m);
  }
  if (r.ss_within == 0.0) {
    throw Error(ErrorCode::kDegenerateGroups,
                "zero within-group variance");
  }
  r.df_between = static_cast<double>(groups.size() - 1);
  r.df_within = static_cast<double>(n - groups.size());
  r.f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
  r.p = FDistributionSf(r.f, r.df_between, r.df_within);
  return r;
}

double TimingPctDiff(double mean_a, double mean_b) {
  if (!(mean_a > 0.0) || !(mean_b > 0.0)) {
    throw Error(ErrorCode::kPrecondition, "timing means must be positive");
  }
  return (mean_b - mean_a) / mean_a * 100.0;
}

TimingComparison CompareTimings(std::span<const double> a,
                                std::span<const double> b, double alpha) {
  TimingComparison t;
  t.mean_a = Mean(a);
  t.mean_b = Mean(b);
  t.pct_diff = TimingPctDiff(t.mean_a, t.mean_b);
  const AnovaResult r = OneWayAnova(
      {std::vector<double>(a.begin(), a.end()),
       std::vector<double>(b.begin(), b.end())});
  t.f = r.f;
  t.p = r.p;
  t.significant = r.p < alpha;
  return t;
}

}  // namespace deltadiff
