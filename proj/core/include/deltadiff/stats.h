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

#ifndef DELTADIFF_STATS_H_
#define DELTADIFF_STATS_H_

#include <span>
#include <vector>

namespace deltadiff {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double RegularizedIncompleteBeta(double a, double b, double x);

// Upper tail P(F > f) of the F(d1, d2) distribution.
double FDistributionSf(double f, double d1, double d2);

double Mean(std::span<const double> values);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
};

// One-way ANOVA. Needs at least two groups of at least two samples
// (Precondition); zero within-group variance is DegenerateGroups.
AnovaResult OneWayAnova(const std::vector<std::vector<double>>& groups);

// (mean_b - mean_a) / mean_a * 100. Both means must be positive.
double TimingPctDiff(double mean_a, double mean_b);

struct TimingComparison {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double pct_diff = 0.0;
  double f = 0.0;
  double p = 1.0;
  bool significant = false;  // p < alpha
};

TimingComparison CompareTimings(std::span<const double> a,
                                std::span<const double> b,
                                double alpha = 0.05);

}  // namespace deltadiff

#endif  // DELTADIFF_STATS_H_
