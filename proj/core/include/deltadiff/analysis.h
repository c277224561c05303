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

#ifndef DELTADIFF_ANALYSIS_H_
#define DELTADIFF_ANALYSIS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltadiff/executor.h"
#include "deltadiff/interpreter.h"
#include "deltadiff/model_graph.h"
#include "deltadiff/stats.h"

namespace deltadiff {

inline constexpr double kDefaultRboP = 0.9;
inline constexpr double kDefaultTheta = 1e-5;

// Top-1 label of an image result (the first top-K entry).
int64_t Top1(const ImageResult& result);

// Percentage of images whose top-1 labels differ. Both records must cover
// the same images in the same order (CorpusMismatch).
double CompareLabels(const ExecutionRecord& a, const ExecutionRecord& b);

// Truncated rank-biased overlap at depth K = |a| = |b| with weights
// normalized to sum to one. Requires 0 < p < 1 (InvalidP).
double Rbo(std::span<const int64_t> a, std::span<const int64_t> b, double p);

// Per-image RBO over the top-K label lists of two records.
std::vector<double> PerImageRbo(const ExecutionRecord& a,
                                const ExecutionRecord& b, double p);

struct ClassBreakdown {
  int64_t class_index = 0;
  std::string label;
  int affected = 0;
  int total = 0;
  double pct = 0.0;
};

// Per ground-truth class, the share of images whose top-1 labels differ.
// Classes without images are omitted. Sorted by pct descending, then class
// index ascending.
std::vector<ClassBreakdown> PerClassBreakdown(
    const ExecutionRecord& a, const ExecutionRecord& b,
    const std::vector<std::string>& labels);

// Statistics of |a - b| over the elements of one layer.
struct LayerStats {
  int64_t layer_index = 0;
  NodeId node = 0;
  OpKind op = OpKind::kReLU;
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // population standard deviation
  int64_t count = 0;
};

// Layer-by-layer statistics for one image. Traces must have the same length
// and the same op kind and shape at every layer (TraceMismatch).
std::vector<LayerStats> ActivationDiff(const std::vector<TraceEntry>& a,
                                       const std::vector<TraceEntry>& b);

// As ActivationDiff, pooling the elements of every image per layer.
std::vector<LayerStats> PooledActivationDiff(
    const std::vector<std::vector<TraceEntry>>& a,
    const std::vector<std::vector<TraceEntry>>& b);

struct ParamDiff {
  double mean = 0.0;  // over all parameter elements
  double max = 0.0;
  int64_t count = 0;     // elements that differ
  int64_t elements = 0;  // elements compared
};

// Compares every parameter of `b` with its counterpart in `a` under the
// dialect-aware name mapping (ParamMapMismatch when none exists).
ParamDiff ParameterDiff(const ModelGraph& a, const ModelGraph& b);

// Both graphs canonicalized, then compared by node-kind multiset.
bool StructurallyMatch(const ModelGraph& a, const ModelGraph& b);

enum class Verdict {
  kNoDivergence,
  kParameterDivergence,
  kGraphStructureDivergence,
  kActivationOnlyDivergence,
};

std::string_view VerdictName(Verdict verdict);

// A variant's graph and its execution record (with traces for debug runs).
struct Package {
  const ModelGraph* graph = nullptr;
  const ExecutionRecord* record = nullptr;
};

struct AnalysisOptions {
  double rbo_p = kDefaultRboP;
  double theta = kDefaultTheta;  // activation mean |diff| threshold
};

struct Localization {
  Verdict verdict = Verdict::kNoDivergence;
  std::string reason;
  bool structure_match = true;
  std::optional<ParamDiff> params;  // absent when names do not map
  std::vector<LayerStats> layers;   // empty without aligned traces
  std::optional<int64_t> onset_layer;
};

// Decision procedure: structural mismatch, else parameter differences,
// else activation differences above theta (or any label change), else no
// divergence.
Localization Localize(const Package& source, const Package& target,
                      const AnalysisOptions& options = {});

struct LabelRow {
  std::string image_id;
  int64_t top1_a = 0;
  int64_t top1_b = 0;
  double rbo = 0.0;
};

struct DiffReport {
  std::string variant_a;
  std::string variant_b;
  double dissimilarity_pct = 0.0;
  double mean_rbo = 1.0;
  int top_k = 5;
  double rbo_p = kDefaultRboP;
  std::vector<LabelRow> labels;
  std::vector<ClassBreakdown> per_class;
  Localization localization;
  std::optional<TimingComparison> timing;
};

// Pooled per-repeat durations of a record, in ns.
std::vector<double> TimingSamples(const ExecutionRecord& record);

DiffReport BuildDiffReport(const Package& a, const Package& b,
                           const AnalysisOptions& options = {});

}  // namespace deltadiff

#endif  // DELTADIFF_ANALYSIS_H_
