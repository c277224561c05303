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

#include "deltadiff/analysis.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "deltadiff/errors.h"
#include "deltadiff/optimizer.h"
#include "deltadiff/variantgen.h"

namespace deltadiff {
namespace {

void CheckSameCorpus(const ExecutionRecord& a, const ExecutionRecord& b) {
  if (a.images.size() != b.images.size()) {
    throw Error(ErrorCode::kCorpusMismatch,
                std::to_string(a.images.size()) + " vs " +
                    std::to_string(b.images.size()) + " images");
  }
  for (size_t i = 0; i < a.images.size(); ++i) {
    if (a.images[i].image_id != b.images[i].image_id) {
      throw Error(ErrorCode::kCorpusMismatch,
                  "image " + std::to_string(i) + " is '" +
                      a.images[i].image_id + "' vs '" + b.images[i].image_id +
                      "'");
    }
  }
}

std::vector<int64_t> Ranking(const ImageResult& r) {
  std::vector<int64_t> out;
  for (const ScoredLabel& s : r.top_k) out.push_back(s.index);
  return out;
}

// Accumulates |a - b| statistics in double precision.
struct AbsDiffAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  double max = 0.0;
  int64_t count = 0;

  void Add(const Tensor& a, const Tensor& b) {
    for (int64_t i = 0; i < a.size(); ++i) {
      const double d = std::fabs(static_cast<double>(a[i]) - b[i]);
      sum += d;
      sum_sq += d * d;
      max = std::max(max, d);
    }
    count += a.size();
  }

  void Fill(LayerStats& s) const {
    s.count = count;
    if (count == 0) return;
    s.mean = sum / static_cast<double>(count);
    s.max = max;
    s.std = std::sqrt(std::max(sum_sq / static_cast<double>(count) -
                                   s.mean * s.mean,
                               0.0));
  }
};

void CheckAligned(const TraceEntry& a, const TraceEntry& b, size_t layer) {
  if (a.op != b.op || a.activation.shape() != b.activation.shape()) {
    throw Error(ErrorCode::kTraceMismatch,
                "layer " + std::to_string(layer) + ": " +
                    std::string(OpKindName(a.op)) +
                    ShapeToString(a.activation.shape()) + " vs " +
                    std::string(OpKindName(b.op)) +
                    ShapeToString(b.activation.shape()));
  }
}

}  // namespace

int64_t Top1(const ImageResult& result) {
  if (result.top_k.empty()) {
    throw Error(ErrorCode::kPrecondition,
                "image " + result.image_id + " has no labels");
  }
  return result.top_k.front().index;
}

double CompareLabels(const ExecutionRecord& a, const ExecutionRecord& b) {
  CheckSameCorpus(a, b);
  if (a.images.empty()) return 0.0;
  int differing = 0;
  for (size_t i = 0; i < a.images.size(); ++i) {
    differing += Top1(a.images[i]) != Top1(b.images[i]);
  }
  return 100.0 * differing / static_cast<double>(a.images.size());
}

double Rbo(std::span<const int64_t> a, std::span<const int64_t> b, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidP, "rbo persistence must be in (0, 1)");
  }
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kPrecondition,
                "rbo needs two non-empty rankings of equal depth");
  }
  const size_t k = a.size();
  std::set<int64_t> seen_a, seen_b;
  size_t overlap = 0;
  double weighted = 0.0;
  // Summing the weights alongside the terms normalizes by 1 - p^K while
  // keeping Rbo(a, a) == 1 exactly.
  double total_weight = 0.0;
  double weight = 1.0 - p;  // (1-p) p^(d-1)
  for (size_t d = 1; d <= k; ++d) {
    const int64_t x = a[d - 1], y = b[d - 1];
    if (x == y) {
      ++overlap;
    } else {
      overlap += seen_b.contains(x);
      overlap += seen_a.contains(y);
    }
    seen_a.insert(x);
    seen_b.insert(y);
    weighted += weight * static_cast<double>(overlap) / static_cast<double>(d);
    total_weight += weight;
    weight *= p;
  }
  return std::clamp(weighted / total_weight, 0.0, 1.0);
}

std::vector<double> PerImageRbo(const ExecutionRecord& a,
                                const ExecutionRecord& b, double p) {
  CheckSameCorpus(a, b);
  std::vector<double> out;
  for (size_t i = 0; i < a.images.size(); ++i) {
    out.push_back(Rbo(Ranking(a.images[i]), Ranking(b.images[i]), p));
  }
  return out;
}

std::vector<ClassBreakdown> PerClassBreakdown(
    const ExecutionRecord& a, const ExecutionRecord& b,
    const std::vector<std::string>& labels) {
  CheckSameCorpus(a, b);
  std::map<int64_t, ClassBreakdown> classes;
  for (size_t i = 0; i < a.images.size(); ++i) {
    const int64_t truth = a.images[i].label;
    if (truth != b.images[i].label) {
      throw Error(ErrorCode::kCorpusMismatch,
                  "ground truth differs for " + a.images[i].image_id);
    }
    if (truth < 0) {
      throw Error(ErrorCode::kCorpusMismatch,
                  "no ground truth for " + a.images[i].image_id);
    }
    ClassBreakdown& c = classes[truth];
    c.class_index = truth;
    ++c.total;
    c.affected += Top1(a.images[i]) != Top1(b.images[i]);
  }
  std::vector<ClassBreakdown> out;
  for (auto& [index, c] : classes) {
    c.label = index < static_cast<int64_t>(labels.size())
                  ? labels[index]
                  : "class_" + std::to_string(index);
    c.pct = 100.0 * c.affected / static_cast<double>(c.total);
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ClassBreakdown& x, const ClassBreakdown& y) {
                     return x.pct > y.pct;
                   });
  return out;
}

std::vector<LayerStats> ActivationDiff(const std::vector<TraceEntry>& a,
                                       const std::vector<TraceEntry>& b) {
  return PooledActivationDiff({a}, {b});
}

std::vector<LayerStats> PooledActivationDiff(
    const std::vector<std::vector<TraceEntry>>& a,
    const std::vector<std::vector<TraceEntry>>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kTraceMismatch,
                "trace sets cover " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " images");
  }
  const size_t layers = a.front().size();
  std::vector<AbsDiffAccumulator> acc(layers);
  for (size_t img = 0; img < a.size(); ++img) {
    if (a[img].size() != layers || b[img].size() != layers) {
      throw Error(ErrorCode::kTraceMismatch,
                  "trace lengths " + std::to_string(a[img].size()) + " vs " +
                      std::to_string(b[img].size()));
    }
    for (size_t l = 0; l < layers; ++l) {
      CheckAligned(a[img][l], b[img][l], l);
      acc[l].Add(a[img][l].activation, b[img][l].activation);
    }
  }
  std::vector<LayerStats> out(layers);
  for (size_t l = 0; l < layers; ++l) {
    out[l].layer_index = static_cast<int64_t>(l);
    out[l].node = a.front()[l].node;
    out[l].op = a.front()[l].op;
    acc[l].Fill(out[l]);
  }
  return out;
}

ParamDiff ParameterDiff(const ModelGraph& a, const ModelGraph& b) {
  const std::map<std::string, Tensor> mapped = MapParameters(b, a);
  ParamDiff diff;
  double sum = 0.0;
  for (const auto& [name, expected] : mapped) {
    const Tensor& actual = b.params.at(name);
    for (int64_t i = 0; i < actual.size(); ++i) {
      const double d = std::fabs(static_cast<double>(actual[i]) - expected[i]);
      sum += d;
      diff.max = std::max(diff.max, d);
      diff.count += std::bit_cast<uint32_t>(actual[i]) !=
                    std::bit_cast<uint32_t>(expected[i]);
    }
    diff.elements += actual.size();
  }
  if (diff.elements > 0) diff.mean = sum / static_cast<double>(diff.elements);
  return diff;
}

bool StructurallyMatch(const ModelGraph& a, const ModelGraph& b) {
  return OpHistogram(ApplyPass(a, PassId::kCanonicalizeOps)) ==
         OpHistogram(ApplyPass(b, PassId::kCanonicalizeOps));
}

std::string_view VerdictName(Verdict verdict) {
  switch (verdict) {
    case Verdict::kNoDivergence: return "NoDivergence";
    case Verdict::kParameterDivergence: return "ParameterDivergence";
    case Verdict::kGraphStructureDivergence: return "GraphStructureDivergence";
    case Verdict::kActivationOnlyDivergence: return "ActivationOnlyDivergence";
  }
  return "Unknown";
}

Localization Localize(const Package& source, const Package& target,
                      const AnalysisOptions& options) {
  Localization loc;
  const ExecutionRecord& ra = *source.record;
  const ExecutionRecord& rb = *target.record;
  const double dissimilarity = CompareLabels(ra, rb);

  if (!ra.traces.empty() && !rb.traces.empty()) {
    try {
      loc.layers = PooledActivationDiff(ra.traces, rb.traces);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTraceMismatch) throw;
    }
    for (const LayerStats& s : loc.layers) {
      if (s.mean > options.theta) {
        loc.onset_layer = s.layer_index;
        break;
      }
    }
  }

  loc.structure_match = StructurallyMatch(*source.graph, *target.graph);
  if (loc.structure_match) {
    try {
      loc.params = ParameterDiff(*source.graph, *target.graph);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParamMapMismatch) throw;
      loc.structure_match = false;
      loc.reason = e.what();
    }
  } else {
    loc.reason = "node-kind multisets differ after canonicalization";
  }
  if (!loc.structure_match) {
    loc.verdict = Verdict::kGraphStructureDivergence;
    return loc;
  }
  if (loc.params->count > 0) {
    loc.verdict = Verdict::kParameterDivergence;
    loc.reason = std::to_string(loc.params->count) + " parameter elements differ";
    return loc;
  }

  // Without traces, fall back to the final outputs.
  double output_mean = 0.0;
  if (loc.layers.empty()) {
    AbsDiffAccumulator acc;
    for (size_t i = 0; i < ra.images.size(); ++i) {
      acc.Add(ra.images[i].logits, rb.images[i].logits);
    }
    LayerStats s;
    acc.Fill(s);
    output_mean = s.mean;
  }
  if (dissimilarity > 0.0 || loc.onset_layer || output_mean > options.theta) {
    loc.verdict = Verdict::kActivationOnlyDivergence;
    loc.reason = "identical structure and parameters, outputs differ";
    return loc;
  }
  loc.verdict = Verdict::kNoDivergence;
  loc.reason = "no difference above threshold";
  return loc;
}

std::vector<double> TimingSamples(const ExecutionRecord& record) {
  std::vector<double> out;
  for (const ImageTiming& t : record.timings) {
    for (int64_t ns : t.samples_ns) out.push_back(static_cast<double>(ns));
  }
  return out;
}

DiffReport BuildDiffReport(const Package& a, const Package& b,
                           const AnalysisOptions& options) {
  DiffReport r;
  r.variant_a = a.record->variant_id;
  r.variant_b = b.record->variant_id;
  r.dissimilarity_pct = CompareLabels(*a.record, *b.record);
  r.top_k = a.record->top_k;
  r.rbo_p = options.rbo_p;
  const std::vector<double> rbo = PerImageRbo(*a.record, *b.record, options.rbo_p);
  r.mean_rbo = rbo.empty() ? 1.0 : Mean(rbo);
  for (size_t i = 0; i < rbo.size(); ++i) {
    r.labels.push_back({a.record->images[i].image_id,
                        Top1(a.record->images[i]), Top1(b.record->images[i]),
                        rbo[i]});
  }
  r.per_class = PerClassBreakdown(*a.record, *b.record, a.graph->labels);
  r.localization = Localize(a, b, options);
  const std::vector<double> ta = TimingSamples(*a.record);
  const std::vector<double> tb = TimingSamples(*b.record);
  if (ta.size() >= 2 && tb.size() >= 2) {
    try {
      r.timing = CompareTimings(ta, tb);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateGroups) throw;
    }
  }
  return r;
}

}  // namespace deltadiff
