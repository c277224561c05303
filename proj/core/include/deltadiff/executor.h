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

#ifndef DELTADIFF_EXECUTOR_H_
#define DELTADIFF_EXECUTOR_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltadiff/corpus.h"
#include "deltadiff/interpreter.h"
#include "deltadiff/model_graph.h"
#include "deltadiff/tensor.h"

namespace deltadiff {

// x' = (resize(x) * scale - mean[c]) / std[c]. A mean or std with a single
// entry applies to every channel.
struct PreprocessSpec {
  float scale = 1.0f / 255.0f;
  std::vector<float> mean = {0.5f};
  std::vector<float> std = {0.5f};
  std::optional<std::pair<int64_t, int64_t>> size;  // (H, W); nearest neighbor
};

// `raw` must be rank-4 NCHW (CorpusError otherwise). Throws ZeroStd.
Tensor Preprocess(const Tensor& raw, const PreprocessSpec& spec);

struct ScoredLabel {
  int64_t index = 0;
  float score = 0.0f;
  bool operator==(const ScoredLabel&) const = default;
};

// The k highest scores, descending, ties broken by ascending index.
std::vector<ScoredLabel> TopK(std::span<const float> scores, int k);

struct ImageResult {
  std::string image_id;
  int64_t label = -1;  // ground truth
  std::vector<ScoredLabel> top_k;
  Tensor logits;  // the graph output for this image
};

struct ImageTiming {
  std::string image_id;
  int64_t cold_ns = 0;               // first execution, warmup included
  std::vector<int64_t> samples_ns;   // one per timed repeat
};

struct ExecutionRecord {
  std::string variant_id;
  int top_k = 5;
  int repeats = 10;
  int warmup = 1;
  std::vector<ImageResult> images;
  std::vector<ImageTiming> timings;
  // Debug runs only: one trace per image, in topological order.
  std::vector<std::vector<TraceEntry>> traces;
};

struct RunOptions {
  std::string variant_id;
  Backend backend = Backend::kReference;
  PreprocessSpec preprocess;
  int top_k = 5;
  int repeats = 10;
  int warmup = 1;
  // Workers for the label pass; 0 uses DELTADIFF_THREADS or the hardware.
  int threads = 0;
  // Debug runs fail with OutOfMemoryBudget once traces exceed this size.
  int64_t trace_budget_bytes = int64_t{1} << 30;
  // Called once per image, in corpus order, as soon as its timing is known.
  std::function<void(const ImageResult&, const ImageTiming&)> on_image;
};

// Worker count: `requested` if positive, else DELTADIFF_THREADS if set and
// positive, else the hardware concurrency.
int ResolveThreadCount(int requested);

// Runs fn(0..n-1) on up to `threads` workers.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn);

// Labels are computed first, fanned out across images. Timing follows on
// this thread alone: per image, `warmup` untimed runs then `repeats` timed
// whole-graph runs. Timed runs must reproduce the label-pass output
// bitwise; a mismatch is an Internal error.
ExecutionRecord RunInference(const ModelGraph& graph, const Corpus& corpus,
                             const RunOptions& options);

// As RunInference, plus traced executions per image capturing every layer's
// activation and its median duration over the timed repeats.
ExecutionRecord RunDebug(const ModelGraph& graph, const Corpus& corpus,
                         const RunOptions& options);

}  // namespace deltadiff

#endif  // DELTADIFF_EXECUTOR_H_
