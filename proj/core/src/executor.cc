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

#include "deltadiff/executor.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "deltadiff/errors.h"

namespace deltadiff {
namespace {

using Clock = std::chrono::steady_clock;

int64_t ElapsedNs(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

float ChannelValue(const std::vector<float>& v, int64_t c, const char* what) {
  if (v.size() == 1) return v[0];
  if (static_cast<int64_t>(v.size()) <= c) {
    throw Error(ErrorCode::kConfigError,
                std::string("preprocess ") + what + " has " +
                    std::to_string(v.size()) + " entries, need one per channel");
  }
  return v[c];
}

void CheckOptions(const RunOptions& options) {
  if (options.repeats < 1) {
    throw Error(ErrorCode::kPrecondition, "repeats must be >= 1");
  }
  if (options.warmup < 0 || options.top_k < 1) {
    throw Error(ErrorCode::kPrecondition, "warmup must be >= 0 and k >= 1");
  }
}

struct Prepared {
  std::vector<Tensor> inputs;
  std::vector<ImageResult> results;
};

Prepared LabelPass(const ExecutionPlan& plan, const Corpus& corpus,
                   const RunOptions& options) {
  Prepared p;
  p.inputs.resize(corpus.images.size());
  p.results.resize(corpus.images.size());
  for (size_t i = 0; i < corpus.images.size(); ++i) {
    p.inputs[i] = Preprocess(corpus.images[i].raw, options.preprocess);
    const Shape& want = plan.graph().inputs[0].shape;
    if (p.inputs[i].shape() != want) {
      throw Error(ErrorCode::kCorpusError,
                  "image " + corpus.images[i].id + " has shape " +
                      ShapeToString(p.inputs[i].shape()) + ", model expects " +
                      ShapeToString(want));
    }
  }
  ParallelFor(corpus.images.size(), ResolveThreadCount(options.threads),
              [&](size_t i) {
                ImageResult& r = p.results[i];
                r.image_id = corpus.images[i].id;
                r.label = corpus.images[i].label;
                r.logits = plan.RunSingle(p.inputs[i]);
                r.top_k = TopK(r.logits.data(), options.top_k);
              });
  return p;
}

ImageTiming TimeImage(const ExecutionPlan& plan, const Tensor& input,
                      const ImageResult& expected, const RunOptions& options) {
  ImageTiming t;
  t.image_id = expected.image_id;
  const int total = options.warmup + options.repeats;
  for (int run = 0; run < total; ++run) {
    const Clock::time_point start = Clock::now();
    Tensor out = plan.RunSingle(input);
    const int64_t ns = std::max<int64_t>(ElapsedNs(start), 1);
    if (run == 0) t.cold_ns = ns;
    if (run >= options.warmup) t.samples_ns.push_back(ns);
    if (!out.BitwiseEquals(expected.logits)) {
      throw Error(ErrorCode::kInternal,
                  "non-deterministic output for image " + expected.image_id);
    }
  }
  return t;
}

// Traced runs repeat like timed runs: activations come from the first run,
// each layer's duration is its median over the timed repeats.
std::vector<TraceEntry> TraceImage(const ExecutionPlan& plan,
                                   const Tensor& input,
                                   const ImageResult& expected,
                                   const RunOptions& options) {
  const ModelGraph& graph = plan.graph();
  std::vector<TraceEntry> trace;
  std::vector<std::vector<int64_t>> layer_ns;
  const int total = options.warmup + options.repeats;
  for (int run = 0; run < total; ++run) {
    std::vector<TraceEntry> current;
    const Tensor out = plan.RunSingle(input, &current);
    if (!out.BitwiseEquals(expected.logits) ||
        (graph.outputs[0] == ValueRef::Of(current.back().node) &&
         !current.back().activation.BitwiseEquals(out))) {
      throw Error(ErrorCode::kInternal,
                  "traced run diverged for image " + expected.image_id);
    }
    if (run == 0) {
      layer_ns.resize(current.size());
      trace = std::move(current);
      if (options.warmup > 0) continue;
    }
    const std::vector<TraceEntry>& timed = run == 0 ? trace : current;
    for (size_t l = 0; l < timed.size(); ++l) {
      layer_ns[l].push_back(timed[l].duration_ns);
    }
  }
  for (size_t l = 0; l < trace.size(); ++l) {
    std::vector<int64_t>& s = layer_ns[l];
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    trace[l].duration_ns = s[s.size() / 2];
  }
  return trace;
}

ExecutionRecord Execute(const ModelGraph& graph, const Corpus& corpus,
                        const RunOptions& options, bool debug) {
  CheckOptions(options);
  if (graph.inputs.size() != 1 || graph.outputs.size() != 1) {
    throw Error(ErrorCode::kPrecondition,
                "executor requires a single-input, single-output graph");
  }
  const ExecutionPlan plan(graph, options.backend);
  Prepared prepared = LabelPass(plan, corpus, options);

  ExecutionRecord record;
  record.variant_id = options.variant_id;
  record.top_k = options.top_k;
  record.repeats = options.repeats;
  record.warmup = options.warmup;
  int64_t trace_bytes = 0;
  for (size_t i = 0; i < corpus.images.size(); ++i) {
    const ImageResult& result = prepared.results[i];
    if (debug) {
      std::vector<TraceEntry> trace = TraceImage(plan, prepared.inputs[i],
                                                 result, options);
      for (const TraceEntry& e : trace) {
        trace_bytes += e.activation.size() * static_cast<int64_t>(sizeof(float));
      }
      if (trace_bytes > options.trace_budget_bytes) {
        throw Error(ErrorCode::kOutOfMemoryBudget,
                    "debug traces exceed " +
                        std::to_string(options.trace_budget_bytes) + " bytes");
      }
      record.traces.push_back(std::move(trace));
    }
    ImageTiming timing = TimeImage(plan, prepared.inputs[i], result, options);
    if (options.on_image) options.on_image(result, timing);
    record.timings.push_back(std::move(timing));
  }
  record.images = std::move(prepared.results);
  return record;
}

}  // namespace

Tensor Preprocess(const Tensor& raw, const PreprocessSpec& spec) {
  if (raw.rank() != 4) {
    throw Error(ErrorCode::kCorpusError,
                "expected an NCHW image, got shape " +
                    ShapeToString(raw.shape()));
  }
  for (float s : spec.std) {
    if (s == 0.0f) throw Error(ErrorCode::kZeroStd, "preprocess std is 0");
  }
  if (spec.std.empty() || spec.mean.empty()) {
    throw Error(ErrorCode::kConfigError, "preprocess mean/std are empty");
  }
  const int64_t n = raw.dim(0), c = raw.dim(1), h = raw.dim(2), w = raw.dim(3);
  const int64_t oh = spec.size ? spec.size->first : h;
  const int64_t ow = spec.size ? spec.size->second : w;
  if (oh < 1 || ow < 1) {
    throw Error(ErrorCode::kConfigError, "preprocess size must be positive");
  }
  Tensor out({n, c, oh, ow});
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float mean = ChannelValue(spec.mean, ch, "mean");
      const float std = ChannelValue(spec.std, ch, "std");
      for (int64_t y = 0; y < oh; ++y) {
        const int64_t sy = y * h / oh;
        for (int64_t x = 0; x < ow; ++x) {
          const int64_t sx = x * w / ow;
          out[out.Offset4(b, ch, y, x)] =
              (raw[raw.Offset4(b, ch, sy, sx)] * spec.scale - mean) / std;
        }
      }
    }
  }
  return out;
}

std::vector<ScoredLabel> TopK(std::span<const float> scores, int k) {
  std::vector<ScoredLabel> all;
  all.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    all.push_back({static_cast<int64_t>(i), scores[i]});
  }
  const size_t take = std::min(all.size(), static_cast<size_t>(std::max(k, 0)));
  std::partial_sort(all.begin(), all.begin() + take, all.end(),
                    [](const ScoredLabel& a, const ScoredLabel& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  all.resize(take);
  return all;
}

int ResolveThreadCount(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DELTADIFF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min<size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ExecutionRecord RunInference(const ModelGraph& graph, const Corpus& corpus,
                             const RunOptions& options) {
  return Execute(graph, corpus, options, /*debug=*/false);
}

ExecutionRecord RunDebug(const ModelGraph& graph, const Corpus& corpus,
                         const RunOptions& options) {
  return Execute(graph, corpus, options, /*debug=*/true);
}

}  // namespace deltadiff
