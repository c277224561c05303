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

#include <benchmark/benchmark.h>

#include <string>

#include "deltadiff/desk_models.h"
#include "deltadiff/executor.h"
#include "deltadiff/interpreter.h"
#include "deltadiff/optimizer.h"

namespace deltadiff {
namespace {

const std::string kNames[] = {std::string(kTinyNetA), std::string(kTinyNetB),
                              std::string(kTinyNetC)};

// Args: model index, optimization level, backend. One image per iteration.
void BM_Model(benchmark::State& state) {
  static const Corpus corpus = BuildDeskCorpus(8);
  const std::string& name = kNames[state.range(0)];
  const auto level = static_cast<OptLevel>(state.range(1));
  const Backend backend =
      state.range(2) == 0 ? Backend::kReference : Backend::kOptimizedLayout;
  const ModelGraph graph = ApplyLevel(BuildDeskModel(name), level);
  const ExecutionPlan plan(graph, backend);
  const Tensor input = Preprocess(corpus.images[0].raw, PreprocessSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(plan.RunSingle(input));
  state.SetLabel(name + "/" + std::string(OptLevelName(level)) + "/" +
                 std::string(BackendName(backend)));
}
BENCHMARK(BM_Model)
    ->ArgNames({"model", "level", "optimized"})
    ->ArgsProduct({{0, 1, 2},
                   {static_cast<int64_t>(OptLevel::kBasic),
                    static_cast<int64_t>(OptLevel::kExtended)},
                   {0, 1}});

}  // namespace
}  // namespace deltadiff

BENCHMARK_MAIN();
