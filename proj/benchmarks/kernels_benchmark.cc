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

#include <random>

#include "deltadiff/kernels.h"
#include "deltadiff/tensor.h"

namespace deltadiff {
namespace {

Tensor Random(const Shape& shape, uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t(shape);
  for (float& v : t.mutable_data()) v = dist(rng);
  return t;
}

Backend BackendArg(const benchmark::State& state) {
  return state.range(0) == 0 ? Backend::kReference : Backend::kOptimizedLayout;
}

// Args: backend, channels, spatial size.
void BM_Conv2D(benchmark::State& state) {
  const int64_t c = state.range(1), hw = state.range(2);
  const Tensor x = Random({1, c, hw, hw}, 1);
  const Tensor w = Random({c, c, 3, 3}, 2);
  const Tensor b = Random({c}, 3);
  ConvOptions options;
  options.padding = Padding::kSame;
  options.fused_relu = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::Conv2D(x, w, &b, options, BackendArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * c * c * 9 * hw * hw);
}
BENCHMARK(BM_Conv2D)
    ->ArgNames({"optimized", "c", "hw"})
    ->ArgsProduct({{0, 1}, {8, 32}, {16, 32}});

// Args: backend, features, fast math.
void BM_Dense(benchmark::State& state) {
  const int64_t f = state.range(1);
  const Tensor x = Random({8, f}, 4);
  const Tensor w = Random({f, f}, 5);
  const Tensor b = Random({f}, 6);
  const MathMode mode{state.range(2) != 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::Dense(x, w, &b, false, mode, BackendArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * 8 * f * f);
}
BENCHMARK(BM_Dense)
    ->ArgNames({"optimized", "f", "fast"})
    ->ArgsProduct({{0, 1}, {64, 256}, {0, 1}});

void BM_BatchMatmul(benchmark::State& state) {
  const int64_t n = state.range(1);
  const Tensor a = Random({4, n, n}, 7);
  const Tensor b = Random({4, n, n}, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::BatchMatmul(a, b, MathMode{}, BackendArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * 4 * n * n * n);
}
BENCHMARK(BM_BatchMatmul)
    ->ArgNames({"optimized", "n"})
    ->ArgsProduct({{0, 1}, {32, 96}});

void BM_Softmax(benchmark::State& state) {
  const Tensor x = Random({64, 1000}, 9);
  const MathMode mode{state.range(0) != 0};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::Softmax(x, mode));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_Softmax)->ArgName("fast")->Arg(0)->Arg(1);

void BM_MaxPool(benchmark::State& state) {
  const Tensor x = Random({1, 32, 32, 32}, 10);
  PoolOptions options;
  options.window = {2, 2};
  options.stride = {2, 2};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::MaxPool(x, options));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_MaxPool);

}  // namespace
}  // namespace deltadiff
