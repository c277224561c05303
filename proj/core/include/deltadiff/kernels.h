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

#ifndef DELTADIFF_KERNELS_H_
#define DELTADIFF_KERNELS_H_

#include <cstdint>
#include <span>

#include "deltadiff/tensor.h"

namespace deltadiff {

enum class Padding { kSame, kValid };

// Reference runs the textbook loop nests. OptimizedLayout reorders loops for
// locality but keeps every output element's accumulation sequence, so both
// backends produce bit-identical results.
enum class Backend { kReference, kOptimizedLayout };

struct Stride2D {
  int64_t height = 1;
  int64_t width = 1;
  bool operator==(const Stride2D&) const = default;
};

struct Window2D {
  int64_t height = 1;
  int64_t width = 1;
  bool operator==(const Window2D&) const = default;
};

// Graph-level math permissions. With fast_math, softmax uses a polynomial
// exp and dense/batch_matmul reductions use four interleaved partial sums.
struct MathMode {
  bool fast_math = false;
};

struct ConvOptions {
  Stride2D stride;
  Padding padding = Padding::kValid;
  bool fused_relu = false;
};

struct PoolOptions {
  Window2D window;
  Stride2D stride;
  Padding padding = Padding::kValid;
};

// Output length and leading pad along one spatial axis. SAME pads
// symmetrically with the odd pixel on the bottom/right.
struct AxisExtent {
  int64_t output = 0;
  int64_t pad_before = 0;
};
AxisExtent ComputeAxisExtent(int64_t input, int64_t window, int64_t stride,
                             Padding padding);

// Shape rules, shared with graph shape inference. Each throws ShapeMismatch
// or InvalidStride on bad operands.
Shape Conv2DShape(const Shape& input, const Shape& weights, const Shape* bias,
                  const ConvOptions& options);
Shape DenseShape(const Shape& input, const Shape& weights, const Shape* bias);
Shape BatchMatmulShape(const Shape& a, const Shape& b);
Shape PoolShape(const Shape& input, const PoolOptions& options);
Shape GlobalAvgPoolShape(const Shape& input);
Shape AddShape(const Shape& a, const Shape& b);
Shape BatchNormShape(const Shape& input, const Shape& gamma, const Shape& beta,
                     const Shape& mean, const Shape& variance);
Shape ReshapeShape(const Shape& input, const Shape& target);
Shape ConcatShape(std::span<const Shape> inputs, int64_t axis);

namespace kernels {

// input [N,C,H,W], weights [K,C,R,S], bias [K]. Per output element the sum
// runs over C, then R, then S; padded taps are skipped; bias is added last.
Tensor Conv2D(const Tensor& input, const Tensor& weights, const Tensor* bias,
              const ConvOptions& options,
              Backend backend = Backend::kReference);

// input [N,F], weights [O,F], bias [O]. y = sum_f W[o,f] x[n,f] + b[o].
Tensor Dense(const Tensor& input, const Tensor& weights, const Tensor* bias,
             bool fused_relu = false, MathMode mode = {},
             Backend backend = Backend::kReference);

// a [B,M,K], b [B,K,N] -> [B,M,N], summing over K in ascending order.
Tensor BatchMatmul(const Tensor& a, const Tensor& b, MathMode mode = {},
                   Backend backend = Backend::kReference);

Tensor Relu(const Tensor& input);

// Softmax over the last axis.
Tensor Softmax(const Tensor& input, MathMode mode = {});

// Elementwise sum. `b` is either the same shape as `a` or equals its
// trailing dimensions and is broadcast.
Tensor Add(const Tensor& a, const Tensor& b);

Tensor MaxPool(const Tensor& input, const PoolOptions& options);
// Averages over in-bounds taps only.
Tensor AvgPool(const Tensor& input, const PoolOptions& options);
// [N,C,H,W] -> [N,C].
Tensor GlobalAvgPool(const Tensor& input);

// Per-channel (axis 1) normalization:
//   y = (x - mean) / sqrt(variance + epsilon) * gamma + beta.
// Throws InvalidEpsilon when epsilon < 0 or variance + epsilon <= 0.
Tensor BatchNorm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                 const Tensor& mean, const Tensor& variance, float epsilon);

Tensor Reshape(const Tensor& input, const Shape& target);
Tensor Concat(std::span<const Tensor* const> inputs, int64_t axis);

// Channel range [begin, begin + count) along axis 1.
Tensor SliceChannels(const Tensor& input, int64_t begin, int64_t count);

// Range-reduced degree-6 polynomial approximation of exp for x <= 0.
float FastExp(float x);

}  // namespace kernels
}  // namespace deltadiff

#endif  // DELTADIFF_KERNELS_H_
