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

#ifndef DELTADIFF_SRC_KERNELS_INTERNAL_H_
#define DELTADIFF_SRC_KERNELS_INTERNAL_H_

#include "deltadiff/kernels.h"

namespace deltadiff::kernels::internal {

inline constexpr int kPartialSums = 4;

// Keeps NaN and -0.0 as they are.
inline float ReluScalar(float v) { return v < 0.0f ? 0.0f : v; }

inline float CombinePartials(const float (&p)[kPartialSums]) {
  return (p[0] + p[1]) + (p[2] + p[3]);
}

Tensor Conv2DBlocked(const Tensor& input, const Tensor& weights,
                     const Tensor* bias, const ConvOptions& options,
                     const Shape& out_shape);
Tensor DenseBlocked(const Tensor& input, const Tensor& weights,
                    const Tensor* bias, bool fused_relu, MathMode mode,
                    const Shape& out_shape);
Tensor BatchMatmulBlocked(const Tensor& a, const Tensor& b, MathMode mode,
                          const Shape& out_shape);

}  // namespace deltadiff::kernels::internal

#endif  // DELTADIFF_SRC_KERNELS_INTERNAL_H_
