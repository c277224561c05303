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

// Loop orders that stream over contiguous output rows. Every output element
// still sees its terms in the reference order, which is what keeps the two
// backends bit-identical.

#include <algorithm>
#include <vector>

#include "kernels_internal.h"

namespace deltadiff::kernels::internal {
namespace {

// Output columns [lo, hi) whose input column ow*stride - pad + s is in
// bounds.
void ValidRange(int64_t out_len, int64_t in_len, int64_t stride, int64_t pad,
                int64_t tap, int64_t* lo, int64_t* hi) {
  // ow*stride + (tap - pad) >= 0  and  < in_len
  const int64_t shift = tap - pad;
  int64_t first = 0;
  if (shift < 0) first = (-shift + stride - 1) / stride;
  int64_t last = out_len;
  if (in_len - shift <= 0) {
    last = 0;
  } else {
    last = std::min(out_len, (in_len - shift - 1) / stride + 1);
  }
  *lo = first;
  *hi = std::max(first, last);
}

}  // namespace

Tensor Conv2DBlocked(const Tensor& input, const Tensor& weights,
                     const Tensor* bias, const ConvOptions& options,
                     const Shape& out_shape) {
  const int64_t n_batch = input.dim(0), channels = input.dim(1);
  const int64_t in_h = input.dim(2), in_w = input.dim(3);
  const int64_t filters = weights.dim(0), kh = weights.dim(2),
                kw = weights.dim(3);
  const int64_t out_h = out_shape[2], out_w = out_shape[3];
  const int64_t sh = options.stride.height, sw = options.stride.width;
  const int64_t pad_h =
      ComputeAxisExtent(in_h, kh, sh, options.padding).pad_before;
  const int64_t pad_w =
      ComputeAxisExtent(in_w, kw, sw, options.padding).pad_before;

  // Column bounds depend only on the tap, so compute them once.
  std::vector<int64_t> col_lo(kw), col_hi(kw);
  for (int64_t s = 0; s < kw; ++s) {
    ValidRange(out_w, in_w, sw, pad_w, s, &col_lo[s], &col_hi[s]);
  }

  Tensor out(out_shape);
  const float* x = input.data().data();
  const float* w = weights.data().data();
  float* y = out.mutable_data().data();
  const int64_t plane = out_h * out_w;
  for (int64_t n = 0; n < n_batch; ++n) {
    for (int64_t k = 0; k < filters; ++k) {
      float* acc = y + (n * filters + k) * plane;
      std::fill(acc, acc + plane, 0.0f);
      for (int64_t c = 0; c < channels; ++c) {
        const float* xc = x + (n * channels + c) * in_h * in_w;
        const float* wc = w + (k * channels + c) * kh * kw;
        for (int64_t r = 0; r < kh; ++r) {
          for (int64_t s = 0; s < kw; ++s) {
            const float tap = wc[r * kw + s];
            const int64_t lo = col_lo[s], hi = col_hi[s];
            for (int64_t oh = 0; oh < out_h; ++oh) {
              const int64_t ih = oh * sh - pad_h + r;
              if (ih < 0 || ih >= in_h) continue;
              const int64_t base = ih * in_w + s - pad_w;
              float* arow = acc + oh * out_w;
              for (int64_t ow = lo; ow < hi; ++ow) {
                arow[ow] += xc[base + ow * sw] * tap;
              }
            }
          }
        }
      }
      if (bias != nullptr) {
        const float b = (*bias)[k];
        for (int64_t i = 0; i < plane; ++i) acc[i] += b;
      }
      if (options.fused_relu) {
        for (int64_t i = 0; i < plane; ++i) acc[i] = ReluScalar(acc[i]);
      }
    }
  }
  return out;
}

Tensor DenseBlocked(const Tensor& input, const Tensor& weights,
                    const Tensor* bias, bool fused_relu, MathMode mode,
                    const Shape& out_shape) {
  constexpr int64_t kBlock = 4;
  const int64_t rows = input.dim(0), features = input.dim(1),
                outputs = weights.dim(0);
  Tensor out(out_shape);
  const float* x = input.data().data();
  const float* w = weights.data().data();
  float* y = out.mutable_data().data();
  for (int64_t n = 0; n < rows; ++n) {
    const float* xr = x + n * features;
    for (int64_t o0 = 0; o0 < outputs; o0 += kBlock) {
      const int64_t width = std::min(kBlock, outputs - o0);
      // partial[j][p]: output o0 + j, partial sum p.
      float partial[kBlock][kPartialSums] = {};
      for (int64_t f = 0; f < features; ++f) {
        const float xv = xr[f];
        const int p = mode.fast_math ? static_cast<int>(f % kPartialSums) : 0;
        for (int64_t j = 0; j < width; ++j) {
          partial[j][p] += w[(o0 + j) * features + f] * xv;
        }
      }
      for (int64_t j = 0; j < width; ++j) {
        float acc =
            mode.fast_math ? CombinePartials(partial[j]) : partial[j][0];
        if (bias != nullptr) acc += (*bias)[o0 + j];
        if (fused_relu) acc = ReluScalar(acc);
        y[n * outputs + o0 + j] = acc;
      }
    }
  }
  return out;
}

Tensor BatchMatmulBlocked(const Tensor& a, const Tensor& b, MathMode mode,
                          const Shape& out_shape) {
  const int64_t batches = a.dim(0), m_dim = a.dim(1), k_dim = a.dim(2),
                n_dim = b.dim(2);
  Tensor out(out_shape);
  const float* av = a.data().data();
  const float* bv = b.data().data();
  float* y = out.mutable_data().data();
  const int parts = mode.fast_math ? kPartialSums : 1;
  std::vector<float> rows(static_cast<size_t>(parts * n_dim));
  for (int64_t bt = 0; bt < batches; ++bt) {
    for (int64_t m = 0; m < m_dim; ++m) {
      std::fill(rows.begin(), rows.end(), 0.0f);
      const float* arow = av + (bt * m_dim + m) * k_dim;
      for (int64_t k = 0; k < k_dim; ++k) {
        const float aval = arow[k];
        const float* brow = bv + (bt * k_dim + k) * n_dim;
        float* acc = rows.data() + (k % parts) * n_dim;
        for (int64_t n = 0; n < n_dim; ++n) acc[n] += aval * brow[n];
      }
      float* yrow = y + (bt * m_dim + m) * n_dim;
      for (int64_t n = 0; n < n_dim; ++n) {
        if (mode.fast_math) {
          const float p[kPartialSums] = {rows[n], rows[n_dim + n],
                                         rows[2 * n_dim + n],
                                         rows[3 * n_dim + n]};
          yrow[n] = CombinePartials(p);
        } else {
          yrow[n] = rows[n];
        }
      }
    }
  }
  return out;
}

}  // namespace deltadiff::kernels::internal
