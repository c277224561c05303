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

// Naive reference kernels used as test oracles. Written directly from the
// operator definitions with plain loops and no shared code with the library
// kernels beyond the Tensor container. Not optimized, never to be.

#ifndef DELTADIFF_TESTS_ORACLE_NAIVE_KERNELS_H_
#define DELTADIFF_TESTS_ORACLE_NAIVE_KERNELS_H_

#include <cmath>
#include <cstdint>
#include <vector>

#include "deltadiff/tensor.h"

namespace deltadiff::oracle {

struct Window {
  int64_t out;
  int64_t pad;
};

// VALID: floor((n - k) / s) + 1, no padding. SAME: ceil(n / s) outputs with
// the total padding split evenly, any odd pixel going after.
inline Window Extent(int64_t n, int64_t k, int64_t s, bool same) {
  if (!same) return {(n - k) / s + 1, 0};
  const int64_t out = (n + s - 1) / s;
  int64_t total = (out - 1) * s + k - n;
  if (total < 0) total = 0;
  return {out, total / 2};
}

inline float At4(const Tensor& t, int64_t a, int64_t b, int64_t c, int64_t d) {
  const Shape& s = t.shape();
  return t[((a * s[1] + b) * s[2] + c) * s[3] + d];
}

inline float NaiveRelu(float v) { return v < 0.0f ? 0.0f : v; }

inline Tensor NaiveConv2D(const Tensor& x, const Tensor& w, const Tensor* b,
                          int64_t sh, int64_t sw, bool same,
                          bool relu = false) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t K = w.dim(0), R = w.dim(2), S = w.dim(3);
  const Window eh = Extent(H, R, sh, same), ew = Extent(W, S, sw, same);
  Tensor y({N, K, eh.out, ew.out});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t k = 0; k < K; ++k)
      for (int64_t oh = 0; oh < eh.out; ++oh)
        for (int64_t ow = 0; ow < ew.out; ++ow) {
          float acc = 0.0f;
          for (int64_t c = 0; c < C; ++c)
            for (int64_t r = 0; r < R; ++r)
              for (int64_t s = 0; s < S; ++s) {
                const int64_t ih = oh * sh + r - eh.pad;
                const int64_t iw = ow * sw + s - ew.pad;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += At4(x, n, c, ih, iw) * At4(w, k, c, r, s);
              }
          if (b) acc += (*b)[k];
          if (relu) acc = NaiveRelu(acc);
          y[((n * K + k) * eh.out + oh) * ew.out + ow] = acc;
        }
  return y;
}

inline Tensor NaiveDense(const Tensor& x, const Tensor& w, const Tensor* b,
                         bool relu = false) {
  const int64_t N = x.dim(0), F = x.dim(1), O = w.dim(0);
  Tensor y({N, O});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t o = 0; o < O; ++o) {
      float acc = 0.0f;
      for (int64_t f = 0; f < F; ++f) acc += w[o * F + f] * x[n * F + f];
      if (b) acc += (*b)[o];
      if (relu) acc = NaiveRelu(acc);
      y[n * O + o] = acc;
    }
  return y;
}

inline Tensor NaiveBatchMatmul(const Tensor& a, const Tensor& b) {
  const int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2), N = b.dim(2);
  Tensor y({B, M, N});
  for (int64_t t = 0; t < B; ++t)
    for (int64_t m = 0; m < M; ++m)
      for (int64_t n = 0; n < N; ++n) {
        float acc = 0.0f;
        for (int64_t k = 0; k < K; ++k)
          acc += a[(t * M + m) * K + k] * b[(t * K + k) * N + n];
        y[(t * M + m) * N + n] = acc;
      }
  return y;
}

inline Tensor NaiveRelu(const Tensor& x) {
  Tensor y = x;
  for (int64_t i = 0; i < y.size(); ++i) y[i] = NaiveRelu(x[i]);
  return y;
}

inline Tensor NaiveSoftmax(const Tensor& x) {
  const int64_t cols = x.shape().back();
  Tensor y = x;
  for (int64_t r = 0; r < x.size() / cols; ++r) {
    float m = x[r * cols];
    for (int64_t i = 1; i < cols; ++i) m = std::fmax(m, x[r * cols + i]);
    float sum = 0.0f;
    for (int64_t i = 0; i < cols; ++i) {
      y[r * cols + i] = std::exp(x[r * cols + i] - m);
      sum += y[r * cols + i];
    }
    for (int64_t i = 0; i < cols; ++i) y[r * cols + i] /= sum;
  }
  return y;
}

// b has a's shape or a's trailing dimensions.
inline Tensor NaiveAdd(const Tensor& a, const Tensor& b) {
  Tensor y = a;
  for (int64_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i % b.size()];
  return y;
}

inline Tensor NaivePool(const Tensor& x, int64_t wh, int64_t ww, int64_t sh,
                        int64_t sw, bool same, bool max) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const Window eh = Extent(H, wh, sh, same), ew = Extent(W, ww, sw, same);
  Tensor y({N, C, eh.out, ew.out});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oh = 0; oh < eh.out; ++oh)
        for (int64_t ow = 0; ow < ew.out; ++ow) {
          float best = -INFINITY, sum = 0.0f;
          int64_t taps = 0;
          for (int64_t r = 0; r < wh; ++r)
            for (int64_t s = 0; s < ww; ++s) {
              const int64_t ih = oh * sh + r - eh.pad;
              const int64_t iw = ow * sw + s - ew.pad;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              const float v = At4(x, n, c, ih, iw);
              if (v > best) best = v;
              sum += v;
              ++taps;
            }
          y[((n * C + c) * eh.out + oh) * ew.out + ow] =
              max ? best : sum / static_cast<float>(taps);
        }
  return y;
}

inline Tensor NaiveGlobalAvgPool(const Tensor& x) {
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor y({N, C});
  for (int64_t i = 0; i < N * C; ++i) {
    float sum = 0.0f;
    for (int64_t j = 0; j < HW; ++j) sum += x[i * HW + j];
    y[i] = sum / static_cast<float>(HW);
  }
  return y;
}

inline Tensor NaiveBatchNorm(const Tensor& x, const Tensor& gamma,
                             const Tensor& beta, const Tensor& mean,
                             const Tensor& var, float eps) {
  const int64_t C = x.dim(1);
  int64_t inner = 1;
  for (int64_t d = 2; d < x.rank(); ++d) inner *= x.dim(d);
  Tensor y = x;
  for (int64_t i = 0; i < x.size(); ++i) {
    const int64_t c = (i / inner) % C;
    y[i] = (x[i] - mean[c]) / std::sqrt(var[c] + eps) * gamma[c] + beta[c];
  }
  return y;
}

inline Tensor NaiveConcat(const std::vector<Tensor>& parts, int64_t axis) {
  Shape shape = parts[0].shape();
  shape[axis] = 0;
  for (const Tensor& p : parts) shape[axis] += p.dim(axis);
  Tensor y(shape);
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= shape[d];
  for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  int64_t o = 0;
  for (int64_t i = 0; i < outer; ++i)
    for (const Tensor& p : parts)
      for (int64_t j = 0; j < p.dim(axis) * inner; ++j)
        y[o++] = p[i * p.dim(axis) * inner + j];
  return y;
}

}  // namespace deltadiff::oracle

#endif  // DELTADIFF_TESTS_ORACLE_NAIVE_KERNELS_H_
