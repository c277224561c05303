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

#include <algorithm>
#include <cmath>
#include <limits>

#include "deltadiff/errors.h"
#include "deltadiff/kernels.h"
#include "kernels_internal.h"

namespace deltadiff {
namespace {

[[noreturn]] void Mismatch(const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

void CheckRank(const Shape& s, size_t rank, const char* what) {
  if (s.size() != rank) {
    Mismatch(std::string(what) + " expects rank " + std::to_string(rank) +
             ", got " + ShapeToString(s));
  }
}

void CheckStride(const Stride2D& stride) {
  if (stride.height < 1 || stride.width < 1) {
    throw Error(ErrorCode::kInvalidStride,
                "stride components must be >= 1, got (" +
                    std::to_string(stride.height) + "," +
                    std::to_string(stride.width) + ")");
  }
}

}  // namespace

AxisExtent ComputeAxisExtent(int64_t input, int64_t window, int64_t stride,
                             Padding padding) {
  if (stride < 1) {
    throw Error(ErrorCode::kInvalidStride, "stride must be >= 1");
  }
  if (window < 1) Mismatch("window extent must be >= 1");
  AxisExtent e;
  if (padding == Padding::kValid) {
    if (input < window) {
      Mismatch("window " + std::to_string(window) + " larger than input " +
               std::to_string(input) + " under VALID padding");
    }
    e.output = (input - window) / stride + 1;
    e.pad_before = 0;
  } else {
    e.output = (input + stride - 1) / stride;
    const int64_t total =
        std::max<int64_t>((e.output - 1) * stride + window - input, 0);
    e.pad_before = total / 2;
  }
  return e;
}

Shape Conv2DShape(const Shape& input, const Shape& weights, const Shape* bias,
                  const ConvOptions& options) {
  CheckStride(options.stride);
  CheckRank(input, 4, "conv2d input");
  CheckRank(weights, 4, "conv2d weights");
  if (input[1] != weights[1]) {
    Mismatch("conv2d channel mismatch: input " + ShapeToString(input) +
             " weights " + ShapeToString(weights));
  }
  if (bias != nullptr && (*bias != Shape{weights[0]})) {
    Mismatch("conv2d bias " + ShapeToString(*bias) + " for " +
             std::to_string(weights[0]) + " filters");
  }
  const AxisExtent h = ComputeAxisExtent(input[2], weights[2],
                                         options.stride.height, options.padding);
  const AxisExtent w = ComputeAxisExtent(input[3], weights[3],
                                         options.stride.width, options.padding);
  return {input[0], weights[0], h.output, w.output};
}

Shape DenseShape(const Shape& input, const Shape& weights, const Shape* bias) {
  CheckRank(input, 2, "dense input");
  CheckRank(weights, 2, "dense weights");
  if (input[1] != weights[1]) {
    Mismatch("dense feature mismatch: input " + ShapeToString(input) +
             " weights " + ShapeToString(weights));
  }
  if (bias != nullptr && (*bias != Shape{weights[0]})) {
    Mismatch("dense bias " + ShapeToString(*bias));
  }
  return {input[0], weights[0]};
}

Shape BatchMatmulShape(const Shape& a, const Shape& b) {
  CheckRank(a, 3, "batch_matmul lhs");
  CheckRank(b, 3, "batch_matmul rhs");
  if (a[0] != b[0] || a[2] != b[1]) {
    Mismatch("batch_matmul operands " + ShapeToString(a) + " x " +
             ShapeToString(b));
  }
  return {a[0], a[1], b[2]};
}

Shape PoolShape(const Shape& input, const PoolOptions& options) {
  CheckStride(options.stride);
  CheckRank(input, 4, "pool input");
  const AxisExtent h = ComputeAxisExtent(input[2], options.window.height,
                                         options.stride.height, options.padding);
  const AxisExtent w = ComputeAxisExtent(input[3], options.window.width,
                                         options.stride.width, options.padding);
  return {input[0], input[1], h.output, w.output};
}

Shape GlobalAvgPoolShape(const Shape& input) {
  CheckRank(input, 4, "global_avg_pool input");
  return {input[0], input[1]};
}

Shape AddShape(const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (b.size() < a.size() &&
      std::equal(b.begin(), b.end(), a.end() - static_cast<int64_t>(b.size()))) {
    return a;
  }
  Mismatch("add operands " + ShapeToString(a) + " and " + ShapeToString(b));
}

Shape BatchNormShape(const Shape& input, const Shape& gamma, const Shape& beta,
                     const Shape& mean, const Shape& variance) {
  if (input.size() < 2) Mismatch("batchnorm input must have rank >= 2");
  const Shape channels{input[1]};
  if (gamma != channels || beta != channels || mean != channels ||
      variance != channels) {
    Mismatch("batchnorm parameters must all be " + ShapeToString(channels));
  }
  return input;
}

Shape ReshapeShape(const Shape& input, const Shape& target) {
  if (target.empty() || NumElements(input) != NumElements(target) ||
      std::any_of(target.begin(), target.end(),
                  [](int64_t d) { return d < 1; })) {
    Mismatch("cannot reshape " + ShapeToString(input) + " to " +
             ShapeToString(target));
  }
  return target;
}

Shape ConcatShape(std::span<const Shape> inputs, int64_t axis) {
  if (inputs.empty()) Mismatch("concat needs at least one input");
  Shape out = inputs[0];
  if (axis < 0 || axis >= static_cast<int64_t>(out.size())) {
    Mismatch("concat axis " + std::to_string(axis) + " out of range");
  }
  for (size_t i = 1; i < inputs.size(); ++i) {
    const Shape& s = inputs[i];
    if (s.size() != out.size()) Mismatch("concat rank mismatch");
    for (size_t d = 0; d < s.size(); ++d) {
      if (static_cast<int64_t>(d) == axis) continue;
      if (s[d] != out[d]) {
        Mismatch("concat operands " + ShapeToString(inputs[0]) + " and " +
                 ShapeToString(s) + " differ off-axis");
      }
    }
    out[axis] += s[axis];
  }
  return out;
}

namespace kernels {

float FastExp(float x) {
  if (std::isnan(x)) return x;
  if (x < -104.0f) return 0.0f;
  if (x > 88.0f) return std::numeric_limits<float>::infinity();
  constexpr float kLog2e = 1.44269504088896341f;
  constexpr float kLn2Hi = 0.693145751953125f;
  constexpr float kLn2Lo = 1.42860682030941723e-06f;
  const float k = std::nearbyint(x * kLog2e);
  const float r = (x - k * kLn2Hi) - k * kLn2Lo;
  float p = 1.0f / 720.0f;
  p = p * r + 1.0f / 120.0f;
  p = p * r + 1.0f / 24.0f;
  p = p * r + 1.0f / 6.0f;
  p = p * r + 0.5f;
  p = p * r + 1.0f;
  p = p * r + 1.0f;
  return std::ldexp(p, static_cast<int>(k));
}

Tensor Conv2D(const Tensor& input, const Tensor& weights, const Tensor* bias,
              const ConvOptions& options, Backend backend) {
  const Shape bias_shape = bias != nullptr ? bias->shape() : Shape{};
  const Shape out_shape = Conv2DShape(input.shape(), weights.shape(),
                                      bias != nullptr ? &bias_shape : nullptr,
                                      options);
  if (backend == Backend::kOptimizedLayout) {
    return internal::Conv2DBlocked(input, weights, bias, options, out_shape);
  }
  const int64_t n_batch = input.dim(0), channels = input.dim(1);
  const int64_t in_h = input.dim(2), in_w = input.dim(3);
  const int64_t filters = weights.dim(0), kh = weights.dim(2),
                kw = weights.dim(3);
  const int64_t pad_h =
      ComputeAxisExtent(in_h, kh, options.stride.height, options.padding)
          .pad_before;
  const int64_t pad_w =
      ComputeAxisExtent(in_w, kw, options.stride.width, options.padding)
          .pad_before;
  Tensor out(out_shape);
  const auto x = input.data();
  const auto w = weights.data();
  auto y = out.mutable_data();
  int64_t o = 0;
  for (int64_t n = 0; n < n_batch; ++n) {
    for (int64_t k = 0; k < filters; ++k) {
      for (int64_t oh = 0; oh < out_shape[2]; ++oh) {
        for (int64_t ow = 0; ow < out_shape[3]; ++ow) {
          float acc = 0.0f;
          for (int64_t c = 0; c < channels; ++c) {
            for (int64_t r = 0; r < kh; ++r) {
              const int64_t ih = oh * options.stride.height - pad_h + r;
              if (ih < 0 || ih >= in_h) continue;
              for (int64_t s = 0; s < kw; ++s) {
                const int64_t iw = ow * options.stride.width - pad_w + s;
                if (iw < 0 || iw >= in_w) continue;
                acc += x[((n * channels + c) * in_h + ih) * in_w + iw] *
                       w[((k * channels + c) * kh + r) * kw + s];
              }
            }
          }
          if (bias != nullptr) acc += (*bias)[k];
          if (options.fused_relu) acc = internal::ReluScalar(acc);
          y[o++] = acc;
        }
      }
    }
  }
  return out;
}

Tensor Dense(const Tensor& input, const Tensor& weights, const Tensor* bias,
             bool fused_relu, MathMode mode, Backend backend) {
  const Shape bias_shape = bias != nullptr ? bias->shape() : Shape{};
  const Shape out_shape = DenseShape(
      input.shape(), weights.shape(), bias != nullptr ? &bias_shape : nullptr);
  if (backend == Backend::kOptimizedLayout) {
    return internal::DenseBlocked(input, weights, bias, fused_relu, mode,
                                  out_shape);
  }
  const int64_t rows = input.dim(0), features = input.dim(1),
                outputs = weights.dim(0);
  Tensor out(out_shape);
  const auto x = input.data();
  const auto w = weights.data();
  auto y = out.mutable_data();
  for (int64_t n = 0; n < rows; ++n) {
    for (int64_t o = 0; o < outputs; ++o) {
      const float* xr = x.data() + n * features;
      const float* wr = w.data() + o * features;
      float acc;
      if (mode.fast_math) {
        float partial[internal::kPartialSums] = {};
        for (int64_t f = 0; f < features; ++f) {
          partial[f % internal::kPartialSums] += wr[f] * xr[f];
        }
        acc = internal::CombinePartials(partial);
      } else {
        acc = 0.0f;
        for (int64_t f = 0; f < features; ++f) acc += wr[f] * xr[f];
      }
      if (bias != nullptr) acc += (*bias)[o];
      if (fused_relu) acc = internal::ReluScalar(acc);
      y[n * outputs + o] = acc;
    }
  }
  return out;
}

Tensor BatchMatmul(const Tensor& a, const Tensor& b, MathMode mode,
                   Backend backend) {
  const Shape out_shape = BatchMatmulShape(a.shape(), b.shape());
  if (backend == Backend::kOptimizedLayout) {
    return internal::BatchMatmulBlocked(a, b, mode, out_shape);
  }
  const int64_t batches = a.dim(0), m_dim = a.dim(1), k_dim = a.dim(2),
                n_dim = b.dim(2);
  Tensor out(out_shape);
  const auto av = a.data();
  const auto bv = b.data();
  auto y = out.mutable_data();
  for (int64_t bt = 0; bt < batches; ++bt) {
    for (int64_t m = 0; m < m_dim; ++m) {
      for (int64_t n = 0; n < n_dim; ++n) {
        const float* arow = av.data() + (bt * m_dim + m) * k_dim;
        const float* bcol = bv.data() + bt * k_dim * n_dim + n;
        float acc;
        if (mode.fast_math) {
          float partial[internal::kPartialSums] = {};
          for (int64_t k = 0; k < k_dim; ++k) {
            partial[k % internal::kPartialSums] += arow[k] * bcol[k * n_dim];
          }
          acc = internal::CombinePartials(partial);
        } else {
          acc = 0.0f;
          for (int64_t k = 0; k < k_dim; ++k) acc += arow[k] * bcol[k * n_dim];
        }
        y[(bt * m_dim + m) * n_dim + n] = acc;
      }
    }
  }
  return out;
}

Tensor Relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.mutable_data()) v = internal::ReluScalar(v);
  return out;
}

Tensor Softmax(const Tensor& input, MathMode mode) {
  Tensor out = input;
  const int64_t cols = input.shape().back();
  const int64_t rows = input.size() / cols;
  auto y = out.mutable_data();
  for (int64_t r = 0; r < rows; ++r) {
    float* row = y.data() + r * cols;
    float m = row[0];
    for (int64_t i = 1; i < cols; ++i) {
      if (row[i] > m || std::isnan(row[i])) m = row[i];
    }
    float sum = 0.0f;
    for (int64_t i = 0; i < cols; ++i) {
      row[i] = mode.fast_math ? FastExp(row[i] - m) : std::exp(row[i] - m);
      sum += row[i];
    }
    for (int64_t i = 0; i < cols; ++i) row[i] = row[i] / sum;
  }
  return out;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  AddShape(a.shape(), b.shape());
  Tensor out = a;
  auto y = out.mutable_data();
  const auto bv = b.data();
  const int64_t period = b.size();
  for (int64_t i = 0; i < out.size(); ++i) y[i] = y[i] + bv[i % period];
  return out;
}

Tensor MaxPool(const Tensor& input, const PoolOptions& options) {
  const Shape out_shape = PoolShape(input.shape(), options);
  const int64_t in_h = input.dim(2), in_w = input.dim(3);
  const int64_t pad_h = ComputeAxisExtent(in_h, options.window.height,
                                          options.stride.height,
                                          options.padding)
                            .pad_before;
  const int64_t pad_w = ComputeAxisExtent(in_w, options.window.width,
                                          options.stride.width,
                                          options.padding)
                            .pad_before;
  Tensor out(out_shape);
  auto y = out.mutable_data();
  int64_t o = 0;
  for (int64_t n = 0; n < out_shape[0]; ++n) {
    for (int64_t c = 0; c < out_shape[1]; ++c) {
      for (int64_t oh = 0; oh < out_shape[2]; ++oh) {
        for (int64_t ow = 0; ow < out_shape[3]; ++ow) {
          bool seen = false;
          float m = 0.0f;
          for (int64_t r = 0; r < options.window.height; ++r) {
            const int64_t ih = oh * options.stride.height - pad_h + r;
            if (ih < 0 || ih >= in_h) continue;
            for (int64_t s = 0; s < options.window.width; ++s) {
              const int64_t iw = ow * options.stride.width - pad_w + s;
              if (iw < 0 || iw >= in_w) continue;
              const float v = input[input.Offset4(n, c, ih, iw)];
              if (!seen || v > m || std::isnan(v)) m = v;
              seen = true;
            }
          }
          y[o++] = m;
        }
      }
    }
  }
  return out;
}

Tensor AvgPool(const Tensor& input, const PoolOptions& options) {
  const Shape out_shape = PoolShape(input.shape(), options);
  const int64_t in_h = input.dim(2), in_w = input.dim(3);
  const int64_t pad_h = ComputeAxisExtent(in_h, options.window.height,
                                          options.stride.height,
                                          options.padding)
                            .pad_before;
  const int64_t pad_w = ComputeAxisExtent(in_w, options.window.width,
                                          options.stride.width,
                                          options.padding)
                            .pad_before;
  Tensor out(out_shape);
  auto y = out.mutable_data();
  int64_t o = 0;
  for (int64_t n = 0; n < out_shape[0]; ++n) {
    for (int64_t c = 0; c < out_shape[1]; ++c) {
      for (int64_t oh = 0; oh < out_shape[2]; ++oh) {
        for (int64_t ow = 0; ow < out_shape[3]; ++ow) {
          float acc = 0.0f;
          int64_t count = 0;
          for (int64_t r = 0; r < options.window.height; ++r) {
            const int64_t ih = oh * options.stride.height - pad_h + r;
            if (ih < 0 || ih >= in_h) continue;
            for (int64_t s = 0; s < options.window.width; ++s) {
              const int64_t iw = ow * options.stride.width - pad_w + s;
              if (iw < 0 || iw >= in_w) continue;
              acc += input[input.Offset4(n, c, ih, iw)];
              ++count;
            }
          }
          y[o++] = acc / static_cast<float>(count);
        }
      }
    }
  }
  return out;
}

Tensor GlobalAvgPool(const Tensor& input) {
  const Shape out_shape = GlobalAvgPoolShape(input.shape());
  const int64_t plane = input.dim(2) * input.dim(3);
  Tensor out(out_shape);
  const auto x = input.data();
  auto y = out.mutable_data();
  for (int64_t i = 0; i < out.size(); ++i) {
    float acc = 0.0f;
    for (int64_t j = 0; j < plane; ++j) acc += x[i * plane + j];
    y[i] = acc / static_cast<float>(plane);
  }
  return out;
}

Tensor BatchNorm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                 const Tensor& mean, const Tensor& variance, float epsilon) {
  BatchNormShape(input.shape(), gamma.shape(), beta.shape(), mean.shape(),
                 variance.shape());
  if (!(epsilon >= 0.0f)) {
    throw Error(ErrorCode::kInvalidEpsilon,
                "batchnorm epsilon must be >= 0, got " + std::to_string(epsilon));
  }
  const int64_t channels = input.dim(1);
  std::vector<float> denom(channels);
  for (int64_t c = 0; c < channels; ++c) {
    const float v = variance[c] + epsilon;
    if (!(v > 0.0f)) {
      throw Error(ErrorCode::kInvalidEpsilon,
                  "variance + epsilon must be positive for channel " +
                      std::to_string(c));
    }
    denom[c] = std::sqrt(v);
  }
  int64_t inner = 1;
  for (int64_t d = 2; d < input.rank(); ++d) inner *= input.dim(d);
  Tensor out = input;
  auto y = out.mutable_data();
  for (int64_t i = 0; i < out.size(); ++i) {
    const int64_t c = (i / inner) % channels;
    y[i] = (y[i] - mean[c]) / denom[c] * gamma[c] + beta[c];
  }
  return out;
}

Tensor Reshape(const Tensor& input, const Shape& target) {
  return input.Reshaped(ReshapeShape(input.shape(), target));
}

Tensor Concat(std::span<const Tensor* const> inputs, int64_t axis) {
  std::vector<Shape> shapes;
  shapes.reserve(inputs.size());
  for (const Tensor* t : inputs) shapes.push_back(t->shape());
  const Shape out_shape = ConcatShape(shapes, axis);
  int64_t outer = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= out_shape[d];
  int64_t inner = 1;
  for (size_t d = axis + 1; d < out_shape.size(); ++d) inner *= out_shape[d];
  Tensor out(out_shape);
  auto y = out.mutable_data();
  int64_t o = 0;
  for (int64_t i = 0; i < outer; ++i) {
    for (const Tensor* t : inputs) {
      const int64_t chunk = t->dim(axis) * inner;
      const auto x = t->data();
      std::copy_n(x.begin() + i * chunk, chunk, y.begin() + o);
      o += chunk;
    }
  }
  return out;
}

Tensor SliceChannels(const Tensor& input, int64_t begin, int64_t count) {
  if (input.rank() < 2 || begin < 0 || count < 1 ||
      begin + count > input.dim(1)) {
    Mismatch("channel slice [" + std::to_string(begin) + ", +" +
             std::to_string(count) + ") of " + ShapeToString(input.shape()));
  }
  Shape out_shape = input.shape();
  out_shape[1] = count;
  int64_t inner = 1;
  for (int64_t d = 2; d < input.rank(); ++d) inner *= input.dim(d);
  Tensor out(out_shape);
  auto y = out.mutable_data();
  const auto x = input.data();
  for (int64_t n = 0; n < input.dim(0); ++n) {
    std::copy_n(x.begin() + (n * input.dim(1) + begin) * inner, count * inner,
                y.begin() + n * count * inner);
  }
  return out;
}

}  // namespace kernels
}  // namespace deltadiff
