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

#include "deltadiff/desk_models.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "deltadiff/counter_rng.h"
#include "deltadiff/errors.h"
#include "deltadiff/executor.h"
#include "deltadiff/graph_builder.h"
#include "deltadiff/interpreter.h"

namespace deltadiff {
namespace {

constexpr int64_t kImageSize = 16;
constexpr double kNarrowWeightStddev = 0.02;
// Logit spread of the fitted classifier heads.
constexpr double kHeadLogitScale = 4.0;
constexpr int kCalibrationImages = 128;

class ParamFactory {
 public:
  ParamFactory(std::string model, uint64_t seed)
      : model_(std::move(model)), seed_(seed) {}

  Tensor Normal(const std::string& name, Shape shape, double stddev,
                double mean = 0.0) const {
    const CounterRng rng(seed_, model_ + "/" + name);
    Tensor t(std::move(shape));
    auto d = t.mutable_data();
    for (size_t i = 0; i < d.size(); ++i) {
      d[i] = static_cast<float>(mean + stddev * rng.Normal(i));
    }
    return t;
  }

  // He-style initialization scaled by `gain`.
  Tensor ConvWeight(const std::string& name, int64_t out, int64_t in,
                    int64_t k, double gain = 1.0) const {
    const double fan_in = static_cast<double>(in * k * k);
    return Normal(name + ".weight", {out, in, k, k},
                  gain * std::sqrt(2.0 / fan_in));
  }

  // Small fixed-scale weights for convolutions followed by batchnorm; the
  // calibrated batchnorm restores the activation scale, as in trained nets.
  Tensor NarrowConvWeight(const std::string& name, int64_t out, int64_t in,
                          int64_t k) const {
    return Normal(name + ".weight", {out, in, k, k}, kNarrowWeightStddev);
  }

  Tensor Bias(const std::string& name, int64_t n, double stddev = 0.05) const {
    return Normal(name + ".bias", {n}, stddev);
  }

 private:
  std::string model_;
  uint64_t seed_;
};

std::vector<std::string> ClassLabels() {
  return {"tench",  "goldfish", "walker_hound", "tabby",     "macaw",
          "lorikeet", "beagle", "french_loaf", "trolleybus", "daisy"};
}

ValueRef ConvBnRelu(GraphBuilder& b, const ParamFactory& pf, ValueRef in,
                    const std::string& name, int64_t cin, int64_t cout,
                    int64_t k, Stride2D stride, bool relu = true,
                    bool narrow = true) {
  Tensor w = narrow ? pf.NarrowConvWeight(name, cout, cin, k)
                    : pf.ConvWeight(name, cout, cin, k);
  ValueRef x = b.Conv2D(std::move(in), name, std::move(w),
                        pf.Bias(name, cout, narrow ? 0.01 : 0.05), stride,
                        Padding::kSame);
  const std::string bn = name + "_bn";
  x = b.BatchNorm(x, bn, pf.Normal(bn + ".gamma", {cout}, 0.1, 1.0),
                  pf.Normal(bn + ".beta", {cout}, 0.1),
                  pf.Normal(bn + ".mean", {cout}, 0.1),
                  Tensor::Filled({cout}, 1.0f), 1e-3f);
  if (relu) x = b.Relu(x);
  return x;
}

ValueRef ConvRelu(GraphBuilder& b, const ParamFactory& pf, ValueRef in,
                  const std::string& name, int64_t cin, int64_t cout,
                  int64_t k) {
  ValueRef x = b.Conv2D(std::move(in), name, pf.ConvWeight(name, cout, cin, k),
                        pf.Bias(name, cout), {1, 1}, Padding::kSame);
  return b.Relu(x);
}

ValueRef DenseHead(GraphBuilder& b, const ParamFactory& pf, ValueRef features,
                   int64_t width) {
  return b.Dense(std::move(features), "fc",
                 pf.Normal("fc.weight", {kDeskClasses, width},
                           std::sqrt(2.0 / static_cast<double>(width))),
                 pf.Bias("fc", kDeskClasses));
}

Corpus BuildClassImages(int count, uint64_t seed, const char* prefix) {
  const int64_t plane = kImageSize * kImageSize;
  // Each class prototype is a per-channel sum of a few low-frequency
  // gratings, so classes differ in structure that survives pooling.
  constexpr int kGratings = 3;
  std::vector<std::vector<double>> prototypes(kDeskClasses);
  for (int c = 0; c < kDeskClasses; ++c) {
    const CounterRng rng(seed, "desk-corpus/prototype/" + std::to_string(c));
    prototypes[c].assign(3 * plane, 0.0);
    uint64_t draw = 0;
    for (int ch = 0; ch < 3; ++ch) {
      const double offset = 0.8 * rng.Normal(draw++);
      for (int gi = 0; gi < kGratings; ++gi) {
        const double fy = std::floor(3.0 * rng.Uniform(draw++));
        const double fx = std::floor(3.0 * rng.Uniform(draw++));
        const double phase = 2.0 * M_PI * rng.Uniform(draw++);
        const double amp = rng.Normal(draw++);
        for (int64_t h = 0; h < kImageSize; ++h) {
          for (int64_t w = 0; w < kImageSize; ++w) {
            prototypes[c][ch * plane + h * kImageSize + w] +=
                offset / kGratings +
                amp * std::cos(2.0 * M_PI * (fy * h + fx * w) / kImageSize +
                               phase);
          }
        }
      }
    }
  }
  Corpus corpus;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "%s%03d", prefix, i);
    const int label = i % kDeskClasses;
    const CounterRng rng(seed, std::string("desk-corpus/image/") + id);
    Tensor raw({1, 3, kImageSize, kImageSize});
    auto d = raw.mutable_data();
    for (int64_t p = 0; p < 3 * plane; ++p) {
      const double v =
          0.5 + 0.06 * prototypes[label][p] + 0.15 * rng.Normal(p);
      d[p] = static_cast<float>(std::round(255.0 * std::clamp(v, 0.0, 1.0)));
    }
    corpus.images.push_back({id, std::move(raw), label});
  }
  return corpus;
}

// Calibration inputs under the default preprocessing.
std::vector<Tensor> CalibrationInputs(uint64_t seed) {
  const Corpus corpus = BuildClassImages(kCalibrationImages, seed, "cal_");
  std::vector<Tensor> inputs;
  for (const CorpusImage& image : corpus.images) {
    inputs.push_back(Preprocess(image.raw, PreprocessSpec{}));
  }
  return inputs;
}

// Activations of `ref` (a single-output node) over all inputs.
std::vector<Tensor> Collect(const ModelGraph& g, NodeId node,
                            const std::vector<Tensor>& inputs) {
  const ExecutionPlan plan(g, Backend::kReference);
  std::vector<Tensor> out;
  for (const Tensor& x : inputs) {
    std::vector<TraceEntry> trace;
    plan.RunSingle(x, &trace);
    for (TraceEntry& e : trace) {
      if (e.node == node) out.push_back(std::move(e.activation));
    }
  }
  return out;
}

// Sets running mean/variance of a batchnorm to the statistics of its input.
void CalibrateBatchNorm(ModelGraph& g, const Node& bn,
                        const std::vector<Tensor>& inputs) {
  const std::vector<Tensor> acts = Collect(g, bn.inputs[0].node, inputs);
  const int64_t channels = acts[0].dim(1);
  const int64_t plane = acts[0].size() / (acts[0].dim(0) * channels);
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  double count = 0.0;
  for (const Tensor& a : acts) {
    for (int64_t c = 0; c < channels; ++c) {
      for (int64_t i = 0; i < plane; ++i) {
        const double v = a[c * plane + i];
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    count += static_cast<double>(plane);
  }
  Tensor& mean = g.params.at(bn.params[2]);
  Tensor& var = g.params.at(bn.params[3]);
  for (int64_t c = 0; c < channels; ++c) {
    const double m = sum[c] / count;
    mean[c] = static_cast<float>(m);
    var[c] = static_cast<float>(std::max(sq[c] / count - m * m, 1e-6));
  }
}

// Fits the dense head as a nearest-class-centroid classifier over its input
// features, so predictions follow the corpus classes.
void FitHead(ModelGraph& g, const Node& fc, const std::vector<Tensor>& inputs,
             uint64_t seed) {
  const std::vector<Tensor> feats = Collect(g, fc.inputs[0].node, inputs);
  const Corpus corpus = BuildClassImages(kCalibrationImages, seed, "cal_");
  const int64_t width = feats[0].size();
  std::vector<std::vector<double>> centroid(kDeskClasses,
                                            std::vector<double>(width, 0.0));
  std::vector<double> overall(width, 0.0);
  std::vector<int> counts(kDeskClasses, 0);
  for (size_t i = 0; i < feats.size(); ++i) {
    const int64_t label = corpus.images[i].label;
    ++counts[label];
    for (int64_t j = 0; j < width; ++j) {
      centroid[label][j] += feats[i][j];
      overall[j] += feats[i][j] / static_cast<double>(feats.size());
    }
  }
  Tensor w({kDeskClasses, width});
  Tensor bias({kDeskClasses});
  std::vector<double> logits(feats.size() * kDeskClasses);
  for (int k = 0; k < kDeskClasses; ++k) {
    double half_norm = 0.0;
    for (int64_t j = 0; j < width; ++j) {
      const double d = centroid[k][j] / counts[k] - overall[j];
      w[k * width + j] = static_cast<float>(d);
      half_norm += d * (d / 2.0 + overall[j]);
    }
    bias[k] = static_cast<float>(-half_norm);
  }
  // Rescale so the logits have a fixed spread over the calibration set.
  double sum = 0.0, sq = 0.0;
  for (const Tensor& f : feats) {
    for (int k = 0; k < kDeskClasses; ++k) {
      double v = bias[k];
      for (int64_t j = 0; j < width; ++j) v += w[k * width + j] * f[j];
      sum += v;
      sq += v * v;
    }
  }
  const double n = static_cast<double>(feats.size() * kDeskClasses);
  const double spread = std::sqrt(std::max(sq / n - (sum / n) * (sum / n),
                                           1e-12));
  const double gain = kHeadLogitScale / spread;
  for (float& v : w.mutable_data()) v = static_cast<float>(v * gain);
  for (float& v : bias.mutable_data()) v = static_cast<float>(v * gain);
  g.params.at(fc.params[0]) = std::move(w);
  g.params.at(fc.params[1]) = std::move(bias);
}

// Replaces placeholder statistics with values measured on a calibration
// corpus: batchnorms (other than pure scale layers, which have epsilon 0)
// in topological order, then the dense head.
ModelGraph Calibrate(ModelGraph g, uint64_t seed) {
  const std::vector<Tensor> inputs = CalibrationInputs(seed);
  for (NodeId id : TopoSort(g)) {
    const Node node = g.GetNode(id);
    if (node.op == OpKind::kBatchNorm && node.attrs.epsilon > 0.0f) {
      CalibrateBatchNorm(g, node, inputs);
    }
  }
  for (NodeId id : TopoSort(g)) {
    const Node node = g.GetNode(id);
    if (node.op == OpKind::kDense) FitHead(g, node, inputs, seed);
  }
  Validate(g);
  return g;
}

ModelGraph BuildA(uint64_t seed) {
  const ParamFactory pf("tinynet-A", seed);
  GraphBuilder b(std::string(kTinyNetA), ClassLabels());
  ValueRef x = b.Input("input", {1, 3, kImageSize, kImageSize});
  x = ConvBnRelu(b, pf, x, "conv1", 3, 8, 3, {1, 1}, true, false);
  x = b.MaxPool(x, {2, 2}, {2, 2}, Padding::kValid);
  x = ConvBnRelu(b, pf, x, "conv2", 8, 16, 3, {1, 1});
  // Channel scale: a batchnorm with zero mean and shift is a pure
  // per-channel multiply.
  Tensor scale = pf.Normal("scale2.gamma", {16}, 0.1, 1.0);
  for (float& v : scale.mutable_data()) v = std::abs(v);
  x = b.BatchNorm(x, "scale2", std::move(scale), Tensor({16}),
                  Tensor({16}), Tensor::Filled({16}, 1.0f), 0.0f);
  x = b.MaxPool(x, {2, 2}, {2, 2}, Padding::kValid);
  x = ConvBnRelu(b, pf, x, "conv3", 16, 32, 3, {1, 1});
  x = b.GlobalAvgPool(x);
  x = b.Reshape(x, {1, 32});
  x = DenseHead(b, pf, x, 32);
  return Calibrate(b.Finish({b.Softmax(x)}), seed);
}

ModelGraph BuildB(uint64_t seed) {
  const ParamFactory pf("tinynet-B", seed);
  GraphBuilder b(std::string(kTinyNetB), ClassLabels());
  ValueRef x = b.Input("input", {1, 3, kImageSize, kImageSize});
  x = ConvRelu(b, pf, x, "stem", 3, 8, 3);
  x = b.MaxPool(x, {2, 2}, {2, 2}, Padding::kValid);

  ValueRef b1 = ConvRelu(b, pf, x, "branch1x1", 8, 4, 1);
  ValueRef b2 = ConvRelu(b, pf, x, "branch3x3_reduce", 8, 4, 1);
  b2 = ConvRelu(b, pf, b2, "branch3x3", 4, 6, 3);
  ValueRef b3 = ConvRelu(b, pf, x, "branch5x5_reduce", 8, 2, 1);
  b3 = ConvRelu(b, pf, b3, "branch5x5_a", 2, 4, 3);
  b3 = ConvRelu(b, pf, b3, "branch5x5_b", 4, 4, 3);
  ValueRef b4 = b.MaxPool(x, {3, 3}, {1, 1}, Padding::kSame);
  b4 = ConvRelu(b, pf, b4, "branch_pool", 8, 2, 1);
  // A second, identical pooling path as emitted by some exporters.
  ValueRef b5 = b.MaxPool(x, {3, 3}, {1, 1}, Padding::kSame);
  b5 = ConvRelu(b, pf, b5, "branch_pool_aux", 8, 2, 1);
  x = b.Concat({b1, b2, b3, b4, b5}, 1);

  const std::string bn = "mixed_bn";
  x = b.BatchNorm(x, bn, pf.Normal(bn + ".gamma", {18}, 0.1, 1.0),
                  pf.Normal(bn + ".beta", {18}, 0.1),
                  pf.Normal(bn + ".mean", {18}, 0.1),
                  Tensor::Filled({18}, 1.0f), 1e-3f);
  x = b.Relu(x);
  x = b.GlobalAvgPool(x);
  x = DenseHead(b, pf, x, 18);
  return Calibrate(b.Finish({b.Softmax(x)}), seed);
}

ModelGraph BuildC(uint64_t seed) {
  const ParamFactory pf("tinynet-C", seed);
  GraphBuilder b(std::string(kTinyNetC), ClassLabels());
  ValueRef x = b.Input("input", {1, 3, kImageSize, kImageSize});
  ValueRef prior_a = b.Constant("prior.base",
                                pf.Normal("prior.base", {1, 10}, 0.05));
  ValueRef prior_b = b.Constant("prior.adjust",
                                pf.Normal("prior.adjust", {1, 10}, 0.05));
  ValueRef prior = b.Add(prior_a, prior_b);

  x = ConvBnRelu(b, pf, x, "stem", 3, 8, 3, {1, 1}, true, false);

  ValueRef y = ConvBnRelu(b, pf, x, "block1_conv1", 8, 8, 3, {1, 1});
  y = ConvBnRelu(b, pf, y, "block1_conv2", 8, 8, 3, {1, 1}, false);
  x = b.Relu(b.Add(y, x));

  y = ConvBnRelu(b, pf, x, "block2_conv1", 8, 16, 3, {2, 2});
  y = ConvBnRelu(b, pf, y, "block2_conv2", 16, 16, 3, {1, 1}, false);
  ValueRef shortcut = ConvBnRelu(b, pf, x, "block2_proj", 8, 16, 1, {2, 2},
                                 false);
  x = b.Relu(b.Add(y, shortcut));

  x = b.GlobalAvgPool(x);
  x = DenseHead(b, pf, x, 16);
  x = b.Add(x, prior);
  return Calibrate(b.Finish({b.Softmax(x)}), seed);
}

}  // namespace

std::vector<std::string> DeskModelNames() {
  return {std::string(kTinyNetA), std::string(kTinyNetB),
          std::string(kTinyNetC)};
}

bool IsDeskModel(std::string_view name) {
  return name == kTinyNetA || name == kTinyNetB || name == kTinyNetC;
}

ModelGraph BuildDeskModel(std::string_view name, uint64_t seed) {
  if (name == kTinyNetA) return BuildA(seed);
  if (name == kTinyNetB) return BuildB(seed);
  if (name == kTinyNetC) return BuildC(seed);
  throw Error(ErrorCode::kConfigError,
              "unknown desk model '" + std::string(name) + "'");
}

Corpus BuildDeskCorpus(int count, uint64_t seed) {
  return BuildClassImages(count, seed, "img_");
}

}  // namespace deltadiff
