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

#include "deltadiff/optimizer.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "deltadiff/errors.h"
#include "deltadiff/interpreter.h"

namespace deltadiff {
namespace {

constexpr std::array<std::pair<PassId, std::string_view>, 8> kPassNames = {{
    {PassId::kSimplifyInference, "simplify_inference"},
    {PassId::kFuseOps, "fuse_ops"},
    {PassId::kFoldConstants, "fold_constants"},
    {PassId::kFoldScaleAxis, "fold_scale_axis"},
    {PassId::kEliminateCommonSubexpr, "eliminate_common_subexpr"},
    {PassId::kCanonicalizeOps, "canonicalize_ops"},
    {PassId::kCombineParallelOps, "combine_parallel_ops"},
    {PassId::kFastMath, "fast_math"},
}};

// The node reading `ref`, if `ref` has exactly one use and that use is a
// node input rather than a graph output.
Node* SoleConsumer(ModelGraph& g, const ValueRef& ref) {
  if (CountUses(g, ref) != 1) return nullptr;
  for (Node& n : g.nodes) {
    if (std::find(n.inputs.begin(), n.inputs.end(), ref) != n.inputs.end()) {
      return &n;
    }
  }
  return nullptr;
}

Node* ProducerOf(ModelGraph& g, const ValueRef& ref) {
  return ref.is_graph_input() ? nullptr : g.FindNode(ref.node);
}

bool SingleOutput(const Node& n) { return n.attrs.splits.empty(); }

// Runs `rewrite` until it reports no change, pruning after each rewrite so
// use counts never see dead nodes.
void RunToFixpoint(ModelGraph& g, const std::function<bool(ModelGraph&)>& rewrite) {
  while (rewrite(g)) Prune(g);
}

// Rescales output channel k of a conv/dense producer:
//   w'[k] = w[k] * scale[k],  b'[k] = (b[k] - mean[k]) * scale[k] + shift[k].
// A bias is materialized unless the producer had none and the result would
// be all zero.
void RescaleProducer(ModelGraph& g, Node& producer,
                     const std::vector<double>& scale,
                     const std::vector<double>& mean,
                     const std::vector<double>& shift,
                     const std::string& suffix) {
  const Tensor& w = g.Param(producer.params[0]);
  const int64_t channels = w.dim(0);
  const int64_t row = w.size() / channels;
  Tensor w_new = w;
  auto wd = w_new.mutable_data();
  for (int64_t k = 0; k < channels; ++k) {
    for (int64_t i = 0; i < row; ++i) {
      wd[k * row + i] =
          static_cast<float>(static_cast<double>(wd[k * row + i]) * scale[k]);
    }
  }
  std::vector<double> bias(channels, 0.0);
  if (producer.has_bias()) {
    const Tensor& b = g.Param(producer.params[1]);
    for (int64_t k = 0; k < channels; ++k) bias[k] = b[k];
  }
  Tensor b_new({channels});
  bool any_bias = producer.has_bias();
  for (int64_t k = 0; k < channels; ++k) {
    const double v = (bias[k] - mean[k]) * scale[k] + shift[k];
    b_new[k] = static_cast<float>(v);
    any_bias = any_bias || v != 0.0;
  }
  const std::string w_name = UniqueParamName(g, producer.params[0] + suffix);
  g.params.emplace(w_name, std::move(w_new));
  std::vector<std::string> params{w_name};
  if (any_bias) {
    const std::string base = producer.has_bias() ? producer.params[1]
                                                 : producer.params[0] + ".bias";
    const std::string b_name = UniqueParamName(g, base + suffix);
    g.params.emplace(b_name, std::move(b_new));
    params.push_back(b_name);
  }
  producer.params = std::move(params);
}

struct Affine {
  std::vector<double> scale;
  std::vector<double> mean;
  std::vector<double> beta;
  bool zero_shift = true;
  bool positive_scale = true;
};

Affine BatchNormAffine(const ModelGraph& g, const Node& bn) {
  const Tensor& gamma = g.Param(bn.params[0]);
  const Tensor& beta = g.Param(bn.params[1]);
  const Tensor& mean = g.Param(bn.params[2]);
  const Tensor& var = g.Param(bn.params[3]);
  Affine a;
  const int64_t c = gamma.size();
  a.scale.resize(c);
  a.mean.resize(c);
  a.beta.resize(c);
  for (int64_t i = 0; i < c; ++i) {
    const double denom = static_cast<double>(var[i]) + bn.attrs.epsilon;
    if (!(denom > 0.0)) {
      throw Error(ErrorCode::kInvalidEpsilon,
                  "variance + epsilon must be positive");
    }
    a.scale[i] = gamma[i] / std::sqrt(denom);
    a.mean[i] = mean[i];
    a.beta[i] = beta[i];
    if (a.beta[i] - a.mean[i] * a.scale[i] != 0.0) a.zero_shift = false;
    if (!(a.scale[i] > 0.0)) a.positive_scale = false;
  }
  return a;
}

bool FoldOneBatchNorm(ModelGraph& g) {
  for (Node& bn : g.nodes) {
    if (bn.op != OpKind::kBatchNorm) continue;
    Node* producer = ProducerOf(g, bn.inputs[0]);
    if (producer == nullptr || !SingleOutput(*producer) ||
        (producer->op != OpKind::kConv2D && producer->op != OpKind::kDense) ||
        SoleConsumer(g, bn.inputs[0]) != &bn) {
      continue;
    }
    const Affine a = BatchNormAffine(g, bn);
    RescaleProducer(g, *producer, a.scale, a.mean, a.beta, "@bn");
    const NodeId bn_id = bn.id;
    RedirectUses(g, ValueRef::Of(bn_id), ValueRef::Of(producer->id));
    RemoveNode(g, bn_id);
    return true;
  }
  return false;
}

bool SimplifyOneReshape(ModelGraph& g) {
  const ShapeMap shapes = InferShapes(g);
  for (Node& r : g.nodes) {
    if (r.op != OpKind::kReshape) continue;
    const ValueRef in = r.inputs[0];
    if (ValueShape(g, shapes, in) == r.attrs.shape) {
      const NodeId id = r.id;
      RedirectUses(g, ValueRef::Of(id), in);
      RemoveNode(g, id);
      return true;
    }
    const Node* producer = ProducerOf(g, in);
    if (producer != nullptr && producer->op == OpKind::kReshape) {
      r.inputs[0] = producer->inputs[0];
      return true;
    }
  }
  return false;
}

void SimplifyInference(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    return FoldOneBatchNorm(m) || SimplifyOneReshape(m);
  });
}

void FuseOps(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    for (Node& p : m.nodes) {
      if ((p.op != OpKind::kConv2D && p.op != OpKind::kDense) ||
          !SingleOutput(p)) {
        continue;
      }
      Node* relu = SoleConsumer(m, ValueRef::Of(p.id));
      if (relu == nullptr || relu->op != OpKind::kReLU) continue;
      p.op = p.op == OpKind::kConv2D ? OpKind::kFusedConvReLU
                                     : OpKind::kFusedDenseReLU;
      const NodeId relu_id = relu->id;
      RedirectUses(m, ValueRef::Of(relu_id), ValueRef::Of(p.id));
      RemoveNode(m, relu_id);
      return true;
    }
    return false;
  });
}

void FoldConstants(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    for (NodeId id : TopoSort(m)) {
      Node& n = *m.FindNode(id);
      if (n.op == OpKind::kConstant || n.inputs.empty() || !SingleOutput(n)) {
        continue;
      }
      const bool all_const = std::all_of(
          n.inputs.begin(), n.inputs.end(), [&](const ValueRef& r) {
            const Node* p = ProducerOf(m, r);
            return p != nullptr && p->op == OpKind::kConstant;
          });
      if (!all_const) continue;
      std::vector<Tensor> values;
      for (const ValueRef& r : n.inputs) {
        const Node& p = m.GetNode(r.node);
        values.push_back(m.Param(p.params[0]));
      }
      std::vector<const Tensor*> args;
      for (const Tensor& t : values) args.push_back(&t);
      Tensor folded = EvaluateNode(m, n, args, Backend::kReference);
      const std::string name =
          UniqueParamName(m, "folded." + std::to_string(n.id));
      m.params.emplace(name, std::move(folded));
      n.op = OpKind::kConstant;
      n.attrs = {};
      n.inputs.clear();
      n.params = {name};
      return true;
    }
    return false;
  });
}

void FoldScaleAxis(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    for (Node& bn : m.nodes) {
      if (bn.op != OpKind::kBatchNorm) continue;
      const Affine a = BatchNormAffine(m, bn);
      if (!a.zero_shift) continue;
      Node* p = ProducerOf(m, bn.inputs[0]);
      if (p == nullptr || !SingleOutput(*p) ||
          SoleConsumer(m, bn.inputs[0]) != &bn) {
        continue;
      }
      Node* target = nullptr;
      if (p->op == OpKind::kConv2D || p->op == OpKind::kDense) {
        target = p;
      } else if (a.positive_scale && IsFusedKind(p->op)) {
        target = p;
      } else if (a.positive_scale && p->op == OpKind::kReLU) {
        Node* q = ProducerOf(m, p->inputs[0]);
        if (q != nullptr && SingleOutput(*q) &&
            (q->op == OpKind::kConv2D || q->op == OpKind::kDense) &&
            SoleConsumer(m, p->inputs[0]) == p) {
          target = q;
        }
      }
      if (target == nullptr) continue;
      const std::vector<double> zeros(a.scale.size(), 0.0);
      RescaleProducer(m, *target, a.scale, zeros, zeros, "@scale");
      const NodeId bn_id = bn.id;
      RedirectUses(m, ValueRef::Of(bn_id), bn.inputs[0]);
      RemoveNode(m, bn_id);
      return true;
    }
    return false;
  });
}

std::string Signature(const Node& n) {
  std::ostringstream s;
  const NodeAttrs a = CanonicalAttrs(n.op, n.attrs);
  s << OpKindName(n.op) << "|" << a.stride.height << "," << a.stride.width
    << "|" << static_cast<int>(a.padding) << "|" << a.window.height << ","
    << a.window.width << "|" << std::bit_cast<uint32_t>(a.epsilon) << "|"
    << a.axis << "|" << ShapeToString(a.shape) << "|"
    << ShapeToString(a.splits) << "|";
  for (const std::string& p : n.params) s << p.size() << ":" << p << ";";
  s << "|";
  for (const ValueRef& r : n.inputs) s << ValueRefToString(r) << ";";
  return s.str();
}

void EliminateCommonSubexpr(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    std::map<std::string, NodeId> seen;
    for (NodeId id : TopoSort(m)) {
      const std::string sig = Signature(m.GetNode(id));
      auto [it, inserted] = seen.emplace(sig, id);
      if (inserted) continue;
      RedirectNode(m, id, it->second);
      RemoveNode(m, id);
      return true;
    }
    return false;
  });
}

bool CanonicalizeBatchMatmul(ModelGraph& m) {
  const ShapeMap shapes = InferShapes(m);
  for (Node& n : m.nodes) {
    if (n.op != OpKind::kBatchMatmul) continue;
    const Node* c = ProducerOf(m, n.inputs[1]);
    if (c == nullptr || c->op != OpKind::kConstant) continue;
    const Shape a_shape = ValueShape(m, shapes, n.inputs[0]);
    if (a_shape[0] != 1) continue;
    const Tensor& b = m.Param(c->params[0]);
    const int64_t k_dim = b.dim(1), n_dim = b.dim(2), m_dim = a_shape[1];
    Tensor w({n_dim, k_dim});
    for (int64_t k = 0; k < k_dim; ++k) {
      for (int64_t j = 0; j < n_dim; ++j) w[j * k_dim + k] = b[k * n_dim + j];
    }
    const std::string w_name = UniqueParamName(m, c->params[0] + "::dense");
    m.params.emplace(w_name, std::move(w));

    const NodeId dense_id = n.id;
    const NodeId in_reshape = m.NextId();
    const NodeId out_reshape = in_reshape + 1;
    Node pre;
    pre.id = in_reshape;
    pre.op = OpKind::kReshape;
    pre.attrs.shape = {m_dim, k_dim};
    pre.inputs = {n.inputs[0]};
    n.op = OpKind::kDense;
    n.inputs = {ValueRef::Of(in_reshape)};
    n.params = {w_name};
    n.attrs = {};
    RedirectUses(m, ValueRef::Of(dense_id), ValueRef::Of(out_reshape));
    Node post;
    post.id = out_reshape;
    post.op = OpKind::kReshape;
    post.attrs.shape = {1, m_dim, n_dim};
    post.inputs = {ValueRef::Of(dense_id)};
    m.nodes.push_back(std::move(pre));
    m.nodes.push_back(std::move(post));
    return true;
  }
  return false;
}

// Graph inputs order before node outputs; node outputs by (id, port).
bool OperandBefore(const ValueRef& a, const ValueRef& b) {
  if (a.is_graph_input() != b.is_graph_input()) return a.is_graph_input();
  if (a.is_graph_input()) return a.graph_input < b.graph_input;
  return std::tie(a.node, a.output) < std::tie(b.node, b.output);
}

bool CanonicalizeAddOrder(ModelGraph& m) {
  const ShapeMap shapes = InferShapes(m);
  for (Node& n : m.nodes) {
    if (n.op != OpKind::kAdd) continue;
    if (ValueShape(m, shapes, n.inputs[0]) !=
        ValueShape(m, shapes, n.inputs[1])) {
      continue;
    }
    if (OperandBefore(n.inputs[1], n.inputs[0])) {
      std::swap(n.inputs[0], n.inputs[1]);
      return true;
    }
  }
  return false;
}

void CanonicalizeOps(ModelGraph& g) {
  RunToFixpoint(g, [](ModelGraph& m) {
    return CanonicalizeBatchMatmul(m) || SimplifyOneReshape(m) ||
           CanonicalizeAddOrder(m);
  });
}

std::string CombineKey(const ModelGraph& g, const Node& n) {
  std::ostringstream s;
  const Shape& w = g.Param(n.params[0]).shape();
  s << ValueRefToString(n.inputs[0]) << "|" << OpKindName(n.op) << "|"
    << ShapeToString(Shape(w.begin() + 1, w.end())) << "|"
    << n.attrs.stride.height << "," << n.attrs.stride.width << "|"
    << static_cast<int>(n.attrs.padding) << "|" << n.has_bias();
  return s.str();
}

void CombineParallelOps(ModelGraph& g) {
  std::map<std::string, std::vector<NodeId>> groups;
  for (const Node& n : g.nodes) {
    if ((IsConvLike(n.op) || IsDenseLike(n.op)) && SingleOutput(n)) {
      groups[CombineKey(g, n)].push_back(n.id);
    }
  }
  std::vector<std::vector<NodeId>> merges;
  for (auto& [key, ids] : groups) {
    if (ids.size() < 2) continue;
    std::sort(ids.begin(), ids.end());
    merges.push_back(ids);
  }
  std::sort(merges.begin(), merges.end());
  for (const std::vector<NodeId>& ids : merges) {
    std::vector<const Tensor*> weights, biases;
    std::vector<int64_t> splits;
    for (NodeId id : ids) {
      const Node& n = g.GetNode(id);
      weights.push_back(&g.Param(n.params[0]));
      if (n.has_bias()) biases.push_back(&g.Param(n.params[1]));
      splits.push_back(weights.back()->dim(0));
    }
    const NodeId keep = ids.front();
    const std::string prefix = "combined." + std::to_string(keep);
    std::vector<std::string> params{UniqueParamName(g, prefix + ".weight")};
    Tensor w = kernels::Concat(weights, 0);
    std::optional<Tensor> b;
    if (!biases.empty()) b = kernels::Concat(biases, 0);
    g.params.emplace(params[0], std::move(w));
    if (b) {
      params.push_back(UniqueParamName(g, prefix + ".bias"));
      g.params.emplace(params[1], std::move(*b));
    }
    Node& k = *g.FindNode(keep);
    k.params = std::move(params);
    k.attrs.splits = splits;
    for (size_t i = 1; i < ids.size(); ++i) {
      RedirectUses(g, ValueRef::Of(ids[i]),
                   ValueRef::Of(keep, static_cast<uint32_t>(i)));
      RemoveNode(g, ids[i]);
    }
  }
}

}  // namespace

std::string_view OptLevelName(OptLevel level) {
  switch (level) {
    case OptLevel::kBasic: return "basic";
    case OptLevel::kDefault: return "default";
    case OptLevel::kExtended: return "extended";
  }
  return "unknown";
}

std::optional<OptLevel> ParseOptLevel(std::string_view name) {
  if (name == "basic" || name == "o0") return OptLevel::kBasic;
  if (name == "default" || name == "o2") return OptLevel::kDefault;
  if (name == "extended" || name == "o4") return OptLevel::kExtended;
  return std::nullopt;
}

std::string_view PassName(PassId pass) {
  for (const auto& [p, name] : kPassNames) {
    if (p == pass) return name;
  }
  return "unknown";
}

std::optional<PassId> ParsePassId(std::string_view name) {
  for (const auto& [p, n] : kPassNames) {
    if (n == name) return p;
  }
  return std::nullopt;
}

std::vector<PassId> AllPasses() {
  std::vector<PassId> all;
  for (const auto& [p, name] : kPassNames) all.push_back(p);
  return all;
}

std::vector<PassId> PassList(OptLevel level) {
  std::vector<PassId> passes{PassId::kSimplifyInference};
  if (level == OptLevel::kBasic) return passes;
  passes.insert(passes.end(), {PassId::kFuseOps, PassId::kFoldConstants,
                               PassId::kFoldScaleAxis});
  if (level == OptLevel::kDefault) return passes;
  passes.insert(passes.end(),
                {PassId::kEliminateCommonSubexpr, PassId::kCanonicalizeOps,
                 PassId::kCombineParallelOps, PassId::kFastMath});
  return passes;
}

std::vector<PassId> ResolvePasses(OptLevel level, std::span<const PassId> enable,
                                  std::span<const PassId> disable) {
  const std::vector<PassId> base = PassList(level);
  std::vector<PassId> out;
  for (PassId p : AllPasses()) {
    const bool wanted =
        std::find(base.begin(), base.end(), p) != base.end() ||
        std::find(enable.begin(), enable.end(), p) != enable.end();
    const bool blocked =
        std::find(disable.begin(), disable.end(), p) != disable.end();
    if (wanted && !blocked) out.push_back(p);
  }
  return out;
}

int FoldBatchNorms(ModelGraph& graph) {
  int folds = 0;
  while (FoldOneBatchNorm(graph)) {
    Prune(graph);
    ++folds;
  }
  return folds;
}

ModelGraph ApplyPass(const ModelGraph& graph, PassId pass) {
  try {
    Validate(graph);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidGraph, std::string(PassName(pass)) +
                                              " precondition: " + e.what());
  }
  ModelGraph g = graph;
  switch (pass) {
    case PassId::kSimplifyInference: SimplifyInference(g); break;
    case PassId::kFuseOps: FuseOps(g); break;
    case PassId::kFoldConstants: FoldConstants(g); break;
    case PassId::kFoldScaleAxis: FoldScaleAxis(g); break;
    case PassId::kEliminateCommonSubexpr: EliminateCommonSubexpr(g); break;
    case PassId::kCanonicalizeOps: CanonicalizeOps(g); break;
    case PassId::kCombineParallelOps: CombineParallelOps(g); break;
    case PassId::kFastMath: g.flags.fast_math = true; break;
  }
  Prune(g);
  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  try {
    Validate(g);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInternal, std::string(PassName(pass)) +
                                          " produced an invalid graph: " +
                                          e.what());
  }
  return g;
}

ModelGraph ApplyPasses(const ModelGraph& graph, std::span<const PassId> passes) {
  ModelGraph g = graph;
  for (PassId p : passes) g = ApplyPass(g, p);
  return g;
}

ModelGraph ApplyLevel(const ModelGraph& graph, OptLevel level) {
  const std::vector<PassId> passes = PassList(level);
  return ApplyPasses(graph, passes);
}

}  // namespace deltadiff
