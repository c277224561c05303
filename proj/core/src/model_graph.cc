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

#include "deltadiff/model_graph.h"

#include <algorithm>
#include <array>
#include <functional>
#include <queue>
#include <set>
#include <utility>

#include "deltadiff/errors.h"

namespace deltadiff {
namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 15> kOpNames = {{
    {OpKind::kConv2D, "Conv2D"},
    {OpKind::kDense, "Dense"},
    {OpKind::kBatchMatmul, "BatchMatmul"},
    {OpKind::kBatchNorm, "BatchNorm"},
    {OpKind::kReLU, "ReLU"},
    {OpKind::kSoftmax, "Softmax"},
    {OpKind::kAdd, "Add"},
    {OpKind::kMaxPool, "MaxPool"},
    {OpKind::kAvgPool, "AvgPool"},
    {OpKind::kGlobalAvgPool, "GlobalAvgPool"},
    {OpKind::kReshape, "Reshape"},
    {OpKind::kConcat, "Concat"},
    {OpKind::kConstant, "Constant"},
    {OpKind::kFusedConvReLU, "FusedConvReLU"},
    {OpKind::kFusedDenseReLU, "FusedDenseReLU"},
}};

constexpr std::array<std::pair<Dialect, std::string_view>, 3> kDialectNames =
    {{
        {Dialect::kNative, "native"},
        {Dialect::kDenseAsBatchMatmul, "dense_as_batch_matmul"},
        {Dialect::kPreFusedBatchNorm, "prefused_batchnorm"},
    }};

[[noreturn]] void Invalid(const std::string& msg) {
  throw Error(ErrorCode::kInvalidGraph, msg);
}

std::string NodeLabel(const Node& node) {
  return "node " + std::to_string(node.id) + " (" +
         std::string(OpKindName(node.op)) + ")";
}

struct Arity {
  int min_inputs;
  int max_inputs;  // -1: unbounded
  int min_params;
  int max_params;
};

Arity ArityOf(OpKind op) {
  switch (op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU:
    case OpKind::kDense:
    case OpKind::kFusedDenseReLU:
      return {1, 1, 1, 2};
    case OpKind::kBatchMatmul:
    case OpKind::kAdd:
      return {2, 2, 0, 0};
    case OpKind::kBatchNorm:
      return {1, 1, 4, 4};
    case OpKind::kConcat:
      return {1, -1, 0, 0};
    case OpKind::kConstant:
      return {0, 0, 1, 1};
    default:
      return {1, 1, 0, 0};
  }
}

}  // namespace

std::string_view OpKindName(OpKind op) {
  for (const auto& [k, name] : kOpNames) {
    if (k == op) return name;
  }
  return "Unknown";
}

std::optional<OpKind> ParseOpKind(std::string_view name) {
  for (const auto& [k, n] : kOpNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool IsFusedKind(OpKind op) {
  return op == OpKind::kFusedConvReLU || op == OpKind::kFusedDenseReLU;
}
bool IsConvLike(OpKind op) {
  return op == OpKind::kConv2D || op == OpKind::kFusedConvReLU;
}
bool IsDenseLike(OpKind op) {
  return op == OpKind::kDense || op == OpKind::kFusedDenseReLU;
}

std::string_view DialectName(Dialect dialect) {
  for (const auto& [d, name] : kDialectNames) {
    if (d == dialect) return name;
  }
  return "unknown";
}

std::optional<Dialect> ParseDialect(std::string_view name) {
  for (const auto& [d, n] : kDialectNames) {
    if (n == name) return d;
  }
  return std::nullopt;
}

std::string ValueRefToString(const ValueRef& ref) {
  if (ref.is_graph_input()) return "@" + ref.graph_input;
  std::string s = "%" + std::to_string(ref.node);
  if (ref.output != 0) s += ":" + std::to_string(ref.output);
  return s;
}

NodeAttrs CanonicalAttrs(OpKind op, const NodeAttrs& attrs) {
  NodeAttrs out;
  switch (op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU:
      out.stride = attrs.stride;
      out.padding = attrs.padding;
      out.splits = attrs.splits;
      break;
    case OpKind::kDense:
    case OpKind::kFusedDenseReLU:
      out.splits = attrs.splits;
      break;
    case OpKind::kMaxPool:
    case OpKind::kAvgPool:
      out.window = attrs.window;
      out.stride = attrs.stride;
      out.padding = attrs.padding;
      break;
    case OpKind::kBatchNorm:
      out.epsilon = attrs.epsilon;
      break;
    case OpKind::kConcat:
      out.axis = attrs.axis;
      break;
    case OpKind::kReshape:
      out.shape = attrs.shape;
      break;
    default:
      break;
  }
  return out;
}

bool operator==(const Node& a, const Node& b) {
  return a.id == b.id && a.op == b.op && a.params == b.params &&
         a.inputs == b.inputs &&
         CanonicalAttrs(a.op, a.attrs) == CanonicalAttrs(b.op, b.attrs);
}

const Node* ModelGraph::FindNode(NodeId id) const {
  for (const Node& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

Node* ModelGraph::FindNode(NodeId id) {
  for (Node& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const Node& ModelGraph::GetNode(NodeId id) const {
  const Node* n = FindNode(id);
  if (n == nullptr) Invalid("no node with id " + std::to_string(id));
  return *n;
}

const Tensor& ModelGraph::Param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error(ErrorCode::kMissingWeight, name);
  return it->second;
}

NodeId ModelGraph::NextId() const {
  NodeId next = 0;
  for (const Node& n : nodes) next = std::max<NodeId>(next, n.id + 1);
  return next;
}

bool operator==(const ModelGraph& a, const ModelGraph& b) {
  if (a.name != b.name || a.dialect != b.dialect || a.inputs != b.inputs ||
      a.nodes != b.nodes || a.outputs != b.outputs || a.labels != b.labels ||
      a.flags != b.flags || a.params.size() != b.params.size()) {
    return false;
  }
  auto ib = b.params.begin();
  for (const auto& [name, tensor] : a.params) {
    if (ib->first != name || !ib->second.BitwiseEquals(tensor)) return false;
    ++ib;
  }
  return true;
}

std::vector<NodeId> TopoSort(const ModelGraph& graph) {
  std::map<NodeId, int> indegree;
  std::map<NodeId, std::vector<NodeId>> consumers;
  for (const Node& n : graph.nodes) indegree.emplace(n.id, 0);
  for (const Node& n : graph.nodes) {
    for (const ValueRef& in : n.inputs) {
      if (in.is_graph_input()) continue;
      if (!indegree.contains(in.node)) {
        Invalid(NodeLabel(n) + " reads unknown node " +
                std::to_string(in.node));
      }
      ++indegree[n.id];
      consumers[in.node].push_back(n.id);
    }
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push(id);
  }
  std::vector<NodeId> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (NodeId c : consumers[id]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != graph.nodes.size()) {
    throw Error(ErrorCode::kCyclicGraph,
                "graph '" + graph.name + "' contains a cycle");
  }
  return order;
}

Shape ValueShape(const ModelGraph& graph, const ShapeMap& shapes,
                 const ValueRef& ref) {
  if (ref.is_graph_input()) {
    for (const GraphInput& in : graph.inputs) {
      if (in.name == ref.graph_input) return in.shape;
    }
    Invalid("unknown graph input '" + ref.graph_input + "'");
  }
  auto it = shapes.find(ref.node);
  if (it == shapes.end()) {
    Invalid("no shape for node " + std::to_string(ref.node));
  }
  const Node& producer = graph.GetNode(ref.node);
  if (static_cast<int>(ref.output) >= producer.num_outputs()) {
    Invalid("output " + std::to_string(ref.output) + " of " +
            NodeLabel(producer) + " does not exist");
  }
  if (producer.attrs.splits.empty()) return it->second;
  Shape s = it->second;
  s[1] = producer.attrs.splits[ref.output];
  return s;
}

namespace {

Shape InferNodeShape(const ModelGraph& graph, const ShapeMap& shapes,
                     const Node& node) {
  std::vector<Shape> in;
  in.reserve(node.inputs.size());
  for (const ValueRef& r : node.inputs) {
    in.push_back(ValueShape(graph, shapes, r));
  }
  auto param_shape = [&](size_t i) -> Shape {
    return graph.Param(node.params.at(i)).shape();
  };
  switch (node.op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU: {
      ConvOptions opts{node.attrs.stride, node.attrs.padding, false};
      const Shape w = param_shape(0);
      const Shape b = node.has_bias() ? param_shape(1) : Shape{};
      return Conv2DShape(in[0], w, node.has_bias() ? &b : nullptr, opts);
    }
    case OpKind::kDense:
    case OpKind::kFusedDenseReLU: {
      const Shape w = param_shape(0);
      const Shape b = node.has_bias() ? param_shape(1) : Shape{};
      return DenseShape(in[0], w, node.has_bias() ? &b : nullptr);
    }
    case OpKind::kBatchMatmul:
      return BatchMatmulShape(in[0], in[1]);
    case OpKind::kBatchNorm:
      if (!(node.attrs.epsilon >= 0.0f)) {
        throw Error(ErrorCode::kInvalidEpsilon,
                    NodeLabel(node) + " has negative epsilon");
      }
      return BatchNormShape(in[0], param_shape(0), param_shape(1),
                            param_shape(2), param_shape(3));
    case OpKind::kReLU:
    case OpKind::kSoftmax:
      return in[0];
    case OpKind::kAdd:
      return AddShape(in[0], in[1]);
    case OpKind::kMaxPool:
    case OpKind::kAvgPool:
      return PoolShape(in[0], PoolOptions{node.attrs.window, node.attrs.stride,
                                          node.attrs.padding});
    case OpKind::kGlobalAvgPool:
      return GlobalAvgPoolShape(in[0]);
    case OpKind::kReshape:
      return ReshapeShape(in[0], node.attrs.shape);
    case OpKind::kConcat:
      return ConcatShape(in, node.attrs.axis);
    case OpKind::kConstant:
      return param_shape(0);
  }
  Invalid("unhandled op kind");
}

}  // namespace

ShapeMap InferShapes(const ModelGraph& graph) {
  ShapeMap shapes;
  for (NodeId id : TopoSort(graph)) {
    const Node& node = graph.GetNode(id);
    Shape s;
    try {
      s = InferNodeShape(graph, shapes, node);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kShapeMismatch ||
          e.code() == ErrorCode::kInvalidStride ||
          e.code() == ErrorCode::kInvalidEpsilon) {
        throw Error(e.code(), NodeLabel(node) + ": " + e.what());
      }
      throw;
    }
    if (!node.attrs.splits.empty()) {
      int64_t total = 0;
      for (int64_t part : node.attrs.splits) {
        if (part < 1) Invalid(NodeLabel(node) + " has an empty split");
        total += part;
      }
      if (s.size() < 2 || total != s[1]) {
        throw Error(ErrorCode::kShapeMismatch,
                    NodeLabel(node) + ": splits do not cover " +
                        ShapeToString(s));
      }
    }
    shapes.emplace(id, std::move(s));
  }
  return shapes;
}

ShapeMap Validate(const ModelGraph& graph) {
  std::set<NodeId> ids;
  for (const Node& n : graph.nodes) {
    if (!ids.insert(n.id).second) {
      Invalid("duplicate node id " + std::to_string(n.id));
    }
  }
  std::set<std::string> input_names;
  for (const GraphInput& in : graph.inputs) {
    if (in.name.empty() || !input_names.insert(in.name).second) {
      Invalid("graph input names must be unique and non-empty");
    }
    if (in.shape.empty() ||
        std::any_of(in.shape.begin(), in.shape.end(),
                    [](int64_t d) { return d < 1; })) {
      throw Error(ErrorCode::kShapeMismatch,
                  "graph input '" + in.name + "' has invalid shape");
    }
  }
  std::set<std::string> used_params;
  for (const Node& n : graph.nodes) {
    const Arity a = ArityOf(n.op);
    const int nin = static_cast<int>(n.inputs.size());
    const int npar = static_cast<int>(n.params.size());
    if (nin < a.min_inputs || (a.max_inputs >= 0 && nin > a.max_inputs)) {
      Invalid(NodeLabel(n) + " has " + std::to_string(nin) + " inputs");
    }
    if (npar < a.min_params || npar > a.max_params) {
      Invalid(NodeLabel(n) + " has " + std::to_string(npar) + " parameters");
    }
    if (!n.attrs.splits.empty() && !IsConvLike(n.op) && !IsDenseLike(n.op)) {
      Invalid(NodeLabel(n) + " cannot have output splits");
    }
    if (n.op == OpKind::kReshape && n.attrs.shape.empty()) {
      Invalid(NodeLabel(n) + " is missing its target shape");
    }
    for (const ValueRef& r : n.inputs) {
      if (r.is_graph_input()) {
        if (!input_names.contains(r.graph_input)) {
          Invalid(NodeLabel(n) + " reads unknown input '" + r.graph_input +
                  "'");
        }
      } else if (!ids.contains(r.node)) {
        Invalid(NodeLabel(n) + " reads unknown node " +
                std::to_string(r.node));
      } else if (static_cast<int>(r.output) >=
                 graph.GetNode(r.node).num_outputs()) {
        Invalid(NodeLabel(n) + " reads missing port " + ValueRefToString(r));
      }
    }
    for (const std::string& p : n.params) {
      if (!graph.params.contains(p)) {
        throw Error(ErrorCode::kMissingWeight,
                    NodeLabel(n) + " references '" + p + "'");
      }
      used_params.insert(p);
    }
  }
  if (graph.outputs.empty()) Invalid("graph has no outputs");
  for (const ValueRef& r : graph.outputs) {
    if (r.is_graph_input() || !ids.contains(r.node) ||
        static_cast<int>(r.output) >= graph.GetNode(r.node).num_outputs()) {
      Invalid("graph output " + ValueRefToString(r) + " is not a node port");
    }
  }
  for (const auto& [name, tensor] : graph.params) {
    if (!used_params.contains(name)) Invalid("orphan parameter '" + name + "'");
  }
  ShapeMap shapes = InferShapes(graph);
  const Shape out = ValueShape(graph, shapes, graph.outputs.front());
  if (!graph.labels.empty() &&
      static_cast<int64_t>(graph.labels.size()) != out.back()) {
    Invalid("label list has " + std::to_string(graph.labels.size()) +
            " entries for output " + ShapeToString(out));
  }
  return shapes;
}

int CountUses(const ModelGraph& graph, const ValueRef& ref) {
  int uses = 0;
  for (const Node& n : graph.nodes) {
    uses += static_cast<int>(std::count(n.inputs.begin(), n.inputs.end(), ref));
  }
  uses += static_cast<int>(
      std::count(graph.outputs.begin(), graph.outputs.end(), ref));
  return uses;
}

void RedirectUses(ModelGraph& graph, const ValueRef& from,
                  const ValueRef& to) {
  for (Node& n : graph.nodes) {
    for (ValueRef& r : n.inputs) {
      if (r == from) r = to;
    }
  }
  for (ValueRef& r : graph.outputs) {
    if (r == from) r = to;
  }
}

void RedirectNode(ModelGraph& graph, NodeId from, NodeId to) {
  for (Node& n : graph.nodes) {
    for (ValueRef& r : n.inputs) {
      if (!r.is_graph_input() && r.node == from) r.node = to;
    }
  }
  for (ValueRef& r : graph.outputs) {
    if (!r.is_graph_input() && r.node == from) r.node = to;
  }
}

void RemoveNode(ModelGraph& graph, NodeId id) {
  std::erase_if(graph.nodes, [id](const Node& n) { return n.id == id; });
}

void Prune(ModelGraph& graph) {
  std::set<NodeId> live;
  std::vector<NodeId> stack;
  for (const ValueRef& r : graph.outputs) {
    if (!r.is_graph_input()) stack.push_back(r.node);
  }
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (!live.insert(id).second) continue;
    const Node* n = graph.FindNode(id);
    if (n == nullptr) continue;
    for (const ValueRef& r : n->inputs) {
      if (!r.is_graph_input()) stack.push_back(r.node);
    }
  }
  std::erase_if(graph.nodes,
                [&](const Node& n) { return !live.contains(n.id); });
  std::set<std::string> used;
  for (const Node& n : graph.nodes) used.insert(n.params.begin(), n.params.end());
  std::erase_if(graph.params,
                [&](const auto& kv) { return !used.contains(kv.first); });
}

std::string UniqueParamName(const ModelGraph& graph, const std::string& base) {
  if (!graph.params.contains(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "." + std::to_string(i);
    if (!graph.params.contains(candidate)) return candidate;
  }
}

std::map<OpKind, int> OpHistogram(const ModelGraph& graph) {
  std::map<OpKind, int> hist;
  for (const Node& n : graph.nodes) ++hist[n.op];
  return hist;
}

}  // namespace deltadiff
