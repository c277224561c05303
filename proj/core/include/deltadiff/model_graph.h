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

#ifndef DELTADIFF_MODEL_GRAPH_H_
#define DELTADIFF_MODEL_GRAPH_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltadiff/kernels.h"
#include "deltadiff/tensor.h"

namespace deltadiff {

using NodeId = uint32_t;

enum class OpKind {
  kConv2D,
  kDense,
  kBatchMatmul,
  kBatchNorm,
  kReLU,
  kSoftmax,
  kAdd,
  kMaxPool,
  kAvgPool,
  kGlobalAvgPool,
  kReshape,
  kConcat,
  kConstant,
  kFusedConvReLU,
  kFusedDenseReLU,
};

std::string_view OpKindName(OpKind op);
std::optional<OpKind> ParseOpKind(std::string_view name);
// Fused kinds are produced by the optimizer and never appear in sources.
bool IsFusedKind(OpKind op);
bool IsConvLike(OpKind op);   // Conv2D, FusedConvReLU
bool IsDenseLike(OpKind op);  // Dense, FusedDenseReLU

// Which converter dialect a graph is expressed in.
enum class Dialect { kNative, kDenseAsBatchMatmul, kPreFusedBatchNorm };

std::string_view DialectName(Dialect dialect);
std::optional<Dialect> ParseDialect(std::string_view name);

// Reference to a value flowing along an edge: either a named graph input or
// one output of a node.
struct ValueRef {
  std::string graph_input;
  NodeId node = 0;
  uint32_t output = 0;

  static ValueRef Input(std::string name) {
    return ValueRef{std::move(name), 0, 0};
  }
  static ValueRef Of(NodeId id, uint32_t output = 0) {
    return ValueRef{{}, id, output};
  }
  bool is_graph_input() const { return !graph_input.empty(); }

  auto operator<=>(const ValueRef&) const = default;
};

std::string ValueRefToString(const ValueRef& ref);

struct NodeAttrs {
  Stride2D stride;                 // Conv2D, pools
  Padding padding = Padding::kValid;  // Conv2D, pools
  Window2D window;                 // pools
  float epsilon = 0.0f;            // BatchNorm
  int64_t axis = 0;                // Concat
  Shape shape;                     // Reshape target
  // Conv/Dense only: output channels per output port. Empty means a single
  // output. A node with splits computes one tensor; port i is the i-th
  // channel slice of it.
  std::vector<int64_t> splits;

  bool operator==(const NodeAttrs&) const = default;
};

// Attributes with every field irrelevant to `op` reset to its default.
NodeAttrs CanonicalAttrs(OpKind op, const NodeAttrs& attrs);

struct Node {
  NodeId id = 0;
  OpKind op = OpKind::kReLU;
  NodeAttrs attrs;
  // Parameter names in operator order: Conv/Dense [weights, bias?];
  // BatchNorm [gamma, beta, mean, variance]; Constant [value].
  std::vector<std::string> params;
  std::vector<ValueRef> inputs;

  int num_outputs() const {
    return attrs.splits.empty() ? 1 : static_cast<int>(attrs.splits.size());
  }
  bool has_bias() const {
    return (IsConvLike(op) || IsDenseLike(op)) && params.size() == 2;
  }
};

bool operator==(const Node& a, const Node& b);

struct GraphInput {
  std::string name;
  Shape shape;
  bool operator==(const GraphInput&) const = default;
};

struct GraphFlags {
  bool fast_math = false;
  bool operator==(const GraphFlags&) const = default;
};

// Dataflow DAG plus its parameter store. Treated as an immutable value once
// validated; rewrites build new graphs.
struct ModelGraph {
  std::string name;
  Dialect dialect = Dialect::kNative;
  std::vector<GraphInput> inputs;
  std::vector<Node> nodes;
  std::vector<ValueRef> outputs;
  std::map<std::string, Tensor> params;
  std::vector<std::string> labels;
  GraphFlags flags;

  const Node* FindNode(NodeId id) const;
  Node* FindNode(NodeId id);
  const Node& GetNode(NodeId id) const;
  const Tensor& Param(const std::string& name) const;
  NodeId NextId() const;
};

// Structure, attributes, metadata and bitwise parameter equality.
bool operator==(const ModelGraph& a, const ModelGraph& b);

// Producers before consumers; among ready nodes the smallest id goes first.
std::vector<NodeId> TopoSort(const ModelGraph& graph);

// Full (unsplit) output shape of every node.
using ShapeMap = std::map<NodeId, Shape>;
ShapeMap InferShapes(const ModelGraph& graph);
Shape ValueShape(const ModelGraph& graph, const ShapeMap& shapes,
                 const ValueRef& ref);

// Checks every structural invariant and returns the inferred shapes.
ShapeMap Validate(const ModelGraph& graph);

// Number of node-input and graph-output slots reading `ref`.
int CountUses(const ModelGraph& graph, const ValueRef& ref);
// Rewrites every node input and graph output reading `from` to `to`.
void RedirectUses(ModelGraph& graph, const ValueRef& from, const ValueRef& to);
// Redirects every port of node `from` to the matching port of `to`.
void RedirectNode(ModelGraph& graph, NodeId from, NodeId to);
void RemoveNode(ModelGraph& graph, NodeId id);
// Drops nodes that cannot reach an output and parameters nobody references.
void Prune(ModelGraph& graph);
// Returns `base`, or `base` with the smallest numeric suffix that is free.
std::string UniqueParamName(const ModelGraph& graph, const std::string& base);

std::map<OpKind, int> OpHistogram(const ModelGraph& graph);

}  // namespace deltadiff

#endif  // DELTADIFF_MODEL_GRAPH_H_
