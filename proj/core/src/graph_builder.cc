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

#include "deltadiff/graph_builder.h"

#include "deltadiff/errors.h"

namespace deltadiff {

GraphBuilder::GraphBuilder(std::string name, std::vector<std::string> labels) {
  graph_.name = std::move(name);
  graph_.labels = std::move(labels);
}

ValueRef GraphBuilder::Input(const std::string& name, Shape shape) {
  graph_.inputs.push_back({name, std::move(shape)});
  return ValueRef::Input(name);
}

void GraphBuilder::AddParam(const std::string& name, Tensor value) {
  if (!graph_.params.emplace(name, std::move(value)).second) {
    throw Error(ErrorCode::kInvalidGraph, "duplicate parameter " + name);
  }
}

ValueRef GraphBuilder::AddNode(Node node) {
  next_id_ = std::max<NodeId>(next_id_, node.id + 1);
  const NodeId id = node.id;
  graph_.nodes.push_back(std::move(node));
  return ValueRef::Of(id);
}

ValueRef GraphBuilder::Emit(OpKind op, std::vector<ValueRef> inputs,
                            NodeAttrs attrs, std::vector<std::string> params) {
  Node n;
  n.id = next_id_++;
  n.op = op;
  n.attrs = std::move(attrs);
  n.params = std::move(params);
  n.inputs = std::move(inputs);
  graph_.nodes.push_back(std::move(n));
  return ValueRef::Of(graph_.nodes.back().id);
}

ValueRef GraphBuilder::Conv2D(ValueRef input, const std::string& name,
                              Tensor weights, std::optional<Tensor> bias,
                              Stride2D stride, Padding padding) {
  std::vector<std::string> params{name + ".weight"};
  AddParam(params[0], std::move(weights));
  if (bias) {
    params.push_back(name + ".bias");
    AddParam(params[1], std::move(*bias));
  }
  NodeAttrs a;
  a.stride = stride;
  a.padding = padding;
  return Emit(OpKind::kConv2D, {std::move(input)}, a, std::move(params));
}

ValueRef GraphBuilder::Dense(ValueRef input, const std::string& name,
                             Tensor weights, std::optional<Tensor> bias) {
  std::vector<std::string> params{name + ".weight"};
  AddParam(params[0], std::move(weights));
  if (bias) {
    params.push_back(name + ".bias");
    AddParam(params[1], std::move(*bias));
  }
  return Emit(OpKind::kDense, {std::move(input)}, {}, std::move(params));
}

ValueRef GraphBuilder::BatchNorm(ValueRef input, const std::string& name,
                                 Tensor gamma, Tensor beta, Tensor mean,
                                 Tensor variance, float epsilon) {
  std::vector<std::string> params{name + ".gamma", name + ".beta",
                                  name + ".mean", name + ".variance"};
  AddParam(params[0], std::move(gamma));
  AddParam(params[1], std::move(beta));
  AddParam(params[2], std::move(mean));
  AddParam(params[3], std::move(variance));
  NodeAttrs a;
  a.epsilon = epsilon;
  return Emit(OpKind::kBatchNorm, {std::move(input)}, a, std::move(params));
}

ValueRef GraphBuilder::BatchMatmul(ValueRef a, ValueRef b) {
  return Emit(OpKind::kBatchMatmul, {std::move(a), std::move(b)});
}

ValueRef GraphBuilder::Relu(ValueRef input) {
  return Emit(OpKind::kReLU, {std::move(input)});
}

ValueRef GraphBuilder::Softmax(ValueRef input) {
  return Emit(OpKind::kSoftmax, {std::move(input)});
}

ValueRef GraphBuilder::Add(ValueRef a, ValueRef b) {
  return Emit(OpKind::kAdd, {std::move(a), std::move(b)});
}

ValueRef GraphBuilder::MaxPool(ValueRef input, Window2D window,
                               Stride2D stride, Padding padding) {
  NodeAttrs a;
  a.window = window;
  a.stride = stride;
  a.padding = padding;
  return Emit(OpKind::kMaxPool, {std::move(input)}, a);
}

ValueRef GraphBuilder::AvgPool(ValueRef input, Window2D window,
                               Stride2D stride, Padding padding) {
  NodeAttrs a;
  a.window = window;
  a.stride = stride;
  a.padding = padding;
  return Emit(OpKind::kAvgPool, {std::move(input)}, a);
}

ValueRef GraphBuilder::GlobalAvgPool(ValueRef input) {
  return Emit(OpKind::kGlobalAvgPool, {std::move(input)});
}

ValueRef GraphBuilder::Reshape(ValueRef input, Shape shape) {
  NodeAttrs a;
  a.shape = std::move(shape);
  return Emit(OpKind::kReshape, {std::move(input)}, a);
}

ValueRef GraphBuilder::Concat(std::vector<ValueRef> inputs, int64_t axis) {
  NodeAttrs a;
  a.axis = axis;
  return Emit(OpKind::kConcat, std::move(inputs), a);
}

ValueRef GraphBuilder::Constant(const std::string& name, Tensor value) {
  AddParam(name, std::move(value));
  return Emit(OpKind::kConstant, {}, {}, {name});
}

ModelGraph GraphBuilder::Build(std::vector<ValueRef> outputs) const {
  ModelGraph g = graph_;
  g.outputs = std::move(outputs);
  return g;
}

ModelGraph GraphBuilder::Finish(std::vector<ValueRef> outputs) const {
  ModelGraph g = Build(std::move(outputs));
  Validate(g);
  return g;
}

}  // namespace deltadiff
