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

#ifndef DELTADIFF_GRAPH_BUILDER_H_
#define DELTADIFF_GRAPH_BUILDER_H_

#include <optional>
#include <string>
#include <vector>

#include "deltadiff/model_graph.h"

namespace deltadiff {

// Incremental construction of a ModelGraph. Node ids are assigned in
// creation order starting at 0; parameters are registered under the names
// given.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string name,
                        std::vector<std::string> labels = {});

  ValueRef Input(const std::string& name, Shape shape);

  ValueRef Conv2D(ValueRef input, const std::string& name, Tensor weights,
                  std::optional<Tensor> bias, Stride2D stride,
                  Padding padding);
  ValueRef Dense(ValueRef input, const std::string& name, Tensor weights,
                 std::optional<Tensor> bias);
  ValueRef BatchNorm(ValueRef input, const std::string& name, Tensor gamma,
                     Tensor beta, Tensor mean, Tensor variance, float epsilon);
  ValueRef BatchMatmul(ValueRef a, ValueRef b);
  ValueRef Relu(ValueRef input);
  ValueRef Softmax(ValueRef input);
  ValueRef Add(ValueRef a, ValueRef b);
  ValueRef MaxPool(ValueRef input, Window2D window, Stride2D stride,
                   Padding padding);
  ValueRef AvgPool(ValueRef input, Window2D window, Stride2D stride,
                   Padding padding);
  ValueRef GlobalAvgPool(ValueRef input);
  ValueRef Reshape(ValueRef input, Shape shape);
  ValueRef Concat(std::vector<ValueRef> inputs, int64_t axis);
  ValueRef Constant(const std::string& name, Tensor value);

  // Adds an arbitrary node (used to build malformed graphs in tests).
  ValueRef AddNode(Node node);
  void AddParam(const std::string& name, Tensor value);

  // Unvalidated graph.
  ModelGraph Build(std::vector<ValueRef> outputs) const;
  // Validated graph; throws on any invariant violation.
  ModelGraph Finish(std::vector<ValueRef> outputs) const;

 private:
  ValueRef Emit(OpKind op, std::vector<ValueRef> inputs, NodeAttrs attrs = {},
                std::vector<std::string> params = {});

  ModelGraph graph_;
  NodeId next_id_ = 0;
};

}  // namespace deltadiff

#endif  // DELTADIFF_GRAPH_BUILDER_H_
