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

#ifndef DELTADIFF_INTERPRETER_H_
#define DELTADIFF_INTERPRETER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltadiff/kernels.h"
#include "deltadiff/model_graph.h"

namespace deltadiff {

std::string_view BackendName(Backend backend);  // reference|optimized_layout
std::optional<Backend> ParseBackend(std::string_view name);

// One layer of a debug trace. Layer identity is (layer_index, node).
struct TraceEntry {
  int64_t layer_index = 0;
  NodeId node = 0;
  OpKind op = OpKind::kReLU;
  Tensor activation;  // full (unsplit) node output
  int64_t duration_ns = 0;
};

// Evaluates a single node given its input values (one per node input, in
// order). The result is the node's full output.
Tensor EvaluateNode(const ModelGraph& graph, const Node& node,
                    std::span<const Tensor* const> inputs, Backend backend);

// Value seen by a consumer of `port` of a node whose full output is `full`.
Tensor PortValue(const Node& node, const Tensor& full, uint32_t port);

// A graph lowered to a flat schedule in topological order. Holds pointers
// into `graph`, which must outlive the plan. Execution is const and may be
// called from several threads at once.
class ExecutionPlan {
 public:
  ExecutionPlan(const ModelGraph& graph, Backend backend);

  const ModelGraph& graph() const { return *graph_; }
  Backend backend() const { return backend_; }
  size_t num_layers() const { return steps_.size(); }

  // Runs the graph on `inputs` (one tensor per graph input, in declaration
  // order) and returns the graph outputs. When `trace` is non-null every
  // layer's activation and duration are appended to it.
  std::vector<Tensor> Run(std::span<const Tensor> inputs,
                          std::vector<TraceEntry>* trace = nullptr) const;

  // Single-input, single-output convenience.
  Tensor RunSingle(const Tensor& input,
                   std::vector<TraceEntry>* trace = nullptr) const;

 private:
  struct Source {
    int step = -1;  // -1 for a graph input
    int index = 0;  // step index or graph input index
    uint32_t port = 0;
  };
  struct Step {
    const Node* node = nullptr;
    std::vector<Source> inputs;
  };

  const ModelGraph* graph_;
  Backend backend_;
  std::vector<Step> steps_;
  std::vector<Source> outputs_;
};

// Executes `graph` on a single input tensor with the chosen backend.
Tensor BackendExecute(const ModelGraph& graph, const Tensor& input,
                      Backend backend);

}  // namespace deltadiff

#endif  // DELTADIFF_INTERPRETER_H_
