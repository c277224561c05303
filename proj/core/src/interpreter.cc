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

#include "deltadiff/interpreter.h"

#include <chrono>
#include <optional>

#include "deltadiff/errors.h"

namespace deltadiff {

std::string_view BackendName(Backend backend) {
  return backend == Backend::kReference ? "reference" : "optimized_layout";
}

std::optional<Backend> ParseBackend(std::string_view name) {
  if (name == "reference") return Backend::kReference;
  if (name == "optimized_layout") return Backend::kOptimizedLayout;
  return std::nullopt;
}

Tensor EvaluateNode(const ModelGraph& graph, const Node& node,
                    std::span<const Tensor* const> inputs, Backend backend) {
  const MathMode mode{graph.flags.fast_math};
  auto param = [&](size_t i) -> const Tensor& {
    return graph.Param(node.params.at(i));
  };
  const Tensor* bias = node.has_bias() ? &param(1) : nullptr;
  switch (node.op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU: {
      const ConvOptions opts{node.attrs.stride, node.attrs.padding,
                             node.op == OpKind::kFusedConvReLU};
      return kernels::Conv2D(*inputs[0], param(0), bias, opts, backend);
    }
    case OpKind::kDense:
    case OpKind::kFusedDenseReLU:
      return kernels::Dense(*inputs[0], param(0), bias,
                            node.op == OpKind::kFusedDenseReLU, mode, backend);
    case OpKind::kBatchMatmul:
      return kernels::BatchMatmul(*inputs[0], *inputs[1], mode, backend);
    case OpKind::kBatchNorm:
      return kernels::BatchNorm(*inputs[0], param(0), param(1), param(2),
                                param(3), node.attrs.epsilon);
    case OpKind::kReLU:
      return kernels::Relu(*inputs[0]);
    case OpKind::kSoftmax:
      return kernels::Softmax(*inputs[0], mode);
    case OpKind::kAdd:
      return kernels::Add(*inputs[0], *inputs[1]);
    case OpKind::kMaxPool:
      return kernels::MaxPool(*inputs[0], {node.attrs.window, node.attrs.stride,
                                           node.attrs.padding});
    case OpKind::kAvgPool:
      return kernels::AvgPool(*inputs[0], {node.attrs.window, node.attrs.stride,
                                           node.attrs.padding});
    case OpKind::kGlobalAvgPool:
      return kernels::GlobalAvgPool(*inputs[0]);
    case OpKind::kReshape:
      return kernels::Reshape(*inputs[0], node.attrs.shape);
    case OpKind::kConcat:
      return kernels::Concat(inputs, node.attrs.axis);
    case OpKind::kConstant:
      return param(0);
  }
  throw Error(ErrorCode::kInternal, "unhandled op kind");
}

Tensor PortValue(const Node& node, const Tensor& full, uint32_t port) {
  if (node.attrs.splits.empty()) return full;
  int64_t begin = 0;
  for (uint32_t i = 0; i < port; ++i) begin += node.attrs.splits[i];
  return kernels::SliceChannels(full, begin, node.attrs.splits[port]);
}

ExecutionPlan::ExecutionPlan(const ModelGraph& graph, Backend backend)
    : graph_(&graph), backend_(backend) {
  const std::vector<NodeId> order = TopoSort(graph);
  std::map<NodeId, int> step_of;
  for (NodeId id : order) step_of[id] = static_cast<int>(step_of.size());
  auto resolve = [&](const ValueRef& ref) {
    Source s;
    if (ref.is_graph_input()) {
      for (size_t i = 0; i < graph.inputs.size(); ++i) {
        if (graph.inputs[i].name == ref.graph_input) {
          s.index = static_cast<int>(i);
          return s;
        }
      }
      throw Error(ErrorCode::kInvalidGraph,
                  "unknown graph input " + ref.graph_input);
    }
    s.step = step_of.at(ref.node);
    s.index = s.step;
    s.port = ref.output;
    return s;
  };
  for (NodeId id : order) {
    Step step;
    step.node = &graph.GetNode(id);
    for (const ValueRef& r : step.node->inputs) step.inputs.push_back(resolve(r));
    steps_.push_back(std::move(step));
  }
  for (const ValueRef& r : graph.outputs) outputs_.push_back(resolve(r));
}

std::vector<Tensor> ExecutionPlan::Run(std::span<const Tensor> inputs,
                                       std::vector<TraceEntry>* trace) const {
  if (inputs.size() != graph_->inputs.size()) {
    throw Error(ErrorCode::kCorpusError,
                "graph expects " + std::to_string(graph_->inputs.size()) +
                    " inputs, got " + std::to_string(inputs.size()));
  }
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].shape() != graph_->inputs[i].shape) {
      throw Error(ErrorCode::kCorpusError,
                  "input '" + graph_->inputs[i].name + "' expects " +
                      ShapeToString(graph_->inputs[i].shape) + ", got " +
                      ShapeToString(inputs[i].shape()));
    }
  }
  std::vector<Tensor> values(steps_.size());
  // Sliced ports are materialized on demand and kept for reuse.
  std::vector<std::map<uint32_t, Tensor>> sliced(steps_.size());
  auto fetch = [&](const Source& s) -> const Tensor* {
    if (s.step < 0) return &inputs[s.index];
    const Step& producer = steps_[s.step];
    if (producer.node->attrs.splits.empty()) return &values[s.step];
    auto& cache = sliced[s.step];
    auto it = cache.find(s.port);
    if (it == cache.end()) {
      it = cache.emplace(s.port, PortValue(*producer.node, values[s.step],
                                           s.port)).first;
    }
    return &it->second;
  };
  std::vector<const Tensor*> args;
  for (size_t i = 0; i < steps_.size(); ++i) {
    const Step& step = steps_[i];
    args.clear();
    for (const Source& s : step.inputs) args.push_back(fetch(s));
    if (trace == nullptr) {
      values[i] = EvaluateNode(*graph_, *step.node, args, backend_);
    } else {
      const auto start = std::chrono::steady_clock::now();
      values[i] = EvaluateNode(*graph_, *step.node, args, backend_);
      const auto stop = std::chrono::steady_clock::now();
      trace->push_back(
          {static_cast<int64_t>(i), step.node->id, step.node->op, values[i],
           std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
               .count()});
    }
  }
  std::vector<Tensor> outputs;
  outputs.reserve(outputs_.size());
  for (const Source& s : outputs_) outputs.push_back(*fetch(s));
  return outputs;
}

Tensor ExecutionPlan::RunSingle(const Tensor& input,
                                std::vector<TraceEntry>* trace) const {
  std::vector<Tensor> out = Run(std::span<const Tensor>(&input, 1), trace);
  return std::move(out.front());
}

Tensor BackendExecute(const ModelGraph& graph, const Tensor& input,
                      Backend backend) {
  return ExecutionPlan(graph, backend).RunSingle(input);
}

}  // namespace deltadiff
