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

#include "deltadiff/model_io.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deltadiff/errors.h"
#include "deltadiff/tensor_io.h"

namespace deltadiff {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void ParseFail(const std::string& msg) {
  throw Error(ErrorCode::kParseError, msg);
}

Json RefToJson(const ValueRef& ref) {
  if (ref.is_graph_input()) return ref.graph_input;
  if (ref.output == 0) return ref.node;
  return Json::array({ref.node, ref.output});
}

ValueRef RefFromJson(const Json& j) {
  if (j.is_string()) return ValueRef::Input(j.get<std::string>());
  if (j.is_number_unsigned()) return ValueRef::Of(j.get<NodeId>());
  if (j.is_array() && j.size() == 2 && j[0].is_number_unsigned() &&
      j[1].is_number_unsigned()) {
    return ValueRef::Of(j[0].get<NodeId>(), j[1].get<uint32_t>());
  }
  ParseFail("bad value reference " + j.dump());
}

std::string_view PaddingName(Padding p) {
  return p == Padding::kSame ? "SAME" : "VALID";
}

Padding ParsePadding(const Json& j) {
  const auto s = j.get<std::string>();
  if (s == "SAME") return Padding::kSame;
  if (s == "VALID") return Padding::kValid;
  ParseFail("unknown padding '" + s + "'");
}

Json PairToJson(int64_t a, int64_t b) { return Json::array({a, b}); }

std::pair<int64_t, int64_t> PairFromJson(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    ParseFail(std::string(what) + " must be a two-element array");
  }
  return {j[0].get<int64_t>(), j[1].get<int64_t>()};
}

Json AttrsToJson(const Node& node) {
  Json j = Json::object();
  const NodeAttrs& a = node.attrs;
  switch (node.op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU:
      j["stride"] = PairToJson(a.stride.height, a.stride.width);
      j["padding"] = PaddingName(a.padding);
      break;
    case OpKind::kMaxPool:
    case OpKind::kAvgPool:
      j["window"] = PairToJson(a.window.height, a.window.width);
      j["stride"] = PairToJson(a.stride.height, a.stride.width);
      j["padding"] = PaddingName(a.padding);
      break;
    case OpKind::kBatchNorm:
      j["epsilon"] = a.epsilon;
      break;
    case OpKind::kConcat:
      j["axis"] = a.axis;
      break;
    case OpKind::kReshape:
      j["shape"] = a.shape;
      break;
    default:
      break;
  }
  if (!a.splits.empty()) j["splits"] = a.splits;
  return j;
}

template <typename T>
T Require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) ParseFail(where + " is missing '" + key + "'");
  return j.at(key).get<T>();
}

NodeAttrs AttrsFromJson(OpKind op, const Json& j, const std::string& where) {
  NodeAttrs a;
  switch (op) {
    case OpKind::kConv2D:
    case OpKind::kFusedConvReLU: {
      auto [sh, sw] = PairFromJson(Require<Json>(j, "stride", where), "stride");
      a.stride = {sh, sw};
      a.padding = ParsePadding(Require<Json>(j, "padding", where));
      break;
    }
    case OpKind::kMaxPool:
    case OpKind::kAvgPool: {
      auto [wh, ww] = PairFromJson(Require<Json>(j, "window", where), "window");
      auto [sh, sw] = PairFromJson(Require<Json>(j, "stride", where), "stride");
      a.window = {wh, ww};
      a.stride = {sh, sw};
      a.padding = ParsePadding(Require<Json>(j, "padding", where));
      break;
    }
    case OpKind::kBatchNorm:
      a.epsilon = Require<float>(j, "epsilon", where);
      break;
    case OpKind::kConcat:
      a.axis = Require<int64_t>(j, "axis", where);
      break;
    case OpKind::kReshape:
      a.shape = Require<Shape>(j, "shape", where);
      break;
    default:
      break;
  }
  if (j.contains("splits")) a.splits = j.at("splits").get<std::vector<int64_t>>();
  return a;
}

}  // namespace

std::filesystem::path WeightsPathFor(const std::filesystem::path& manifest) {
  std::filesystem::path p = manifest;
  p.replace_extension(".weights");
  return p;
}

std::string ManifestToString(const ModelGraph& graph) {
  Json j;
  j["name"] = graph.name;
  j["dialect"] = DialectName(graph.dialect);
  Json inputs = Json::array();
  for (const GraphInput& in : graph.inputs) {
    inputs.push_back(Json{{"name", in.name}, {"shape", in.shape}});
  }
  j["inputs"] = std::move(inputs);
  Json nodes = Json::array();
  for (const Node& n : graph.nodes) {
    Json node;
    node["id"] = n.id;
    node["op"] = OpKindName(n.op);
    node["attrs"] = AttrsToJson(n);
    node["params"] = n.params;
    Json ins = Json::array();
    for (const ValueRef& r : n.inputs) ins.push_back(RefToJson(r));
    node["inputs"] = std::move(ins);
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  Json outs = Json::array();
  for (const ValueRef& r : graph.outputs) outs.push_back(RefToJson(r));
  j["outputs"] = std::move(outs);
  j["labels"] = graph.labels;
  j["flags"] = Json{{"fast_math", graph.flags.fast_math}};
  return j.dump(2) + "\n";
}

ModelGraph ManifestFromString(const std::string& text,
                              std::map<std::string, Tensor> params) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    ParseFail(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    ModelGraph g;
    g.name = Require<std::string>(j, "name", "manifest");
    const auto dialect = Require<std::string>(j, "dialect", "manifest");
    const auto d = ParseDialect(dialect);
    if (!d) ParseFail("unknown dialect '" + dialect + "'");
    g.dialect = *d;
    for (const Json& in : Require<Json>(j, "inputs", "manifest")) {
      g.inputs.push_back({Require<std::string>(in, "name", "input"),
                          Require<Shape>(in, "shape", "input")});
    }
    for (const Json& jn : Require<Json>(j, "nodes", "manifest")) {
      Node n;
      n.id = Require<NodeId>(jn, "id", "node");
      const std::string where = "node " + std::to_string(n.id);
      const auto op_name = Require<std::string>(jn, "op", where);
      const auto op = ParseOpKind(op_name);
      if (!op) throw Error(ErrorCode::kUnsupportedOp, op_name);
      n.op = *op;
      n.attrs = AttrsFromJson(n.op, jn.value("attrs", Json::object()), where);
      n.params = jn.value("params", std::vector<std::string>{});
      for (const Json& r : Require<Json>(jn, "inputs", where)) {
        n.inputs.push_back(RefFromJson(r));
      }
      g.nodes.push_back(std::move(n));
    }
    for (const Json& r : Require<Json>(j, "outputs", "manifest")) {
      g.outputs.push_back(RefFromJson(r));
    }
    g.labels = j.value("labels", std::vector<std::string>{});
    if (j.contains("flags")) {
      g.flags.fast_math = j["flags"].value("fast_math", false);
    }
    g.params = std::move(params);
    return g;
  } catch (const Json::exception& e) {
    ParseFail(std::string("malformed manifest: ") + e.what());
  }
}

void SaveModel(const ModelGraph& graph,
               const std::filesystem::path& manifest_path) {
  if (manifest_path.has_parent_path()) {
    std::filesystem::create_directories(manifest_path.parent_path());
  }
  {
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + manifest_path.string());
    }
    out << ManifestToString(graph);
    if (!out) {
      throw Error(ErrorCode::kIoError, "write failed: " + manifest_path.string());
    }
  }
  SaveNamedTensorsFile(WeightsPathFor(manifest_path), graph.params);
}

ModelGraph LoadModel(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kParseError,
                "cannot read manifest " + manifest_path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const auto weights_path = WeightsPathFor(manifest_path);
  if (!std::filesystem::exists(weights_path)) {
    throw Error(ErrorCode::kParseError,
                "missing weights sidecar " + weights_path.string());
  }
  ModelGraph g =
      ManifestFromString(buf.str(), LoadNamedTensorsFile(weights_path));
  Validate(g);
  return g;
}

}  // namespace deltadiff
