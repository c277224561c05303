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
#include <fstream>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "deltadiff/desk_models.h"
#include "deltadiff/errors.h"
#include "deltadiff/graph_builder.h"
#include "deltadiff/model_io.h"
#include "deltadiff/optimizer.h"
#include "deltadiff/tensor_io.h"
#include "test_util.h"

namespace deltadiff {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

std::vector<NodeId> Ids(std::initializer_list<NodeId> ids) { return ids; }

ModelGraph Diamond() {
  GraphBuilder b("diamond");
  const ValueRef x = b.Input("x", {1, 4});
  const ValueRef a = b.Relu(x);      // 0
  const ValueRef l = b.Relu(a);      // 1
  const ValueRef r = b.Softmax(a);   // 2
  return b.Finish({b.Add(l, r)});    // 3
}

TEST(TopoSortTest, LinearChain) {
  GraphBuilder b("chain");
  ValueRef v = b.Input("x", {1, 3});
  for (int i = 0; i < 4; ++i) v = b.Relu(v);
  EXPECT_EQ(TopoSort(b.Finish({v})), Ids({0, 1, 2, 3}));
}

TEST(TopoSortTest, DiamondBreaksTiesById) {
  EXPECT_EQ(TopoSort(Diamond()), Ids({0, 1, 2, 3}));
}

TEST(TopoSortTest, TwoNodeCycle) {
  GraphBuilder b("cycle");
  b.Input("x", {1, 3});
  Node n0{0, OpKind::kAdd, {}, {}, {ValueRef::Input("x"), ValueRef::Of(1)}};
  Node n1{1, OpKind::kReLU, {}, {}, {ValueRef::Of(0)}};
  b.AddNode(n0);
  b.AddNode(n1);
  const ModelGraph g = b.Build({ValueRef::Of(1)});
  EXPECT_EQ(CodeOf([&] { TopoSort(g); }), ErrorCode::kCyclicGraph);
  EXPECT_EQ(CodeOf([&] { Validate(g); }), ErrorCode::kCyclicGraph);
}

TEST(ShapeInferenceTest, ConvSame) {
  std::mt19937 rng(1);
  GraphBuilder b("conv");
  const ValueRef x = b.Input("x", {1, 3, 5, 5});
  const ValueRef y = b.Conv2D(x, "c", testing::RandomTensor({8, 3, 3, 3}, rng),
                              std::nullopt, {1, 1}, Padding::kSame);
  const ModelGraph g = b.Finish({y});
  EXPECT_EQ(InferShapes(g).at(0), (Shape{1, 8, 5, 5}));
}

TEST(ShapeInferenceTest, DenseAfterGlobalPool) {
  GraphBuilder b("gap");
  const ValueRef x = b.Input("x", {1, 64, 4, 4});
  const ValueRef p = b.GlobalAvgPool(x);
  const ValueRef d = b.Dense(p, "fc", Tensor({10, 64}), Tensor({10}));
  const ModelGraph g = b.Finish({d});
  const ShapeMap shapes = InferShapes(g);
  EXPECT_EQ(shapes.at(0), (Shape{1, 64}));
  EXPECT_EQ(shapes.at(1), (Shape{1, 10}));
  GraphBuilder bad("gap-bad");
  const ValueRef y = bad.GlobalAvgPool(bad.Input("x", {1, 64, 4, 4}));
  const ValueRef z = bad.Dense(y, "fc", Tensor({10, 32}), std::nullopt);
  EXPECT_EQ(CodeOf([&] { bad.Finish({z}); }), ErrorCode::kShapeMismatch);
}

TEST(ShapeInferenceTest, ChannelConcat) {
  GraphBuilder b("cat");
  const ValueRef a = b.Input("a", {1, 3, 8, 8});
  const ValueRef c = b.Input("c", {1, 5, 8, 8});
  const ModelGraph g = b.Finish({b.Concat({a, c}, 1)});
  EXPECT_EQ(InferShapes(g).at(0), (Shape{1, 8, 8, 8}));
}

TEST(DeskModelTest, TinyNetAShape) {
  const ModelGraph g = BuildDeskModel(kTinyNetA);
  const ShapeMap shapes = Validate(g);
  EXPECT_EQ(ValueShape(g, shapes, g.outputs[0]), (Shape{1, 10}));
  EXPECT_EQ(g.labels.size(), 10u);
  const auto hist = OpHistogram(g);
  EXPECT_EQ(hist.at(OpKind::kConv2D), 3);
  EXPECT_EQ(hist.at(OpKind::kDense), 1);
}

TEST(DeskModelTest, AllModelsValidAndDeterministic) {
  for (const std::string& name : DeskModelNames()) {
    const ModelGraph g = BuildDeskModel(name);
    EXPECT_NO_THROW(Validate(g)) << name;
    EXPECT_TRUE(g == BuildDeskModel(name)) << name;
    for (const Node& n : g.nodes) EXPECT_FALSE(IsFusedKind(n.op)) << name;
  }
  EXPECT_GT(OpHistogram(BuildDeskModel(kTinyNetB)).count(OpKind::kConcat), 0u);
  EXPECT_GT(OpHistogram(BuildDeskModel(kTinyNetC)).count(OpKind::kAdd), 0u);
}

TEST(ModelIoTest, RoundTripIsIdentity) {
  testing::TempDir dir("model-io");
  for (const std::string& name : DeskModelNames()) {
    for (OptLevel level :
         {OptLevel::kBasic, OptLevel::kDefault, OptLevel::kExtended}) {
      const ModelGraph g = ApplyLevel(BuildDeskModel(name), level);
      const auto path = dir.path() / (name + ".json");
      SaveModel(g, path);
      EXPECT_TRUE(LoadModel(path) == g) << name;
    }
  }
}

TEST(ModelIoTest, FusedKindsSurvive) {
  testing::TempDir dir("model-io");
  const ModelGraph g =
      ApplyLevel(BuildDeskModel(kTinyNetA), OptLevel::kDefault);
  ASSERT_GT(OpHistogram(g).count(OpKind::kFusedConvReLU), 0u);
  SaveModel(g, dir.path() / "m.json");
  EXPECT_EQ(OpHistogram(LoadModel(dir.path() / "m.json")), OpHistogram(g));
}

TEST(ModelIoTest, SavesAreByteStable) {
  testing::TempDir dir("model-io");
  const ModelGraph g = BuildDeskModel(kTinyNetC);
  SaveModel(g, dir.path() / "a.json");
  SaveModel(g, dir.path() / "b.json");
  for (const char* ext : {".json", ".weights"}) {
    std::ifstream a(dir.path() / (std::string("a") + ext), std::ios::binary);
    std::ifstream b(dir.path() / (std::string("b") + ext), std::ios::binary);
    const std::string sa{std::istreambuf_iterator<char>(a), {}};
    const std::string sb{std::istreambuf_iterator<char>(b), {}};
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, sb) << ext;
  }
}

TEST(ModelIoTest, MissingWeight) {
  ModelGraph g = BuildDeskModel(kTinyNetA);
  const std::string manifest = ManifestToString(g);
  g.params.erase("conv2.weight");
  const ModelGraph parsed = ManifestFromString(manifest, g.params);
  EXPECT_EQ(CodeOf([&] { Validate(parsed); }), ErrorCode::kMissingWeight);
  testing::TempDir dir("model-io");
  SaveModel(BuildDeskModel(kTinyNetA), dir.path() / "m.json");
  SaveNamedTensorsFile(dir.path() / "m.weights", g.params);
  EXPECT_EQ(CodeOf([&] { LoadModel(dir.path() / "m.json"); }),
            ErrorCode::kMissingWeight);
}

TEST(ModelIoTest, ParseErrors) {
  EXPECT_EQ(CodeOf([] { ManifestFromString("{not json", {}); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ManifestFromString("{\"name\": 3}", {}); }),
            ErrorCode::kParseError);
  std::string text = ManifestToString(BuildDeskModel(kTinyNetA));
  const size_t at = text.find("\"ReLU\"");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 6, "\"Gelu\"");
  EXPECT_EQ(CodeOf([&] { ManifestFromString(text, {}); }),
            ErrorCode::kUnsupportedOp);
  testing::TempDir dir("model-io");
  // Missing files fall under the loader's ParseError contract.
  EXPECT_EQ(CodeOf([&] { LoadModel(dir.path() / "absent.json"); }),
            ErrorCode::kParseError);
}

// Applies one random invariant-breaking mutation. Returns a description.
std::string Mutate(ModelGraph& g, std::mt19937& rng) {
  auto pick = [&](size_t n) {
    return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
  };
  std::vector<Node*> with_inputs, convs;
  for (Node& n : g.nodes) {
    if (!n.inputs.empty()) with_inputs.push_back(&n);
    if (n.op == OpKind::kConv2D) convs.push_back(&n);
  }
  switch (pick(6)) {
    case 0: {  // back edge from a node to one of its ancestors
      Node* v = with_inputs[pick(with_inputs.size())];
      Node* u = v;
      for (size_t steps = 1 + pick(4); steps > 0; --steps) {
        const ValueRef& in = u->inputs[0];
        if (in.is_graph_input()) break;
        u = g.FindNode(in.node);
      }
      u->inputs[0] = ValueRef::Of(v->id);
      return "cycle";
    }
    case 1: {  // arity: drop every input
      with_inputs[pick(with_inputs.size())]->inputs.clear();
      return "arity";
    }
    case 2: {  // arity: extra inputs on a fixed-arity op
      Node* n = with_inputs[pick(with_inputs.size())];
      while (n->op == OpKind::kConcat) {
        n = with_inputs[pick(with_inputs.size())];
      }
      while (n->inputs.size() < 3) n->inputs.push_back(n->inputs[0]);
      return "extra inputs";
    }
    case 3: {  // shape: conv weights with one channel too many
      Node* c = convs[pick(convs.size())];
      Shape s = g.params.at(c->params[0]).shape();
      s[1] += 1;
      g.params[c->params[0]] = Tensor(s);
      return "weight shape";
    }
    case 4: {  // dangling reference
      with_inputs[pick(with_inputs.size())]->inputs[0] =
          ValueRef::Of(g.NextId() + 7);
      return "dangling";
    }
    default: {  // missing parameter
      Node* c = convs[pick(convs.size())];
      g.params.erase(c->params[0]);
      return "missing param";
    }
  }
}

TEST(ValidationFuzzTest, RejectsEveryBrokenMutation) {
  std::mt19937 rng(2024);
  const std::vector<ModelGraph> bases = {BuildDeskModel(kTinyNetA),
                                         BuildDeskModel(kTinyNetB),
                                         BuildDeskModel(kTinyNetC)};
  for (int trial = 0; trial < 300; ++trial) {
    ModelGraph g = bases[trial % bases.size()];
    const std::string what = Mutate(g, rng);
    EXPECT_THROW(Validate(g), Error) << "trial " << trial << ": " << what;
  }
}

TEST(TopoSortTest, PermutationRespectingEdges) {
  for (const std::string& name : DeskModelNames()) {
    const ModelGraph g = BuildDeskModel(name);
    const std::vector<NodeId> order = TopoSort(g);
    ASSERT_EQ(order.size(), g.nodes.size());
    std::map<NodeId, size_t> pos;
    for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    EXPECT_EQ(pos.size(), g.nodes.size());
    for (const Node& n : g.nodes) {
      for (const ValueRef& r : n.inputs) {
        if (!r.is_graph_input()) {
          EXPECT_LT(pos.at(r.node), pos.at(n.id));
        }
      }
    }
    EXPECT_EQ(order, TopoSort(g));
  }
}

TEST(GraphEditTest, PruneDropsDeadNodesAndParams) {
  GraphBuilder b("dead");
  const ValueRef x = b.Input("x", {1, 4});
  b.Dense(x, "unused", Tensor({2, 4}), std::nullopt);
  const ValueRef y = b.Relu(x);
  ModelGraph g = b.Build({y});
  Prune(g);
  EXPECT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.params.empty());
  EXPECT_EQ(UniqueParamName(g, "w"), "w");
}

}  // namespace
}  // namespace deltadiff
