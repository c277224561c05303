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

#include "deltadiff/analysis.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "deltadiff/desk_models.h"
#include "deltadiff/errors.h"
#include "deltadiff/executor.h"
#include "deltadiff/optimizer.h"
#include "deltadiff/variantgen.h"
#include "oracle/metrics_oracle.h"
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

// Record whose image i has top-1 label top1[i].
ExecutionRecord RecordWithTop1(const std::vector<int64_t>& top1) {
  ExecutionRecord r;
  r.top_k = 1;
  for (size_t i = 0; i < top1.size(); ++i) {
    ImageResult img;
    img.image_id = "img_" + std::to_string(i);
    img.label = static_cast<int64_t>(i % 3);
    img.top_k = {{top1[i], 1.0f}};
    r.images.push_back(img);
  }
  return r;
}

TEST(CompareLabelsTest, Examples) {
  const std::vector<int64_t> base(50, 1);
  EXPECT_EQ(CompareLabels(RecordWithTop1(base), RecordWithTop1(base)), 0.0);
  EXPECT_EQ(CompareLabels(RecordWithTop1(base),
                          RecordWithTop1(std::vector<int64_t>(50, 2))),
            100.0);
  std::vector<int64_t> two = base;
  two[4] = two[31] = 7;
  EXPECT_DOUBLE_EQ(CompareLabels(RecordWithTop1(base), RecordWithTop1(two)),
                   4.0);
}

TEST(CompareLabelsTest, MismatchedImages) {
  ExecutionRecord a = RecordWithTop1({1, 2, 3});
  ExecutionRecord b = RecordWithTop1({1, 2});
  EXPECT_EQ(CodeOf([&] { CompareLabels(a, b); }), ErrorCode::kCorpusMismatch);
  b = RecordWithTop1({1, 2, 3});
  b.images[1].image_id = "other";
  EXPECT_EQ(CodeOf([&] { CompareLabels(a, b); }), ErrorCode::kCorpusMismatch);
}

TEST(RboTest, Examples) {
  const std::vector<int64_t> x = {3, 1, 4, 5, 9};
  for (double p : {0.1, 0.5, 0.9, 0.99}) EXPECT_DOUBLE_EQ(Rbo(x, x, p), 1.0);
  const std::vector<int64_t> y = {0, 2, 6, 7, 8};
  EXPECT_EQ(Rbo(x, y, 0.9), 0.0);
  const std::vector<int64_t> a = {0, 1, 2}, b = {1, 0, 2};
  EXPECT_NEAR(Rbo(a, b, 0.9), 0.6310, 1e-4);
}

TEST(RboTest, Errors) {
  const std::vector<int64_t> a = {0, 1}, b = {1, 0}, c = {1};
  for (double p : {0.0, 1.0, -0.5, 1.5, std::nan("")}) {
    EXPECT_EQ(CodeOf([&] { Rbo(a, b, p); }), ErrorCode::kInvalidP) << p;
  }
  EXPECT_EQ(CodeOf([&] { Rbo(a, c, 0.9); }), ErrorCode::kPrecondition);
}

TEST(RboTest, MonotoneInBreakDepth) {
  // Breaking the shared prefix earlier never raises RBO.
  const std::vector<int64_t> a = {0, 1, 2, 3, 4, 5, 6, 7};
  for (double p : {0.5, 0.9}) {
    double prev = -1.0;
    for (size_t depth = 0; depth <= a.size(); ++depth) {
      std::vector<int64_t> b = a;
      for (size_t i = depth; i < b.size(); ++i) b[i] = 100 + i;
      const double r = Rbo(a, b, p);
      EXPECT_GE(r, prev);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
      prev = r;
    }
    EXPECT_DOUBLE_EQ(prev, 1.0);
  }
}

TEST(MetricsOracleTest, RandomRecordPairs) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    auto [a, b] = oracle::RandomRecordPair(rng, 1 + trial % 40, 10, 5);
    std::vector<int64_t> ta, tb, truth;
    for (size_t i = 0; i < a.images.size(); ++i) {
      ta.push_back(Top1(a.images[i]));
      tb.push_back(Top1(b.images[i]));
      truth.push_back(a.images[i].label);
    }
    EXPECT_NEAR(CompareLabels(a, b), oracle::BruteDissimilarity(ta, tb),
                1e-12);
    EXPECT_EQ(CompareLabels(a, b), CompareLabels(b, a));
    const std::vector<double> rbo = PerImageRbo(a, b, 0.9);
    for (size_t i = 0; i < a.images.size(); ++i) {
      EXPECT_NEAR(rbo[i],
                  oracle::BruteRbo(oracle::Ranking(a.images[i]),
                                   oracle::Ranking(b.images[i]), 0.9),
                  1e-12);
    }
    const auto got = PerClassBreakdown(a, b, {});
    const auto want = oracle::BrutePerClass(truth, ta, tb);
    ASSERT_EQ(got.size(), want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].class_index, want[i].cls);
      EXPECT_EQ(got[i].affected, want[i].affected);
      EXPECT_EQ(got[i].total, want[i].total);
      EXPECT_DOUBLE_EQ(got[i].pct, 100.0 * want[i].affected / want[i].total);
    }
  }
}

TEST(PerClassTest, Examples) {
  ExecutionRecord a = RecordWithTop1({0, 0, 0, 0, 0, 0});
  const auto none = PerClassBreakdown(a, a, {"x", "y", "z"});
  ASSERT_EQ(none.size(), 3u);
  for (const ClassBreakdown& c : none) EXPECT_EQ(c.pct, 0.0);
  ExecutionRecord b = a;
  b.images[1].top_k[0].index = 5;  // class 1
  b.images[4].top_k[0].index = 5;  // class 1
  const auto hit = PerClassBreakdown(a, b, {"x", "y", "z"});
  EXPECT_EQ(hit[0].class_index, 1);
  EXPECT_EQ(hit[0].label, "y");
  EXPECT_EQ(hit[0].pct, 100.0);
  EXPECT_EQ(hit[1].pct, 0.0);
}

TraceEntry Entry(int64_t layer, OpKind op, Tensor t) {
  TraceEntry e;
  e.layer_index = layer;
  e.node = static_cast<NodeId>(layer);
  e.op = op;
  e.activation = std::move(t);
  return e;
}

TEST(ActivationDiffTest, Examples) {
  const std::vector<TraceEntry> a = {Entry(0, OpKind::kReLU, Tensor({2}, {1, 2}))};
  const std::vector<TraceEntry> b = {
      Entry(0, OpKind::kReLU, Tensor({2}, {1.5f, 2.5f}))};
  const auto same = ActivationDiff(a, a);
  EXPECT_EQ(same[0].mean, 0.0);
  EXPECT_EQ(same[0].max, 0.0);
  EXPECT_EQ(same[0].std, 0.0);
  const auto d = ActivationDiff(a, b);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d[0].mean, 0.5);
  EXPECT_DOUBLE_EQ(d[0].max, 0.5);
  EXPECT_DOUBLE_EQ(d[0].std, 0.0);
  EXPECT_EQ(d[0].count, 2);
}

TEST(ActivationDiffTest, Mismatches) {
  const std::vector<TraceEntry> a = {Entry(0, OpKind::kReLU, Tensor({2}))};
  const std::vector<TraceEntry> b = {Entry(0, OpKind::kSoftmax, Tensor({2}))};
  const std::vector<TraceEntry> c = {Entry(0, OpKind::kReLU, Tensor({3}))};
  EXPECT_EQ(CodeOf([&] { ActivationDiff(a, b); }), ErrorCode::kTraceMismatch);
  EXPECT_EQ(CodeOf([&] { ActivationDiff(a, c); }), ErrorCode::kTraceMismatch);
  EXPECT_EQ(CodeOf([&] { ActivationDiff(a, {}); }), ErrorCode::kTraceMismatch);
}

TEST(ActivationDiffTest, ZeroIffBitwiseEqual) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = testing::RandomTensor({7}, rng);
    Tensor y = x;
    if (trial % 2) y[trial % 7] = std::nextafter(y[trial % 7], 2.0f);
    const auto d = ActivationDiff({Entry(0, OpKind::kReLU, x)},
                                  {Entry(0, OpKind::kReLU, y)});
    EXPECT_GE(d[0].mean, 0.0);
    EXPECT_GE(d[0].std, 0.0);
    EXPECT_EQ(d[0].max == 0.0, x.BitwiseEquals(y));
  }
}

TEST(ParameterDiffTest, IdenticalAndMismatched) {
  const ModelGraph g = BuildDeskModel(kTinyNetA);
  const ParamDiff same = ParameterDiff(g, g);
  EXPECT_EQ(same.mean, 0.0);
  EXPECT_EQ(same.max, 0.0);
  EXPECT_EQ(same.count, 0);
  EXPECT_GT(same.elements, 0);
  const ModelGraph c = BuildDeskModel(kTinyNetC);
  EXPECT_EQ(CodeOf([&] { ParameterDiff(g, c); }),
            ErrorCode::kParamMapMismatch);
}

TEST(ParameterDiffTest, CalibratedNoise) {
  const ModelGraph g = BuildDeskModel(kTinyNetA);
  const ParamDiff d = ParameterDiff(g, InjectNoise(g, 3.75e-4f, 0.011f, 1));
  EXPECT_GE(d.mean, 2e-4);
  EXPECT_LE(d.mean, 4e-4);
  EXPECT_LE(d.max, 0.011);
  EXPECT_EQ(d.count, d.elements);
}

class LocalizeTest : public ::testing::Test {
 protected:
  struct Run {
    ModelGraph graph;
    ExecutionRecord record;
    Package package() const { return {&graph, &record}; }
  };

  static Run Execute(ModelGraph g) {
    RunOptions o;
    o.repeats = 1;
    Run r{std::move(g), {}};
    r.record = RunDebug(r.graph, *corpus_, o);
    return r;
  }

  static void SetUpTestSuite() {
    corpus_ = new Corpus(BuildDeskCorpus());
    source_ = new Run(Execute(BuildDeskModel(kTinyNetA)));
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete source_;
  }

  static Corpus* corpus_;
  static Run* source_;
};

Corpus* LocalizeTest::corpus_ = nullptr;
LocalizeTest::Run* LocalizeTest::source_ = nullptr;

TEST_F(LocalizeTest, SelfPairHasNoDivergence) {
  const Localization loc = Localize(source_->package(), source_->package());
  EXPECT_EQ(loc.verdict, Verdict::kNoDivergence);
  EXPECT_FALSE(loc.onset_layer);
}

TEST_F(LocalizeTest, NoiseIsParameterDivergence) {
  const Run noisy =
      Execute(InjectNoise(source_->graph, 3.75e-4f, 0.011f, 1));
  const Localization loc = Localize(source_->package(), noisy.package());
  EXPECT_EQ(loc.verdict, Verdict::kParameterDivergence);
  ASSERT_TRUE(loc.onset_layer);
  EXPECT_EQ(*loc.onset_layer, 0);
  ASSERT_TRUE(loc.params);
  EXPECT_GT(loc.params->count, 0);
}

TEST_F(LocalizeTest, ConversionIsStructuralDivergence) {
  const Run converted =
      Execute(Convert(source_->graph, Dialect::kDenseAsBatchMatmul));
  const Localization loc = Localize(source_->package(), converted.package());
  EXPECT_EQ(loc.verdict, Verdict::kGraphStructureDivergence);
  EXPECT_FALSE(loc.structure_match);
}

TEST_F(LocalizeTest, CanonicalizationIsStructurallyNeutral) {
  const ModelGraph& g = source_->graph;
  EXPECT_TRUE(StructurallyMatch(g, ApplyPass(g, PassId::kCanonicalizeOps)));
  // The converted head keeps its separate bias Add after canonicalization.
  EXPECT_FALSE(
      StructurallyMatch(g, Convert(g, Dialect::kDenseAsBatchMatmul)));
}

TEST_F(LocalizeTest, FastMathIsActivationOnly) {
  const Run fast = Execute(ApplyPass(source_->graph, PassId::kFastMath));
  AnalysisOptions strict;
  strict.theta = 0.0;
  const Localization loc =
      Localize(source_->package(), fast.package(), strict);
  EXPECT_EQ(loc.verdict, Verdict::kActivationOnlyDivergence);
  EXPECT_TRUE(loc.structure_match);
  EXPECT_EQ(loc.params->count, 0);
}

TEST_F(LocalizeTest, RepairConvergesForEverySeed) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelGraph noisy =
        InjectNoise(source_->graph, 3.75e-4f, 0.011f, seed);
    const Run fixed = Execute(RepairParameters(noisy, source_->graph));
    EXPECT_EQ(Localize(source_->package(), fixed.package()).verdict,
              Verdict::kNoDivergence)
        << seed;
    EXPECT_EQ(CompareLabels(source_->record, fixed.record), 0.0);
  }
}

TEST_F(LocalizeTest, ErrorsAccumulateThroughTheNetwork) {
  // On every image whose top-1 label flips, the last layer differs at least
  // as much as the first.
  int divergent = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Run noisy =
        Execute(InjectNoise(source_->graph, 3.75e-4f, 0.011f, seed));
    for (size_t i = 0; i < corpus_->images.size(); ++i) {
      if (Top1(noisy.record.images[i]) ==
          Top1(source_->record.images[i])) {
        continue;
      }
      ++divergent;
      const auto d =
          ActivationDiff(source_->record.traces[i], noisy.record.traces[i]);
      EXPECT_GE(d.back().mean, d.front().mean) << seed << " " << i;
    }
  }
  EXPECT_GT(divergent, 0);
}

TEST_F(LocalizeTest, DiffReportFields) {
  const Run noisy =
      Execute(InjectNoise(source_->graph, 3.75e-4f, 0.011f, 1));
  const DiffReport r = BuildDiffReport(source_->package(), noisy.package());
  EXPECT_EQ(r.labels.size(), corpus_->images.size());
  EXPECT_EQ(r.dissimilarity_pct,
            CompareLabels(source_->record, noisy.record));
  EXPECT_GT(r.dissimilarity_pct, 0.0);
  EXPECT_LT(r.mean_rbo, 1.0);
  EXPECT_EQ(r.localization.verdict, Verdict::kParameterDivergence);
  EXPECT_EQ(r.localization.layers.size(), source_->record.traces[0].size());
  EXPECT_EQ(VerdictName(r.localization.verdict), "ParameterDivergence");
}

}  // namespace
}  // namespace deltadiff
