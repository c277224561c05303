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

#include "deltadiff/report_io.h"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

#include "deltadiff/desk_models.h"
#include "deltadiff/errors.h"
#include "test_util.h"

namespace deltadiff {
namespace {

using nlohmann::json;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class RunRecordTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    graph_ = new ModelGraph(BuildDeskModel("tinynet-A"));
    Corpus corpus = BuildDeskCorpus();
    corpus.images.resize(4);
    RunOptions options;
    options.variant_id = "tinynet-A.native.clean.basic.reference";
    options.repeats = 2;
    options.top_k = 3;
    record_ = new ExecutionRecord(RunDebug(*graph_, corpus, options));
  }
  static void TearDownTestSuite() {
    delete record_;
    delete graph_;
  }
  static ModelGraph* graph_;
  static ExecutionRecord* record_;
};
ModelGraph* RunRecordTest::graph_ = nullptr;
ExecutionRecord* RunRecordTest::record_ = nullptr;

TEST_F(RunRecordTest, RecordLineRoundTrip) {
  for (const ImageResult& r : record_->images) {
    const std::string line = ImageRecordLine(record_->variant_id, r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    const json j = json::parse(line);
    EXPECT_EQ(j.at("variant"), record_->variant_id);
    const ImageResult back = ParseImageRecordLine(line);
    EXPECT_EQ(back.image_id, r.image_id);
    EXPECT_EQ(back.label, r.label);
    EXPECT_EQ(back.top_k, r.top_k);
    EXPECT_TRUE(back.logits.BitwiseEquals(r.logits));
  }
  EXPECT_EQ(CodeOf([] { ParseImageRecordLine("{\"image\": 1"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseImageRecordLine("{\"image\": \"x\"}"); }),
            ErrorCode::kParseError);
}

TEST_F(RunRecordTest, TimingsJsonShape) {
  const json t = json::parse(TimingsJson(*record_));
  EXPECT_EQ(t.at("repeats"), 2);
  ASSERT_EQ(t.at("images").size(), record_->images.size());
  for (const json& img : t.at("images")) {
    EXPECT_EQ(img.at("samples_ns").size(), 2u);
    EXPECT_GT(img.at("cold_ns").get<int64_t>(), 0);
    EXPECT_EQ(img.at("layer_ns").size(), record_->traces[0].size());
  }
}

TEST_F(RunRecordTest, SaveLoadRoundTrip) {
  testing::TempDir dir("record");
  SaveExecutionRecord(dir.path() / "run", *record_);
  const ExecutionRecord back = LoadExecutionRecord(dir.path() / "run");
  EXPECT_EQ(back.variant_id, record_->variant_id);
  EXPECT_EQ(back.top_k, 3);
  ASSERT_EQ(back.images.size(), record_->images.size());
  ASSERT_EQ(back.traces.size(), record_->traces.size());
  for (size_t i = 0; i < back.images.size(); ++i) {
    EXPECT_TRUE(back.images[i].logits.BitwiseEquals(record_->images[i].logits));
    EXPECT_EQ(back.timings[i].samples_ns, record_->timings[i].samples_ns);
    ASSERT_EQ(back.traces[i].size(), record_->traces[i].size());
    for (size_t l = 0; l < back.traces[i].size(); ++l) {
      const TraceEntry& a = back.traces[i][l];
      const TraceEntry& b = record_->traces[i][l];
      EXPECT_EQ(a.layer_index, b.layer_index);
      EXPECT_EQ(a.node, b.node);
      EXPECT_EQ(a.op, b.op);
      EXPECT_EQ(a.duration_ns, b.duration_ns);
      EXPECT_TRUE(a.activation.BitwiseEquals(b.activation));
    }
  }
  // Records are reproducible byte for byte; timing lives elsewhere.
  testing::TempDir again("record");
  SaveExecutionRecord(again.path(), back);
  EXPECT_EQ(ReadTextFile(again.path() / "records.jsonl"),
            ReadTextFile(dir.path() / "run" / "records.jsonl"));
}

TEST_F(RunRecordTest, IncompleteRunIsRejected) {
  testing::TempDir dir("record");
  SaveExecutionRecord(dir.path(), *record_);
  std::vector<std::string> lines =
      Lines(ReadTextFile(dir.path() / "records.jsonl"));
  lines.pop_back();
  std::string text;
  for (const std::string& l : lines) text += l + "\n";
  WriteTextFile(dir.path() / "records.jsonl", text);
  EXPECT_EQ(CodeOf([&] { LoadExecutionRecord(dir.path()); }),
            ErrorCode::kIoError);
  EXPECT_EQ(CodeOf([&] { LoadExecutionRecord(dir.path() / "absent"); }),
            ErrorCode::kIoError);
}

TEST_F(RunRecordTest, WriterLeavesCompleteLines) {
  testing::TempDir dir("record");
  const std::filesystem::path path = dir.path() / "records.jsonl";
  {
    RecordWriter writer(path);
    for (size_t i = 0; i < record_->images.size(); ++i) {
      writer.Append(record_->variant_id, record_->images[i]);
      // Readable mid-run: every line written so far is whole.
      const std::vector<std::string> lines = Lines(ReadTextFile(path));
      ASSERT_EQ(lines.size(), i + 1);
      for (const std::string& l : lines) EXPECT_NO_THROW(ParseImageRecordLine(l));
    }
  }
}

TEST_F(RunRecordTest, DiffReportFiles) {
  const Package pkg{graph_, record_};
  const DiffReport report = BuildDiffReport(pkg, pkg);
  testing::TempDir dir("report");
  SaveDiffReport(dir.path(), report);
  const std::vector<std::string> labels =
      Lines(ReadTextFile(dir.path() / "labels_diff.csv"));
  EXPECT_EQ(labels[0], "image_id,top1_a,top1_b,rbo");
  EXPECT_EQ(labels.size(), record_->images.size() + 1);
  const std::vector<std::string> layers =
      Lines(ReadTextFile(dir.path() / "layer_diff.csv"));
  EXPECT_EQ(layers[0], "layer_index,node_id,mean,max,std");
  EXPECT_EQ(layers.size(), record_->traces[0].size() + 1);
  const json j = json::parse(ReadTextFile(dir.path() / "report.json"));
  EXPECT_EQ(j.at("dissimilarity_pct"), 0.0);
  EXPECT_EQ(j.at("mean_rbo"), 1.0);
}

TEST(VariantsJsonTest, RoundTrip) {
  VariantAxes axes;
  axes.models = {"tinynet-B"};
  axes.dialects = {Dialect::kNative, Dialect::kDenseAsBatchMatmul};
  axes.noise_sigmas = {1e-3f};
  axes.noise_seeds = {4};
  axes.sigma_overrides = {{"fc", 0.0f}};
  axes.disable = {PassId::kFastMath};
  const VariantSet set = EnumerateVariants(axes);
  ASSERT_FALSE(set.failed.empty());
  const std::vector<VariantEntry> entries = VariantEntries(set);
  ASSERT_EQ(entries.size(), set.order.size());
  const std::string text = VariantsJson(entries);
  const std::vector<VariantEntry> back = ParseVariantsJson(text);
  ASSERT_EQ(back.size(), entries.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].spec.id, set.order[i]);
    EXPECT_EQ(back[i].spec.dialect, entries[i].spec.dialect);
    EXPECT_EQ(back[i].spec.disable, entries[i].spec.disable);
    EXPECT_EQ(back[i].ok, entries[i].ok);
    EXPECT_EQ(back[i].error, entries[i].error);
    EXPECT_EQ(back[i].spec.noise.has_value(), entries[i].spec.noise.has_value());
    if (back[i].spec.noise) {
      EXPECT_EQ(back[i].spec.noise->sigma, entries[i].spec.noise->sigma);
      EXPECT_EQ(back[i].spec.noise->seed, 4u);
      EXPECT_EQ(back[i].spec.noise->sigma_overrides.at("fc"), 0.0f);
    }
  }
  EXPECT_EQ(VariantsJson(back), text);
  EXPECT_EQ(CodeOf([] { ParseVariantsJson("[{}]"); }), ErrorCode::kParseError);
}

TEST(MatrixCsvTest, FailedCells) {
  const std::string csv =
      MatrixCsv({"a", "b"}, {{0.0, std::nullopt}, {std::nullopt, 0.0}});
  const std::vector<std::string> lines = Lines(csv);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "source,a,b");
  EXPECT_EQ(lines[1].substr(0, 2), "a,");
  EXPECT_NE(lines[1].find(",FAILED"), std::string::npos);
  EXPECT_NE(lines[2].find("b,FAILED,"), std::string::npos);
}

TEST(AnovaSummaryTest, SkipsVariantsWithoutSamples) {
  const json j = json::parse(AnovaSummaryJson(
      {"a", "b", "c"}, {{1, 2, 3}, {}, {2, 3, 4}}, {}));
  EXPECT_EQ(j.at("variants").size(), 2u);
}

}  // namespace
}  // namespace deltadiff
