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

#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "deltadiff/errors.h"
#include "deltadiff/stats.h"
#include "deltadiff/tensor_io.h"

namespace deltadiff {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kTimingsFile = "timings.json";
constexpr const char* kTraceFile = "trace.bin";

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

Json Parse(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, what + ": " + e.what());
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string TraceName(const std::string& image, const TraceEntry& e) {
  char layer[16];
  std::snprintf(layer, sizeof(layer), "%06lld",
                static_cast<long long>(e.layer_index));
  return image + "/" + layer + "/" + std::to_string(e.node) + "/" +
         std::string(OpKindName(e.op));
}

Json LayerJson(const LayerStats& s) {
  return Json{{"layer_index", s.layer_index},
              {"node", s.node},
              {"op", OpKindName(s.op)},
              {"mean", s.mean},
              {"max", s.max},
              {"std", s.std}};
}

Json TimingJson(const TimingComparison& t) {
  return Json{{"mean_a_ns", t.mean_a}, {"mean_b_ns", t.mean_b},
              {"pct_diff", t.pct_diff}, {"f", t.f},
              {"p", t.p},               {"significant", t.significant}};
}

}  // namespace

void WriteTextFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::string ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string ImageRecordLine(const std::string& variant_id,
                            const ImageResult& result) {
  Json top = Json::array();
  for (const ScoredLabel& s : result.top_k) top.push_back({s.index, s.score});
  Json j{{"variant", variant_id},
         {"image", result.image_id},
         {"label", result.label},
         {"top_k", top},
         {"shape", result.logits.shape()},
         {"logits", std::vector<float>(result.logits.data().begin(),
                                       result.logits.data().end())}};
  return j.dump();
}

ImageResult ParseImageRecordLine(const std::string& line) {
  const Json j = Parse(line, "record line");
  try {
    ImageResult r;
    r.image_id = j.at("image").get<std::string>();
    r.label = j.at("label").get<int64_t>();
    for (const Json& e : j.at("top_k")) {
      r.top_k.push_back({e.at(0).get<int64_t>(), e.at(1).get<float>()});
    }
    r.logits = Tensor(j.at("shape").get<Shape>(),
                      j.at("logits").get<std::vector<float>>());
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("record line: ") + e.what());
  }
}

RecordWriter::RecordWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

void RecordWriter::Append(const std::string& variant_id,
                          const ImageResult& result) {
  out_ << ImageRecordLine(variant_id, result) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIoError, "cannot write " + path_.string());
}

std::string TimingsJson(const ExecutionRecord& record) {
  Json images = Json::array();
  for (size_t i = 0; i < record.timings.size(); ++i) {
    const ImageTiming& t = record.timings[i];
    Json j{{"image", t.image_id},
           {"cold_ns", t.cold_ns},
           {"samples_ns", t.samples_ns}};
    if (i < record.traces.size()) {
      std::vector<int64_t> layers;
      for (const TraceEntry& e : record.traces[i]) layers.push_back(e.duration_ns);
      j["layer_ns"] = layers;
    }
    images.push_back(std::move(j));
  }
  return Dump(Json{{"variant", record.variant_id},
                   {"top_k", record.top_k},
                   {"repeats", record.repeats},
                   {"warmup", record.warmup},
                   {"images", images}});
}

void SaveTraces(const fs::path& path, const ExecutionRecord& record) {
  std::map<std::string, Tensor> named;
  for (size_t i = 0; i < record.traces.size(); ++i) {
    for (const TraceEntry& e : record.traces[i]) {
      named.emplace(TraceName(record.images[i].image_id, e), e.activation);
    }
  }
  SaveNamedTensorsFile(path, named);
}

void SaveExecutionRecord(const fs::path& dir, const ExecutionRecord& record) {
  {
    RecordWriter writer(dir / kRecordsFile);
    for (const ImageResult& r : record.images) writer.Append(record.variant_id, r);
  }
  WriteTextFile(dir / kTimingsFile, TimingsJson(record));
  if (!record.traces.empty()) SaveTraces(dir / kTraceFile, record);
}

ExecutionRecord LoadExecutionRecord(const fs::path& dir) {
  ExecutionRecord record;
  std::istringstream lines(ReadTextFile(dir / kRecordsFile));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const Json j = Parse(line, "record line");
    record.variant_id = j.value("variant", std::string());
    record.images.push_back(ParseImageRecordLine(line));
  }
  const Json t = Parse(ReadTextFile(dir / kTimingsFile), "timings.json");
  std::map<std::string, std::vector<int64_t>> layer_ns;
  try {
    record.variant_id = t.at("variant").get<std::string>();
    record.top_k = t.at("top_k").get<int>();
    record.repeats = t.at("repeats").get<int>();
    record.warmup = t.at("warmup").get<int>();
    for (const Json& img : t.at("images")) {
      ImageTiming timing;
      timing.image_id = img.at("image").get<std::string>();
      timing.cold_ns = img.at("cold_ns").get<int64_t>();
      timing.samples_ns = img.at("samples_ns").get<std::vector<int64_t>>();
      if (img.contains("layer_ns")) {
        layer_ns[timing.image_id] =
            img.at("layer_ns").get<std::vector<int64_t>>();
      }
      record.timings.push_back(std::move(timing));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("timings.json: ") + e.what());
  }
  if (record.timings.size() != record.images.size()) {
    throw Error(ErrorCode::kIoError,
                dir.string() + ": records and timings disagree (incomplete run)");
  }
  if (fs::exists(dir / kTraceFile)) {
    const std::map<std::string, Tensor> named =
        LoadNamedTensorsFile(dir / kTraceFile);
    std::map<std::string, std::vector<TraceEntry>> by_image;
    for (const auto& [name, tensor] : named) {
      // <image>/<layer>/<node>/<op>; image ids may not contain '/'.
      std::vector<std::string> parts;
      std::stringstream ss(name);
      std::string part;
      while (std::getline(ss, part, '/')) parts.push_back(part);
      std::optional<OpKind> op =
          parts.size() == 4 ? ParseOpKind(parts[3]) : std::nullopt;
      if (!op) throw Error(ErrorCode::kParseError, "bad trace name " + name);
      TraceEntry e;
      e.layer_index = std::stoll(parts[1]);
      e.node = static_cast<NodeId>(std::stoul(parts[2]));
      e.op = *op;
      e.activation = tensor;
      by_image[parts[0]].push_back(std::move(e));
    }
    for (const ImageResult& r : record.images) {
      std::vector<TraceEntry> trace = std::move(by_image[r.image_id]);
      const std::vector<int64_t>& ns = layer_ns[r.image_id];
      for (size_t l = 0; l < trace.size() && l < ns.size(); ++l) {
        trace[l].duration_ns = ns[l];
      }
      record.traces.push_back(std::move(trace));
    }
  }
  return record;
}

std::vector<VariantEntry> VariantEntries(const VariantSet& set) {
  std::map<std::string, VariantEntry> by_id;
  for (const Variant& v : set.variants) {
    by_id[v.spec.id] = VariantEntry{v.spec, v.model, true, "", ""};
  }
  for (const FailedVariant& f : set.failed) {
    by_id[f.spec.id] = VariantEntry{f.spec, f.model, false,
                                    std::string(ErrorCodeName(f.code)),
                                    f.message};
  }
  std::vector<VariantEntry> out;
  for (const std::string& id : set.order) out.push_back(by_id.at(id));
  return out;
}

std::string VariantsJson(const std::vector<VariantEntry>& entries) {
  Json list = Json::array();
  for (const VariantEntry& e : entries) {
    const VariantSpec& s = e.spec;
    Json noise = nullptr;
    if (s.noise) {
      noise = Json{{"sigma", s.noise->sigma},
                   {"clamp", s.noise->clamp},
                   {"seed", s.noise->seed}};
      if (!s.noise->sigma_overrides.empty()) {
        noise["sigma_overrides"] = s.noise->sigma_overrides;
      }
    }
    std::vector<std::string> enable, disable;
    for (PassId p : s.enable) enable.emplace_back(PassName(p));
    for (PassId p : s.disable) disable.emplace_back(PassName(p));
    Json j{{"id", s.id},
           {"model", e.model},
           {"source", s.source},
           {"dialect", DialectName(s.dialect)},
           {"noise", noise},
           {"level", OptLevelName(s.level)},
           {"enable", enable},
           {"disable", disable},
           {"backend", BackendName(s.backend)},
           {"status", e.ok ? "ok" : "failed"}};
    if (!e.ok) {
      j["error"] = e.error;
      j["message"] = e.message;
    }
    list.push_back(std::move(j));
  }
  return Dump(Json{{"variants", list}});
}

std::vector<VariantEntry> ParseVariantsJson(const std::string& text) {
  const Json doc = Parse(text, "variants.json");
  std::vector<VariantEntry> out;
  try {
    for (const Json& j : doc.at("variants")) {
      VariantEntry e;
      e.spec.id = j.at("id").get<std::string>();
      e.model = j.at("model").get<std::string>();
      e.spec.source = j.at("source").get<std::string>();
      const auto dialect = ParseDialect(j.at("dialect").get<std::string>());
      const auto level = ParseOptLevel(j.at("level").get<std::string>());
      const auto backend = ParseBackend(j.at("backend").get<std::string>());
      if (!dialect || !level || !backend) {
        throw Error(ErrorCode::kParseError,
                    "variants.json: bad enum in " + e.spec.id);
      }
      e.spec.dialect = *dialect;
      e.spec.level = *level;
      e.spec.backend = *backend;
      if (!j.at("noise").is_null()) {
        NoiseSpec n;
        n.sigma = j["noise"].at("sigma").get<float>();
        n.clamp = j["noise"].at("clamp").get<float>();
        n.seed = j["noise"].at("seed").get<uint64_t>();
        if (j["noise"].contains("sigma_overrides")) {
          n.sigma_overrides =
              j["noise"]["sigma_overrides"].get<std::map<std::string, float>>();
        }
        e.spec.noise = n;
      }
      for (const std::string& p : j.at("enable").get<std::vector<std::string>>()) {
        if (auto id = ParsePassId(p)) e.spec.enable.push_back(*id);
      }
      for (const std::string& p : j.at("disable").get<std::vector<std::string>>()) {
        if (auto id = ParsePassId(p)) e.spec.disable.push_back(*id);
      }
      e.ok = j.at("status").get<std::string>() == "ok";
      if (!e.ok) {
        e.error = j.at("error").get<std::string>();
        e.message = j.at("message").get<std::string>();
      }
      out.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("variants.json: ") + e.what());
  }
  return out;
}

std::string DiffReportJson(const DiffReport& r) {
  Json per_class = Json::array();
  for (const ClassBreakdown& c : r.per_class) {
    per_class.push_back({{"class_index", c.class_index},
                         {"label", c.label},
                         {"affected", c.affected},
                         {"total", c.total},
                         {"pct", c.pct}});
  }
  const Localization& loc = r.localization;
  Json layers = Json::array();
  for (const LayerStats& s : loc.layers) layers.push_back(LayerJson(s));
  Json params = nullptr;
  if (loc.params) {
    params = Json{{"mean", loc.params->mean},
                  {"max", loc.params->max},
                  {"count", loc.params->count},
                  {"elements", loc.params->elements}};
  }
  Json j{{"variant_a", r.variant_a},
         {"variant_b", r.variant_b},
         {"dissimilarity_pct", r.dissimilarity_pct},
         {"mean_rbo", r.mean_rbo},
         {"rbo_k", r.top_k},
         {"rbo_p", r.rbo_p},
         {"per_class", per_class},
         {"verdict", VerdictName(loc.verdict)},
         {"reason", loc.reason},
         {"structure_match", loc.structure_match},
         {"parameter_diff", params},
         {"onset_layer", loc.onset_layer ? Json(*loc.onset_layer) : Json()},
         {"layers", layers}};
  return Dump(j);
}

std::string LabelsDiffCsv(const DiffReport& r) {
  std::string out = "image_id,top1_a,top1_b,rbo\n";
  for (const LabelRow& row : r.labels) {
    out += row.image_id + "," + std::to_string(row.top1_a) + "," +
           std::to_string(row.top1_b) + "," + FormatDouble(row.rbo) + "\n";
  }
  return out;
}

std::string LayerDiffCsv(const DiffReport& r) {
  std::string out = "layer_index,node_id,mean,max,std\n";
  for (const LayerStats& s : r.localization.layers) {
    out += std::to_string(s.layer_index) + "," + std::to_string(s.node) + "," +
           FormatDouble(s.mean) + "," + FormatDouble(s.max) + "," +
           FormatDouble(s.std) + "\n";
  }
  return out;
}

void SaveDiffReport(const fs::path& dir, const DiffReport& report) {
  WriteTextFile(dir / "report.json", DiffReportJson(report));
  WriteTextFile(dir / "labels_diff.csv", LabelsDiffCsv(report));
  WriteTextFile(dir / "layer_diff.csv", LayerDiffCsv(report));
}

std::string MatrixCsv(
    const std::vector<std::string>& ids,
    const std::vector<std::vector<std::optional<double>>>& cells) {
  std::string out = "source";
  for (const std::string& id : ids) out += "," + id;
  out += "\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (size_t j = 0; j < ids.size(); ++j) {
      out += ",";
      out += cells[i][j] ? FormatDouble(*cells[i][j]) : "FAILED";
    }
    out += "\n";
  }
  return out;
}

std::string AnovaSummaryJson(const std::vector<std::string>& ids,
                             const std::vector<std::vector<double>>& samples,
                             const std::vector<DiffReport>& reports) {
  Json variants = Json::array();
  std::vector<std::vector<double>> groups;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (samples[i].empty()) continue;
    variants.push_back({{"id", ids[i]},
                        {"samples", samples[i].size()},
                        {"mean_ns", Mean(samples[i])}});
    groups.push_back(samples[i]);
  }
  Json overall = nullptr;
  try {
    const AnovaResult a = OneWayAnova(groups);
    overall = Json{{"f", a.f},
                   {"p", a.p},
                   {"df_between", a.df_between},
                   {"df_within", a.df_within},
                   {"significant", a.p < 0.05}};
  } catch (const Error& e) {
    overall = Json{{"error", ErrorCodeName(e.code())}, {"message", e.what()}};
  }
  Json pairs = Json::array();
  for (const DiffReport& r : reports) {
    if (!r.timing) continue;
    Json j = TimingJson(*r.timing);
    j["variant_a"] = r.variant_a;
    j["variant_b"] = r.variant_b;
    pairs.push_back(std::move(j));
  }
  return Dump(Json{{"alpha", 0.05},
                   {"variants", variants},
                   {"anova", overall},
                   {"pairs", pairs}});
}

}  // namespace deltadiff
