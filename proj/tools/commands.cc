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

#include "commands.h"

#include <algorithm>
#include <functional>
#include <cstdio>
#include <map>
#include <set>

#include "deltadiff/analysis.h"
#include "deltadiff/config.h"
#include "deltadiff/desk_models.h"
#include "deltadiff/executor.h"
#include "deltadiff/model_io.h"
#include "deltadiff/report_io.h"
#include "deltadiff/variantgen.h"

namespace deltadiff::cli {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kDemoSeeds[] = {1, 2, 3, 4, 5};
constexpr float kDemoSigma = 3.75e-4f;
constexpr float kDemoClamp = 0.011f;

// An input the command needs but that an earlier stage did not produce.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path ModelPath(const fs::path& root, const std::string& id) {
  return root / "variants" / id / "model.json";
}

fs::path RunDir(const fs::path& root, const std::string& id) {
  return root / "runs" / id;
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

ExperimentConfig LoadEffectiveConfig(const CommandOptions& options) {
  ExperimentConfig config = LoadConfig(options.config);
  if (options.seed) ApplySeed(config, *options.seed);
  if (options.out) config.out_dir = options.out->string();
  return config;
}

RunOptions MakeRunOptions(const ExperimentConfig& config,
                          const VariantEntry& entry) {
  RunOptions r;
  r.variant_id = entry.spec.id;
  r.backend = entry.spec.backend;
  r.preprocess = config.preprocess;
  r.top_k = config.top_k;
  r.repeats = config.repeats;
  r.warmup = config.warmup;
  r.threads = config.threads;
  r.trace_budget_bytes = config.trace_budget_bytes;
  return r;
}

std::vector<VariantEntry> LoadVariantList(const fs::path& root) {
  const fs::path path = root / "variants.json";
  if (!fs::exists(path)) {
    throw MissingInput(path.string() + " not found; run 'generate' first");
  }
  return ParseVariantsJson(ReadTextFile(path));
}

// Runs one variant, streaming record lines as images complete.
ExecutionRecord RunVariant(const ModelGraph& graph, const Corpus& corpus,
                           RunOptions options, bool debug,
                           const fs::path& dir) {
  fs::create_directories(dir);
  fs::remove(dir / "timings.json");
  fs::remove(dir / "trace.bin");
  RecordWriter writer(dir / "records.jsonl");
  options.on_image = [&](const ImageResult& r, const ImageTiming&) {
    writer.Append(options.variant_id, r);
  };
  ExecutionRecord record = debug ? RunDebug(graph, corpus, options)
                                 : RunInference(graph, corpus, options);
  WriteTextFile(dir / "timings.json", TimingsJson(record));
  if (debug) SaveTraces(dir / "trace.bin", record);
  return record;
}

int Guard(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissingInputs;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitCorpus;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

std::string PairDirName(const std::string& a, const std::string& b) {
  return a + "__" + b;
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidP:
    case ErrorCode::kZeroStd:
      return kExitConfig;
    case ErrorCode::kCorpusError:
    case ErrorCode::kIoError:
    case ErrorCode::kCorpusMismatch:
      return kExitCorpus;
    default:
      return kExitInternal;
  }
}

int Generate(const CommandOptions& options, std::ostream& out,
             std::ostream& err) {
  return Guard(err, [&] {
    const ExperimentConfig config = LoadEffectiveConfig(options);
    const VariantSet set = EnumerateVariants(config.axes);
    const fs::path root = config.out_dir;
    for (const Variant& v : set.variants) {
      SaveModel(v.graph, ModelPath(root, v.spec.id));
      out << "generated " << v.spec.id << " (" << v.graph.nodes.size()
          << " nodes)\n";
    }
    for (const FailedVariant& f : set.failed) {
      out << "failed    " << f.spec.id << ": " << ErrorCodeName(f.code)
          << "\n";
    }
    WriteTextFile(root / "variants.json", VariantsJson(VariantEntries(set)));
    out << set.variants.size() << " variants, " << set.failed.size()
        << " failed\n";
    return kExitOk;
  });
}

int Run(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    const ExperimentConfig config = LoadEffectiveConfig(options);
    const fs::path root = config.out_dir;
    const std::vector<VariantEntry> entries = LoadVariantList(root);
    const Corpus corpus = ResolveCorpus(config.corpus);
    size_t records = 0;
    for (const VariantEntry& e : entries) {
      if (!e.ok) continue;
      const fs::path manifest = ModelPath(root, e.spec.id);
      if (!fs::exists(manifest)) {
        throw MissingInput(manifest.string() + " not found");
      }
      const ModelGraph graph = LoadModel(manifest);
      const ExecutionRecord record =
          RunVariant(graph, corpus, MakeRunOptions(config, e), options.debug,
                     RunDir(root, e.spec.id));
      records += record.images.size();
      out << "ran " << e.spec.id << " on " << record.images.size()
          << " images" << (options.debug ? " (debug)" : "") << "\n";
    }
    out << records << " records\n";
    return kExitOk;
  });
}

int Analyze(const CommandOptions& options, std::ostream& out,
            std::ostream& err) {
  return Guard(err, [&] {
    const ExperimentConfig config = LoadEffectiveConfig(options);
    const fs::path root = config.out_dir;
    const std::vector<VariantEntry> entries = LoadVariantList(root);

    std::vector<std::string> ids;
    std::map<std::string, const VariantEntry*> by_id;
    std::map<std::string, ModelGraph> graphs;
    std::map<std::string, ExecutionRecord> records;
    for (const VariantEntry& e : entries) {
      ids.push_back(e.spec.id);
      by_id[e.spec.id] = &e;
      if (!e.ok) continue;
      const fs::path run = RunDir(root, e.spec.id);
      if (!fs::exists(run / "records.jsonl") ||
          !fs::exists(run / "timings.json")) {
        throw MissingInput("no complete records for " + e.spec.id +
                           "; run 'run' first");
      }
      graphs.emplace(e.spec.id, LoadModel(ModelPath(root, e.spec.id)));
      records.emplace(e.spec.id, LoadExecutionRecord(run));
    }

    std::vector<std::pair<std::string, std::string>> pairs = config.pairs;
    for (const std::string& p : options.pairs) {
      const size_t colon = p.find(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::kConfigError, "--pair must be A:B, got " + p);
      }
      pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
    }
    if (pairs.empty()) {
      // Every variant against its model's baseline.
      std::map<std::string, std::string> baseline;
      if (!config.baseline.empty()) {
        if (!records.contains(config.baseline)) {
          throw MissingInput("baseline " + config.baseline + " has no records");
        }
        baseline[by_id[config.baseline]->model] = config.baseline;
      }
      for (const VariantEntry& e : entries) {
        if (e.ok && !baseline.contains(e.model)) baseline[e.model] = e.spec.id;
      }
      for (const VariantEntry& e : entries) {
        if (!e.ok) continue;
        const std::string& base = baseline[e.model];
        if (base != e.spec.id) pairs.emplace_back(base, e.spec.id);
      }
    }

    AnalysisOptions analysis;
    analysis.rbo_p = config.rbo_p;
    analysis.theta = config.theta;
    std::vector<DiffReport> reports;
    for (const auto& [a, b] : pairs) {
      for (const std::string& id : {a, b}) {
        if (!by_id.contains(id)) {
          throw Error(ErrorCode::kConfigError, "unknown variant " + id);
        }
        if (!records.contains(id)) {
          throw MissingInput("variant " + id + " failed to generate");
        }
      }
      DiffReport report = BuildDiffReport({&graphs.at(a), &records.at(a)},
                                          {&graphs.at(b), &records.at(b)},
                                          analysis);
      SaveDiffReport(root / "reports" / PairDirName(a, b), report);
      out << a << " vs " << b << ": "
          << Fmt("%.2f", report.dissimilarity_pct) << "% labels differ, "
          << VerdictName(report.localization.verdict) << "\n";
      reports.push_back(std::move(report));
    }

    std::vector<std::vector<std::optional<double>>> cells(
        ids.size(), std::vector<std::optional<double>>(ids.size()));
    for (size_t i = 0; i < ids.size(); ++i) {
      for (size_t j = 0; j < ids.size(); ++j) {
        if (records.contains(ids[i]) && records.contains(ids[j])) {
          cells[i][j] = CompareLabels(records.at(ids[i]), records.at(ids[j]));
        }
      }
    }
    WriteTextFile(root / "reports" / "matrix.csv", MatrixCsv(ids, cells));

    std::vector<std::vector<double>> samples;
    for (const std::string& id : ids) {
      samples.push_back(records.contains(id) ? TimingSamples(records.at(id))
                                             : std::vector<double>{});
    }
    WriteTextFile(root / "reports" / "anova.json",
                  AnovaSummaryJson(ids, samples, reports));
    out << reports.size() << " reports written to "
        << (root / "reports").string() << "\n";
    return kExitOk;
  });
}

int Demo(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    const fs::path root = options.out.value_or("deltadiff-demo");
    const std::string model(kTinyNetA);
    const ModelGraph source_model = BuildDeskModel(model);
    const Corpus corpus = BuildDeskCorpus();

    VariantSpec source_spec;
    source_spec.source = model;
    source_spec.id = MakeVariantId(model, source_spec);
    const ModelGraph source = MaterializeVariant(source_model, source_spec);

    RunOptions run;
    run.repeats = 3;
    auto execute = [&](const ModelGraph& g, const std::string& id) {
      SaveModel(g, ModelPath(root, id));
      RunOptions o = run;
      o.variant_id = id;
      return RunVariant(g, corpus, o, /*debug=*/true, RunDir(root, id));
    };

    out << "DeltaDiff fault-analysis walkthrough\n";
    out << "model " << model << ", corpus " << kDeskCorpusName << " ("
        << corpus.images.size() << " images), level "
        << OptLevelName(source_spec.level) << "\n\n";
    out << "[1] source run\n";
    const ExecutionRecord source_record = execute(source, source_spec.id);
    out << "    " << source_spec.id << ": " << source_record.images.size()
        << " images classified\n\n";

    // Inject conversion noise; without an explicit seed, take the first of
    // the fixed seeds whose noise changes at least one label.
    std::vector<uint64_t> seeds(std::begin(kDemoSeeds), std::end(kDemoSeeds));
    if (options.seed) seeds = {*options.seed};
    VariantSpec noisy_spec = source_spec;
    ModelGraph noisy;
    ExecutionRecord noisy_record;
    double dissimilarity = 0.0;
    out << "[2] inject conversion noise (sigma " << Fmt("%.2e", kDemoSigma)
        << ", clamp " << Fmt("%.3f", kDemoClamp) << ")\n";
    for (uint64_t seed : seeds) {
      noisy_spec.noise = NoiseSpec{kDemoSigma, kDemoClamp, seed, {}};
      noisy_spec.id = MakeVariantId(model, noisy_spec);
      noisy = MaterializeVariant(source_model, noisy_spec);
      RunOptions o = run;
      o.variant_id = noisy_spec.id;
      const ExecutionRecord labels = RunInference(noisy, corpus, o);
      dissimilarity = CompareLabels(source_record, labels);
      out << "    seed " << seed << ": " << Fmt("%.2f", dissimilarity)
          << "% of top-1 labels differ\n";
      if (dissimilarity > 0.0) break;
    }
    noisy_record = execute(noisy, noisy_spec.id);
    // The injected fault itself, measured before optimization rescales it.
    const ParamDiff pd = ParameterDiff(
        source_model, InjectNoise(source_model, *noisy_spec.noise));
    out << "    injected parameter |delta|: mean " << Fmt("%.3e", pd.mean) << ", max "
        << Fmt("%.3e", pd.max) << ", " << pd.count << " of " << pd.elements
        << " elements changed\n\n";

    out << "[3] localize\n";
    const DiffReport report = BuildDiffReport(
        {&source, &source_record}, {&noisy, &noisy_record}, {});
    SaveDiffReport(root / "reports" / PairDirName(source_spec.id, noisy_spec.id),
                   report);
    out << "    verdict " << VerdictName(report.localization.verdict);
    if (report.localization.onset_layer) {
      out << ", divergence onset at layer "
          << *report.localization.onset_layer;
    }
    out << "\n    mean RBO@" << report.top_k << " "
        << Fmt("%.4f", report.mean_rbo) << "\n";
    for (const ClassBreakdown& c : report.per_class) {
      if (c.affected == 0) break;
      out << "    class " << c.label << ": " << c.affected << "/" << c.total
          << " images affected\n";
    }
    out << "    per-layer mean |delta|:\n";
    for (const LayerStats& s : report.localization.layers) {
      out << "      layer " << s.layer_index << " " << OpKindName(s.op)
          << " " << Fmt("%.3e", s.mean) << "\n";
    }
    out << "\n[4] repair parameters from the source model\n";
    ModelGraph repaired = RepairParameters(noisy, source);
    const std::string repaired_id = noisy_spec.id + ".repaired";
    const ExecutionRecord repaired_record = execute(repaired, repaired_id);
    const DiffReport after = BuildDiffReport(
        {&source, &source_record}, {&repaired, &repaired_record}, {});
    SaveDiffReport(root / "reports" / PairDirName(source_spec.id, repaired_id),
                   after);
    out << "    " << Fmt("%.2f", after.dissimilarity_pct)
        << "% of top-1 labels differ, verdict "
        << VerdictName(after.localization.verdict) << "\n";
    const bool converged =
        after.localization.verdict == Verdict::kNoDivergence;
    out << (converged ? "\nrepair removed all divergence\n"
                      : "\nrepair did NOT remove the divergence\n");
    return converged ? kExitOk : kExitInternal;
  });
}

int Assets(const CommandOptions& options, std::ostream& out,
           std::ostream& err) {
  return Guard(err, [&] {
    const fs::path root = options.out.value_or("deltadiff-assets");
    for (const std::string& name : DeskModelNames()) {
      SaveModel(BuildDeskModel(name), root / "models" / (name + ".json"));
      out << "wrote model " << name << "\n";
    }
    SaveCorpus(BuildDeskCorpus(), root / "corpus" / kDeskCorpusName);
    out << "wrote corpus " << kDeskCorpusName << "\n";
    return kExitOk;
  });
}

}  // namespace deltadiff::cli
