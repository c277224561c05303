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

// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails.

#include <boost/math/distributions/fisher_f.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "deltadiff/analysis.h"
#include "deltadiff/desk_models.h"
#include "deltadiff/errors.h"
#include "deltadiff/executor.h"
#include "deltadiff/optimizer.h"
#include "deltadiff/report_io.h"
#include "deltadiff/stats.h"
#include "deltadiff/variantgen.h"
#include "oracle/kernel_sweep.h"
#include "oracle/metrics_oracle.h"
#include "pass_checks.h"
#include "test_util.h"

namespace deltadiff {
namespace {

namespace fs = std::filesystem;
using testing::CheckAllPasses;
using testing::ClassOf;
using testing::PassCheck;
using testing::ToleranceClass;

constexpr std::string_view kModels[] = {kTinyNetA, kTinyNetB, kTinyNetC};
constexpr OptLevel kLevels[] = {OptLevel::kBasic, OptLevel::kDefault,
                                OptLevel::kExtended};
constexpr float kSigma = 3.75e-4f;
constexpr float kClamp = 0.011f;

// Collects the first few failed checks of one criterion.
class Verdicts {
 public:
  void Check(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 3) failures_.push_back(what);
    ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string Summary(const std::string& on_pass) const {
    if (ok()) return on_pass;
    std::string s = std::to_string(failed_) + " check(s) failed";
    for (const std::string& f : failures_) s += "; " + f;
    return s;
  }

 private:
  int failed_ = 0;
  std::vector<std::string> failures_;
};

std::string Num(double v, const char* format = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

RunOptions FastRun(Backend backend = Backend::kReference) {
  RunOptions o;
  o.backend = backend;
  o.repeats = 1;
  o.warmup = 0;
  return o;
}

ModelGraph Variant(const ModelGraph& source, Dialect dialect,
                   std::optional<NoiseSpec> noise, OptLevel level) {
  VariantSpec spec;
  spec.dialect = dialect;
  spec.noise = std::move(noise);
  spec.level = level;
  return MaterializeVariant(source, spec);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome KernelOracle() {
  const auto start = std::chrono::steady_clock::now();
  const oracle::SweepResult r = oracle::RunKernelSweep(1000, 20260101);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  Verdicts v;
  v.Check(r.cases == 1000, "ran " + std::to_string(r.cases) + " cases");
  for (const std::string& f : r.failures) v.Check(false, f);
  v.Check(secs < 30.0, "took " + Num(secs) + " s");
  return {v.ok(), v.Summary(std::to_string(r.cases) +
                            " random shapes bit-exact on both backends in " +
                            Num(secs, "%.2f") + " s")};
}

Outcome LabelInvariance(const Corpus& corpus) {
  const auto start = std::chrono::steady_clock::now();
  Verdicts v;
  for (const std::string_view model_name : kModels) {
    const std::string model(model_name);
    const ModelGraph source = BuildDeskModel(model);
    std::optional<ExecutionRecord> basic;
    for (OptLevel level : kLevels) {
      const ExecutionRecord r = RunInference(
          Variant(source, Dialect::kNative, std::nullopt, level), corpus,
          FastRun());
      if (!basic) {
        basic = r;
        continue;
      }
      const double d = CompareLabels(*basic, r);
      v.Check(d == 0.0, std::string(model) + " " +
                            std::string(OptLevelName(level)) + ": " + Num(d) +
                            "% differ");
    }
  }
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  v.Check(secs < 60.0, "took " + Num(secs) + " s");
  return {v.ok(), v.Summary("0% top-1 dissimilarity vs basic for 3 models x "
                            "3 levels x " +
                            std::to_string(corpus.images.size()) +
                            " images (" + Num(secs, "%.1f") + " s)")};
}

Outcome PassTolerances(const Corpus& corpus) {
  Verdicts v;
  const std::vector<PassCheck> checks = CheckAllPasses(corpus);
  double worst_rel = 0.0, worst_fast = 0.0;
  for (const PassCheck& c : checks) {
    v.Check(c.ok, c.model + " " + c.context + " " +
                      std::string(PassName(c.pass)) + ": abs " +
                      Num(c.max_abs) + " rel " + Num(c.max_rel));
    if (ClassOf(c.pass) == ToleranceClass::kRelative) {
      worst_rel = std::max(worst_rel, c.max_rel);
    } else if (ClassOf(c.pass) == ToleranceClass::kFastMath) {
      worst_fast = std::max(worst_fast, c.max_abs);
    }
  }
  v.Check(!checks.empty(), "no pass checks ran");
  return {v.ok(),
          v.Summary(std::to_string(checks.size()) +
                    " pass applications in class; worst folding rel " +
                    Num(worst_rel) + ", worst fast-math abs " +
                    Num(worst_fast))};
}

Outcome FaultNarrative(const Corpus& corpus) {
  const auto start = std::chrono::steady_clock::now();
  Verdicts v;
  const ModelGraph model = BuildDeskModel(std::string(kTinyNetA));
  const ModelGraph source =
      Variant(model, Dialect::kNative, std::nullopt, OptLevel::kBasic);
  const ExecutionRecord source_run = RunDebug(source, corpus, FastRun());

  int divergent_seeds = 0, divergent_images = 0;
  double mean_sum = 0.0, max_delta = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const NoiseSpec noise{kSigma, kClamp, seed, {}};
    // (a) the injected fault, measured on the unoptimized parameters.
    const ParamDiff pd = ParameterDiff(model, InjectNoise(model, noise));
    mean_sum += pd.mean;
    max_delta = std::max(max_delta, pd.max);
    v.Check(pd.mean >= 2e-4 && pd.mean <= 4e-4,
            "seed " + std::to_string(seed) + " mean " + Num(pd.mean));
    v.Check(pd.max <= kClamp, "seed " + std::to_string(seed) + " max " +
                                  Num(pd.max));

    const ModelGraph noisy =
        Variant(model, Dialect::kNative, noise, OptLevel::kBasic);
    const ExecutionRecord noisy_run = RunDebug(noisy, corpus, FastRun());
    const double dissimilarity = CompareLabels(source_run, noisy_run);
    if (dissimilarity > 0.0) ++divergent_seeds;

    // (c) errors accumulate towards the output on divergent images.
    for (size_t i = 0; i < corpus.images.size(); ++i) {
      if (Top1(source_run.images[i]) == Top1(noisy_run.images[i])) continue;
      ++divergent_images;
      const std::vector<LayerStats> d =
          ActivationDiff(source_run.traces[i], noisy_run.traces[i]);
      v.Check(d.back().mean >= d.front().mean,
              "seed " + std::to_string(seed) + " image " +
                  corpus.images[i].id + ": final " + Num(d.back().mean) +
                  " < first " + Num(d.front().mean));
    }

    // (d) localization.
    const Localization loc =
        Localize({&source, &source_run}, {&noisy, &noisy_run});
    v.Check(loc.verdict == Verdict::kParameterDivergence,
            "seed " + std::to_string(seed) + " verdict " +
                std::string(VerdictName(loc.verdict)));

    // (e) repair.
    const ModelGraph repaired = RepairParameters(noisy, source);
    const ExecutionRecord repaired_run = RunDebug(repaired, corpus, FastRun());
    const double after = CompareLabels(source_run, repaired_run);
    const Localization fixed =
        Localize({&source, &source_run}, {&repaired, &repaired_run});
    v.Check(after == 0.0, "seed " + std::to_string(seed) +
                              " repaired dissimilarity " + Num(after));
    v.Check(fixed.verdict == Verdict::kNoDivergence,
            "seed " + std::to_string(seed) + " repaired verdict " +
                std::string(VerdictName(fixed.verdict)));
  }
  v.Check(divergent_seeds > 0, "no seed changed a top-1 label");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  v.Check(secs < 120.0, "took " + Num(secs) + " s");
  return {v.ok(),
          v.Summary("param |delta| mean " + Num(mean_sum / 5, "%.3e") +
                    " max " + Num(max_delta, "%.3e") + "; " +
                    std::to_string(divergent_seeds) + "/5 seeds diverge (" +
                    std::to_string(divergent_images) +
                    " images, all cumulative); ParameterDivergence; repair "
                    "gives 0% and NoDivergence (" +
                    Num(secs, "%.1f") + " s)")};
}

Outcome ConversionMachinery(const Corpus& corpus) {
  Verdicts v;
  double worst = 0.0;
  for (const std::string_view model_name : {kTinyNetA, kTinyNetC}) {
    const std::string name(model_name);
    const ModelGraph source = BuildDeskModel(name);
    const ModelGraph converted = Convert(source, Dialect::kDenseAsBatchMatmul);
    const ExecutionRecord a = RunDebug(source, corpus, FastRun());
    const ExecutionRecord b = RunDebug(converted, corpus, FastRun());
    for (size_t i = 0; i < a.images.size(); ++i) {
      const double d =
          testing::MaxAbsDiff(a.images[i].logits, b.images[i].logits);
      worst = std::max(worst, d);
      v.Check(d <= 1e-6, std::string(name) + " image " + a.images[i].image_id +
                             " differs by " + Num(d));
    }
    const Localization loc = Localize({&source, &a}, {&converted, &b});
    v.Check(loc.verdict == Verdict::kGraphStructureDivergence,
            std::string(name) + " verdict " +
                std::string(VerdictName(loc.verdict)));
  }

  VariantAxes axes;
  axes.models = {std::string(kTinyNetB)};
  axes.dialects = {Dialect::kNative, Dialect::kDenseAsBatchMatmul};
  const VariantSet set = EnumerateVariants(axes);
  v.Check(set.failed.size() == 1 && set.failed[0].code == ErrorCode::kUnsupportedOp,
          "tinynet-B conversion did not fail with UnsupportedOp");

  // The same experiment end to end through the command line driver.
  testing::TempDir dir("acceptance");
  const fs::path config = dir.path() / "exp.toml";
  WriteTextFile(config,
                "model = \"tinynet-B\"\n"
                "dialects = [\"native\", \"dense_as_batch_matmul\"]\n"
                "repeats = 1\nwarmup = 0\n[output]\ndir = \"out\"\n");
  cli::CommandOptions options;
  options.config = config;
  std::ostringstream sink;
  for (auto* command : {&cli::Generate, &cli::Run, &cli::Analyze}) {
    const int code = (*command)(options, sink, sink);
    v.Check(code == cli::kExitOk, "command exited " + std::to_string(code) +
                                      ": " + sink.str());
  }
  const fs::path matrix = dir.path() / "out" / "reports" / "matrix.csv";
  v.Check(fs::exists(matrix) &&
              ReadTextFile(matrix).find("FAILED") != std::string::npos,
          "matrix.csv has no FAILED cell");
  return {v.ok(), v.Summary("dense->batch_matmul within " + Num(worst) +
                            " and GraphStructureDivergence; tinynet-B "
                            "conversion recorded as failed; matrix.csv has "
                            "FAILED cells")};
}

Outcome MetricOracles() {
  Verdicts v;
  std::mt19937 rng(77);
  for (int pair = 0; pair < 200; ++pair) {
    const int images = 1 + static_cast<int>(rng() % 40);
    const int k = 1 + static_cast<int>(rng() % 6);
    const auto [a, b] = oracle::RandomRecordPair(rng, images, 10, k);
    std::vector<int64_t> truth, ta, tb;
    for (int i = 0; i < images; ++i) {
      truth.push_back(a.images[i].label);
      ta.push_back(Top1(a.images[i]));
      tb.push_back(Top1(b.images[i]));
    }
    const std::string tag = "pair " + std::to_string(pair);
    v.Check(CompareLabels(a, b) == oracle::BruteDissimilarity(ta, tb),
            tag + " dissimilarity");
    const double p = 0.5 + 0.45 * (rng() % 1000) / 1000.0;
    const std::vector<double> rbo = PerImageRbo(a, b, p);
    for (int i = 0; i < images; ++i) {
      const double want = oracle::BruteRbo(oracle::Ranking(a.images[i]),
                                           oracle::Ranking(b.images[i]), p);
      v.Check(std::abs(rbo[i] - want) <= 1e-12, tag + " rbo");
    }
    const std::vector<ClassBreakdown> got = PerClassBreakdown(a, b, {});
    const std::vector<oracle::ClassTally> want =
        oracle::BrutePerClass(truth, ta, tb);
    v.Check(got.size() == want.size(), tag + " class count");
    for (size_t c = 0; c < std::min(got.size(), want.size()); ++c) {
      v.Check(got[c].class_index == want[c].cls &&
                  got[c].affected == want[c].affected &&
                  got[c].total == want[c].total,
              tag + " class row " + std::to_string(c));
    }
  }
  const std::vector<int64_t> x = {0, 1, 2}, y = {1, 0, 2};
  const double example = Rbo(x, y, 0.9);
  v.Check(std::abs(example - 0.6310) <= 1e-4, "rbo example " + Num(example));
  return {v.ok(), v.Summary("200 random record pairs match brute force; "
                            "rbo([x,y,z],[y,x,z],0.9) = " +
                            Num(example, "%.4f"))};
}

double BoostSf(double f, double d1, double d2) {
  return boost::math::cdf(
      boost::math::complement(boost::math::fisher_f(d1, d2), f));
}

Outcome Statistics() {
  Verdicts v;
  const AnovaResult r = OneWayAnova({{1, 2}, {3, 4}});
  const double oracle_p = BoostSf(8.0, 1, 2);
  v.Check(r.f == 8.0, "F = " + Num(r.f, "%.17g"));
  v.Check(std::abs(r.p - 0.1056) <= 1e-3, "p = " + Num(r.p));
  v.Check(std::abs(r.p - oracle_p) <= 1e-3, "p vs oracle " + Num(oracle_p));

  const AnovaResult same = OneWayAnova({{1, 2, 3}, {1, 2, 3}});
  v.Check(same.f == 0.0 && same.p == 1.0, "identical groups F " +
                                              Num(same.f) + " p " + Num(same.p));

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> value(-50.0, 50.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int set = 0; set < 100; ++set) {
    const int groups = 2 + static_cast<int>(rng() % 4);
    std::vector<std::vector<double>> g(groups), scaled(groups);
    const double c = scale(rng);
    for (int i = 0; i < groups; ++i) {
      const int n = 2 + static_cast<int>(rng() % 8);
      for (int j = 0; j < n; ++j) {
        g[i].push_back(value(rng));
        scaled[i].push_back(c * g[i].back());
      }
    }
    const AnovaResult a = OneWayAnova(g), b = OneWayAnova(scaled);
    v.Check(std::abs(a.f - b.f) <= 1e-9 * std::max(1.0, std::abs(a.f)),
            "set " + std::to_string(set) + " F " + Num(a.f) + " vs " +
                Num(b.f));
    v.Check(std::abs(a.p - BoostSf(a.f, a.df_between, a.df_within)) <= 1e-6,
            "set " + std::to_string(set) + " p vs oracle");
  }
  return {v.ok(), v.Summary("F = 8 exactly, p = " + Num(r.p) + " (oracle " +
                            Num(oracle_p) +
                            "); identical groups F = 0, p = 1; 100 sets "
                            "scale-invariant")};
}

Outcome BackendEquivalence(const Corpus& corpus) {
  Verdicts v;
  int graphs = 0;
  for (const std::string_view model_name : kModels) {
    const std::string name(model_name);
    const ModelGraph source = BuildDeskModel(name);
    for (Dialect dialect :
         {Dialect::kNative, Dialect::kDenseAsBatchMatmul}) {
      for (OptLevel level : kLevels) {
        std::optional<ModelGraph> g;
        try {
          g = Variant(source, dialect, std::nullopt, level);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kUnsupportedOp) continue;
          throw;
        }
        ++graphs;
        const ExecutionRecord ref = RunInference(*g, corpus, FastRun());
        const ExecutionRecord opt =
            RunInference(*g, corpus, FastRun(Backend::kOptimizedLayout));
        for (size_t i = 0; i < ref.images.size(); ++i) {
          v.Check(ref.images[i].logits.BitwiseEquals(opt.images[i].logits),
                  std::string(name) + " " + std::string(DialectName(dialect)) +
                      " " + std::string(OptLevelName(level)) + " image " +
                      ref.images[i].image_id);
        }
      }
    }
  }
  return {v.ok(), v.Summary("bit-identical logits on " +
                            std::to_string(graphs) + " graphs x " +
                            std::to_string(corpus.images.size()) + " images")};
}

std::map<std::string, std::string> NonTimingFiles(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() == "timings.json") {
      continue;
    }
    files[fs::relative(entry.path(), root).string()] =
        ReadTextFile(entry.path());
  }
  return files;
}

Outcome Determinism() {
  Verdicts v;
  testing::TempDir dir("acceptance");
  std::string stdout_text[2];
  for (int i = 0; i < 2; ++i) {
    cli::CommandOptions options;
    options.out = dir.path() / ("demo-" + std::to_string(i));
    std::ostringstream out, err;
    const int code = cli::Demo(options, out, err);
    v.Check(code == cli::kExitOk, "demo exited " + std::to_string(code) +
                                      ": " + err.str());
    stdout_text[i] = out.str();
  }
  const auto a = NonTimingFiles(dir.path() / "demo-0");
  const auto b = NonTimingFiles(dir.path() / "demo-1");
  v.Check(stdout_text[0] == stdout_text[1], "demo output differs");
  v.Check(!a.empty() && a == b, "demo files differ");
  return {v.ok(), v.Summary("two demo runs byte-identical (" +
                            std::to_string(a.size()) +
                            " files plus stdout, timings excluded); suite "
                            "time bound is the ctest total")};
}

}  // namespace
}  // namespace deltadiff

int main() {
  using namespace deltadiff;
  const Corpus corpus = BuildDeskCorpus();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {
          {"kernel oracle equivalence", KernelOracle},
          {"optimization label invariance",
           [&] { return LabelInvariance(corpus); }},
          {"pass tolerance classes", [&] { return PassTolerances(corpus); }},
          {"fault narrative", [&] { return FaultNarrative(corpus); }},
          {"conversion machinery",
           [&] { return ConversionMachinery(corpus); }},
          {"metric oracles", MetricOracles},
          {"statistics", Statistics},
          {"backend equivalence", [&] { return BackendEquivalence(corpus); }},
          {"determinism", Determinism},
      };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
