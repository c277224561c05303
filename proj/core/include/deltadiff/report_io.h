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

#ifndef DELTADIFF_REPORT_IO_H_
#define DELTADIFF_REPORT_IO_H_

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "deltadiff/analysis.h"
#include "deltadiff/executor.h"
#include "deltadiff/variantgen.h"

namespace deltadiff {

// One line of records.jsonl (no trailing newline). Timing data is kept out
// of records so reruns reproduce them byte for byte.
std::string ImageRecordLine(const std::string& variant_id,
                            const ImageResult& result);
ImageResult ParseImageRecordLine(const std::string& line);

// Appends record lines, flushing after each so an interrupted run leaves
// only complete lines behind.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);
  void Append(const std::string& variant_id, const ImageResult& result);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

// timings.json: run parameters plus, per image, cold/sample durations and
// (debug runs) per-layer durations.
std::string TimingsJson(const ExecutionRecord& record);

// Traces as named tensors "<image>/<layer:06>/<node>/<op>".
void SaveTraces(const std::filesystem::path& path,
                const ExecutionRecord& record);

// Writes records.jsonl, timings.json and, when traced, trace.bin into `dir`.
void SaveExecutionRecord(const std::filesystem::path& dir,
                         const ExecutionRecord& record);

// Reads a run directory back. Missing files are IoError.
ExecutionRecord LoadExecutionRecord(const std::filesystem::path& dir);

struct VariantEntry {
  VariantSpec spec;
  std::string model;
  bool ok = true;
  std::string error;    // error code name for failed variants
  std::string message;
};

std::vector<VariantEntry> VariantEntries(const VariantSet& set);
std::string VariantsJson(const std::vector<VariantEntry>& entries);
std::vector<VariantEntry> ParseVariantsJson(const std::string& text);

std::string DiffReportJson(const DiffReport& report);
std::string LabelsDiffCsv(const DiffReport& report);
std::string LayerDiffCsv(const DiffReport& report);

// Writes report.json, labels_diff.csv and layer_diff.csv into `dir`.
void SaveDiffReport(const std::filesystem::path& dir, const DiffReport& report);

// Square dissimilarity matrix over `ids` (rows: source, columns: target).
// `cell(i, j)` is nullopt for pairs involving a failed variant.
std::string MatrixCsv(
    const std::vector<std::string>& ids,
    const std::vector<std::vector<std::optional<double>>>& cells);

// anova.json: per-variant mean durations and a one-way ANOVA across all
// variants with timing samples, plus each listed pair's comparison.
std::string AnovaSummaryJson(const std::vector<std::string>& ids,
                             const std::vector<std::vector<double>>& samples,
                             const std::vector<DiffReport>& reports);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace deltadiff

#endif  // DELTADIFF_REPORT_IO_H_
