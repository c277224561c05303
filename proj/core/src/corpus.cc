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

#include "deltadiff/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "deltadiff/errors.h"
#include "deltadiff/tensor_io.h"

namespace deltadiff {

Corpus LoadCorpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kCorpusError, "not a directory: " + dir.string());
  }
  std::ifstream csv(dir / "labels.csv");
  if (!csv) {
    throw Error(ErrorCode::kCorpusError,
                "missing labels.csv in " + dir.string());
  }
  std::map<std::string, int64_t> labels;
  std::string line;
  bool header = true;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("image_id", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kCorpusError, "bad labels.csv line: " + line);
    }
    try {
      labels[line.substr(0, comma)] = std::stoll(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kCorpusError, "bad label index: " + line);
    }
  }
  Corpus corpus;
  for (const auto& [id, label] : labels) {
    const fs::path file = dir / (id + ".dtns");
    if (!fs::exists(file)) {
      throw Error(ErrorCode::kCorpusError, "missing image " + file.string());
    }
    Tensor raw;
    try {
      raw = LoadTensorFile(file);
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorpusError, e.what());
    }
    if (raw.rank() != 4 || raw.dim(0) != 1) {
      throw Error(ErrorCode::kCorpusError,
                  "image " + id + " is not [1,C,H,W]: " +
                      ShapeToString(raw.shape()));
    }
    corpus.images.push_back({id, std::move(raw), label});
  }
  if (corpus.images.empty()) {
    throw Error(ErrorCode::kCorpusError, "empty corpus in " + dir.string());
  }
  return corpus;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "labels.csv", std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write labels.csv");
  csv << "image_id,label_index\n";
  std::vector<const CorpusImage*> sorted;
  for (const CorpusImage& img : corpus.images) sorted.push_back(&img);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->id < b->id; });
  for (const CorpusImage* img : sorted) {
    SaveTensorFile(dir / (img->id + ".dtns"), img->raw);
    csv << img->id << "," << img->label << "\n";
  }
}

}  // namespace deltadiff
