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

#ifndef DELTADIFF_CORPUS_H_
#define DELTADIFF_CORPUS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "deltadiff/tensor.h"

namespace deltadiff {

struct CorpusImage {
  std::string id;
  Tensor raw;             // [1,C,H,W], unnormalized pixel values
  int64_t label = -1;     // ground-truth class index
};

struct Corpus {
  std::vector<CorpusImage> images;
};

// Directory layout: one "<image-id>.dtns" per image plus labels.csv with
// header "image_id,label_index". Images are ordered by id.
Corpus LoadCorpus(const std::filesystem::path& dir);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace deltadiff

#endif  // DELTADIFF_CORPUS_H_
