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

#ifndef DELTADIFF_DESK_MODELS_H_
#define DELTADIFF_DESK_MODELS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deltadiff/corpus.h"
#include "deltadiff/model_graph.h"

namespace deltadiff {

// Miniature stand-ins for three CNN families, all taking a [1,3,16,16]
// input and producing softmax scores over 10 classes:
//   tinynet-A  plain conv stack with batchnorm, a channel-scale layer and a
//              dense head;
//   tinynet-B  parallel 1x1/3x3/pool branches joined by a concat;
//   tinynet-C  residual blocks with a strided projection shortcut and a
//              constant class prior added to the logits.
// Parameters are drawn from a seeded counter-based generator. Batchnorm
// running statistics are then measured on a calibration set drawn from the
// desk corpus classes, and the dense head is fitted as a class-centroid
// classifier, so the models behave like small trained networks.
inline constexpr std::string_view kTinyNetA = "tinynet-A";
inline constexpr std::string_view kTinyNetB = "tinynet-B";
inline constexpr std::string_view kTinyNetC = "tinynet-C";
inline constexpr std::string_view kDeskCorpusName = "desk-64";
inline constexpr uint64_t kDeskSeed = 20240117;
inline constexpr int kDeskCorpusSize = 64;
inline constexpr int kDeskClasses = 10;

std::vector<std::string> DeskModelNames();
bool IsDeskModel(std::string_view name);
ModelGraph BuildDeskModel(std::string_view name, uint64_t seed = kDeskSeed);

// Class-structured synthetic images: each class has a fixed random
// prototype, and each image is its class prototype plus per-image noise,
// quantized to integer pixel values in [0, 255]. Labels cycle 0..9.
Corpus BuildDeskCorpus(int count = kDeskCorpusSize, uint64_t seed = kDeskSeed);

}  // namespace deltadiff

#endif  // DELTADIFF_DESK_MODELS_H_
