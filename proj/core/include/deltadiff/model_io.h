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

#ifndef DELTADIFF_MODEL_IO_H_
#define DELTADIFF_MODEL_IO_H_

#include <filesystem>
#include <string>

#include "deltadiff/model_graph.h"

namespace deltadiff {

// A model on disk is a JSON manifest plus a binary weights sidecar that
// sits next to it with the extension replaced by ".weights".
std::filesystem::path WeightsPathFor(const std::filesystem::path& manifest);

// Manifest text for `graph`. Key order and formatting are fixed, so equal
// graphs produce identical bytes.
std::string ManifestToString(const ModelGraph& graph);
// Parses a manifest and attaches `params`. Does not validate.
ModelGraph ManifestFromString(const std::string& text,
                              std::map<std::string, Tensor> params);

void SaveModel(const ModelGraph& graph,
               const std::filesystem::path& manifest_path);
// Loads, validates and shape-checks a model.
ModelGraph LoadModel(const std::filesystem::path& manifest_path);

}  // namespace deltadiff

#endif  // DELTADIFF_MODEL_IO_H_
