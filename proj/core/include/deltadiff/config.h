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

#ifndef DELTADIFF_CONFIG_H_
#define DELTADIFF_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deltadiff/corpus.h"
#include "deltadiff/executor.h"
#include "deltadiff/variantgen.h"

namespace deltadiff {

// Value of the TOML subset accepted in experiment configs: strings, integers,
// floats, booleans and (possibly nested, possibly multi-line) arrays.
struct TomlValue {
  enum class Kind { kString, kInteger, kFloat, kBool, kArray };
  Kind kind = Kind::kString;
  std::string string;
  int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<TomlValue> items;
};

// Flattened document: "[noise]\nsigma = 1" yields key "noise.sigma".
using TomlTable = std::map<std::string, TomlValue>;

// Parses tables, dotted and quoted keys, comments and the value kinds
// above. Inline tables, dates and multi-line strings are not supported.
// Errors are ConfigError with the offending line number.
TomlTable ParseToml(const std::string& text);

inline constexpr std::string_view kBuiltinCorpusPrefix = "builtin:";

struct ExperimentConfig {
  std::vector<std::string> models;  // desk model names or manifest paths
  std::string corpus = "builtin:desk-64";  // directory or builtin:<name>
  VariantAxes axes;
  PreprocessSpec preprocess;
  int top_k = 5;
  int repeats = 10;
  int warmup = 1;
  int threads = 0;
  int64_t trace_budget_bytes = int64_t{1} << 30;
  std::string out_dir = "deltadiff-out";
  std::optional<uint64_t> seed;  // replaces the noise seeds when set
  double rbo_p = 0.9;
  double theta = 1e-5;
  std::string baseline;  // variant id; empty: first variant of each model
  std::vector<std::pair<std::string, std::string>> pairs;  // explicit pairs
};

// Relative paths are resolved against `base_dir`. Unknown keys and values of
// the wrong kind are ConfigError.
ExperimentConfig ParseConfig(const std::string& text,
                             const std::filesystem::path& base_dir);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Overrides every noise seed with `seed`.
void ApplySeed(ExperimentConfig& config, uint64_t seed);

// "builtin:desk-64" builds the bundled corpus; anything else is loaded as a
// corpus directory (CorpusError on failure).
Corpus ResolveCorpus(const std::string& ref);

}  // namespace deltadiff

#endif  // DELTADIFF_CONFIG_H_
