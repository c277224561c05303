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

#ifndef DELTADIFF_VARIANTGEN_H_
#define DELTADIFF_VARIANTGEN_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltadiff/errors.h"
#include "deltadiff/kernels.h"
#include "deltadiff/model_graph.h"
#include "deltadiff/optimizer.h"

namespace deltadiff {

// Simulated conversion fault: every parameter element receives an
// independent draw clamp(sigma * N(0,1), -clamp, +clamp).
struct NoiseSpec {
  float sigma = 3.75e-4f;
  float clamp = 0.011f;
  uint64_t seed = 0;
  // Per-layer sigma. A key matches parameters named exactly `key` or
  // starting with `key` followed by '.'; the longest matching key wins.
  std::map<std::string, float> sigma_overrides;
};

struct VariantSpec {
  std::string source;  // bundled model name or manifest path
  Dialect dialect = Dialect::kNative;
  std::optional<NoiseSpec> noise;
  OptLevel level = OptLevel::kBasic;
  std::vector<PassId> enable;
  std::vector<PassId> disable;
  Backend backend = Backend::kReference;
  std::string id;
};

// "clean" or e.g. "noise-3.75e-04-s7".
std::string NoiseTag(const std::optional<NoiseSpec>& noise);

// "<model>.<dialect>.<noise>.<level>.<backend>".
std::string MakeVariantId(std::string_view model, const VariantSpec& spec);

// Rewrites a Native graph into `dialect`. DenseAsBatchMatmul turns every
// Dense into Reshape -> BatchMatmul -> Reshape -> Add(bias) and cannot
// express Concat (UnsupportedOp). PreFusedBatchNorm folds batchnorms into
// their producers the way some converters do.
ModelGraph Convert(const ModelGraph& graph, Dialect dialect);

ModelGraph InjectNoise(const ModelGraph& graph, const NoiseSpec& noise);
ModelGraph InjectNoise(const ModelGraph& graph, float sigma, float clamp,
                       uint64_t seed);

// For every parameter of `target`, the value it should hold according to
// the parameters of `source`, following the renames and layout changes that
// conversions and canonicalization apply. The mapping must be a bijection
// between the two parameter sets; otherwise throws ParamMapMismatch.
std::map<std::string, Tensor> MapParameters(const ModelGraph& target,
                                            const ModelGraph& source);

// `target` with every parameter replaced by its mapped source value.
ModelGraph RepairParameters(const ModelGraph& target, const ModelGraph& source);

// Resolves a model reference: a bundled desk model name or a manifest path.
// Any failure to load is a ConfigError.
ModelGraph ResolveModel(const std::string& ref);

// source -> convert -> inject noise -> optimize. The backend tag does not
// change the graph; it selects how the variant is executed.
ModelGraph MaterializeVariant(const ModelGraph& source,
                              const VariantSpec& spec);

struct VariantAxes {
  std::vector<std::string> models;
  std::vector<Dialect> dialects;   // empty: Native only
  std::vector<float> noise_sigmas;  // sigma > 0 settings; clean always runs
  float noise_clamp = 0.011f;
  std::vector<uint64_t> noise_seeds;  // empty: {0}
  std::map<std::string, float> sigma_overrides;
  std::vector<OptLevel> levels;    // empty: Basic only
  std::vector<Backend> backends;   // empty: Reference only
  std::vector<PassId> enable;
  std::vector<PassId> disable;
};

struct Variant {
  VariantSpec spec;
  std::string model;  // source graph name
  ModelGraph graph;
};

// A variant that could not be produced, e.g. an inexpressible conversion.
// Failures are findings and do not stop enumeration.
struct FailedVariant {
  VariantSpec spec;
  std::string model;
  ErrorCode code = ErrorCode::kInternal;
  std::string message;
};

struct VariantSet {
  std::vector<Variant> variants;
  std::vector<FailedVariant> failed;
  // Every variant id, successful or not, in enumeration order.
  std::vector<std::string> order;
};

// Cross product models x dialects x noise x levels x backends, in that
// nesting order. Throws ConfigError for unusable axes only.
VariantSet EnumerateVariants(const VariantAxes& axes);

}  // namespace deltadiff

#endif  // DELTADIFF_VARIANTGEN_H_
