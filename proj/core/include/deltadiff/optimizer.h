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

#ifndef DELTADIFF_OPTIMIZER_H_
#define DELTADIFF_OPTIMIZER_H_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "deltadiff/model_graph.h"

namespace deltadiff {

// Optimization bundles, mirroring compiler levels o0 / o2 / o4.
enum class OptLevel { kBasic, kDefault, kExtended };

// Declaration order is the fixed order passes run in.
enum class PassId {
  kSimplifyInference,
  kFuseOps,
  kFoldConstants,
  kFoldScaleAxis,
  kEliminateCommonSubexpr,
  kCanonicalizeOps,
  kCombineParallelOps,
  kFastMath,
};

std::string_view OptLevelName(OptLevel level);  // basic|default|extended
std::optional<OptLevel> ParseOptLevel(std::string_view name);
std::string_view PassName(PassId pass);  // snake_case, e.g. fuse_ops
std::optional<PassId> ParsePassId(std::string_view name);
std::vector<PassId> AllPasses();

// Basic = [SimplifyInference];
// Default = Basic + [FuseOps, FoldConstants, FoldScaleAxis];
// Extended = Default + [EliminateCommonSubexpr, CanonicalizeOps,
//                       CombineParallelOps, FastMath].
std::vector<PassId> PassList(OptLevel level);

// Level passes plus `enable`, minus `disable` (disable wins), in the fixed
// pass order.
std::vector<PassId> ResolvePasses(OptLevel level, std::span<const PassId> enable,
                                  std::span<const PassId> disable);

// Applies one pass. The input must validate (otherwise InvalidGraph); the
// result is validated, pruned of dead nodes and orphan parameters, and has
// its nodes ordered by id.
//
// SimplifyInference   folds BatchNorm into a preceding Conv2D/Dense and
//                     removes identity Reshape chains.
// FuseOps             Conv2D->ReLU becomes FusedConvReLU, Dense->ReLU
//                     becomes FusedDenseReLU.
// FoldConstants       evaluates nodes whose inputs are all constants.
// FoldScaleAxis       pushes zero-shift (pure scale) BatchNorms into the
//                     weights of the conv/dense feeding them, through a ReLU
//                     when every scale is positive.
// EliminateCommonSubexpr  merges nodes with identical kind, attributes,
//                     parameters and inputs.
// CanonicalizeOps     rewrites batch-1 BatchMatmul against a constant into
//                     Dense, collapses Reshape chains and orders the operands
//                     of same-shape Adds by producer id.
// CombineParallelOps  merges sibling conv (or dense) nodes reading the same
//                     value into one multi-output node with concatenated
//                     weights.
// FastMath            marks the graph as allowed to use approximate exp and
//                     reassociated reductions.
ModelGraph ApplyPass(const ModelGraph& graph, PassId pass);
ModelGraph ApplyPasses(const ModelGraph& graph, std::span<const PassId> passes);
ModelGraph ApplyLevel(const ModelGraph& graph, OptLevel level);

// Folds every BatchNorm that directly consumes a single-use Conv2D or Dense
// into that producer. Returns the number of folds.
int FoldBatchNorms(ModelGraph& graph);

}  // namespace deltadiff

#endif  // DELTADIFF_OPTIMIZER_H_
