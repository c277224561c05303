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

#include "deltadiff/variantgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "deltadiff/counter_rng.h"
#include "deltadiff/desk_models.h"
#include "deltadiff/interpreter.h"
#include "deltadiff/model_io.h"

namespace deltadiff {
namespace {

constexpr std::string_view kBmmSuffix = "::bmm";
constexpr std::string_view kDenseSuffix = "::dense";

Node MakeNode(NodeId id, OpKind op, std::vector<ValueRef> inputs,
              std::vector<std::string> params = {}) {
  Node n;
  n.id = id;
  n.op = op;
  n.inputs = std::move(inputs);
  n.params = std::move(params);
  return n;
}

// [O,F] -> [1,F,O]
Tensor DenseToBmmLayout(const Tensor& w) {
  const int64_t o = w.dim(0), f = w.dim(1);
  Tensor out({1, f, o});
  for (int64_t i = 0; i < o; ++i) {
    for (int64_t j = 0; j < f; ++j) out[j * o + i] = w[i * f + j];
  }
  return out;
}

// [1,K,N] -> [N,K]
Tensor BmmToDenseLayout(const Tensor& b) {
  const int64_t k = b.dim(1), n = b.dim(2);
  Tensor out({n, k});
  for (int64_t i = 0; i < k; ++i) {
    for (int64_t j = 0; j < n; ++j) out[j * k + i] = b[i * n + j];
  }
  return out;
}

ModelGraph DenseAsBatchMatmul(const ModelGraph& graph) {
  ModelGraph g = graph;
  const ShapeMap shapes = InferShapes(g);
  std::vector<NodeId> dense_ids;
  for (const Node& n : g.nodes) {
    if (n.op == OpKind::kConcat || IsFusedKind(n.op) ||
        !n.attrs.splits.empty()) {
      throw Error(ErrorCode::kUnsupportedOp,
                  std::string(OpKindName(n.op)) + " node " +
                      std::to_string(n.id) + " cannot be expressed in the " +
                      std::string(DialectName(Dialect::kDenseAsBatchMatmul)) +
                      " dialect");
    }
    if (n.op == OpKind::kDense) dense_ids.push_back(n.id);
  }
  for (NodeId id : dense_ids) {
    const Node dense = g.GetNode(id);
    const Shape in_shape = ValueShape(g, shapes, dense.inputs[0]);
    const Tensor& w = g.Param(dense.params[0]);
    const int64_t rows = in_shape[0], features = in_shape[1], out = w.dim(0);

    const std::string w_name =
        UniqueParamName(g, dense.params[0] + std::string(kBmmSuffix));
    g.params.emplace(w_name, DenseToBmmLayout(w));

    NodeId next = g.NextId();
    const NodeId pre = next++;
    const NodeId weights = next++;
    const NodeId post = next++;
    const NodeId bias = dense.has_bias() ? next++ : 0;
    const NodeId add = dense.has_bias() ? next++ : 0;
    const NodeId result = dense.has_bias() ? add : post;
    RedirectUses(g, ValueRef::Of(id), ValueRef::Of(result));

    Node& bmm = *g.FindNode(id);
    bmm.op = OpKind::kBatchMatmul;
    bmm.inputs = {ValueRef::Of(pre), ValueRef::Of(weights)};
    bmm.params.clear();

    Node reshape_in = MakeNode(pre, OpKind::kReshape, {dense.inputs[0]});
    reshape_in.attrs.shape = {1, rows, features};
    Node reshape_out = MakeNode(post, OpKind::kReshape, {ValueRef::Of(id)});
    reshape_out.attrs.shape = {rows, out};
    g.nodes.push_back(std::move(reshape_in));
    g.nodes.push_back(MakeNode(weights, OpKind::kConstant, {}, {w_name}));
    g.nodes.push_back(std::move(reshape_out));
    if (dense.has_bias()) {
      g.nodes.push_back(
          MakeNode(bias, OpKind::kConstant, {}, {dense.params[1]}));
      g.nodes.push_back(MakeNode(
          add, OpKind::kAdd, {ValueRef::Of(post), ValueRef::Of(bias)}));
    }
  }
  Prune(g);
  return g;
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Value of target parameter `name` derived from `source`, recording which
// source parameter it came from.
std::optional<Tensor> Derive(std::string_view name, const ModelGraph& source,
                             std::string* root) {
  if (auto it = source.params.find(std::string(name));
      it != source.params.end()) {
    *root = it->first;
    return it->second;
  }
  if (EndsWith(name, kBmmSuffix)) {
    auto base = Derive(name.substr(0, name.size() - kBmmSuffix.size()), source,
                       root);
    if (!base || base->rank() != 2) return std::nullopt;
    return DenseToBmmLayout(*base);
  }
  if (EndsWith(name, kDenseSuffix)) {
    auto base = Derive(name.substr(0, name.size() - kDenseSuffix.size()),
                       source, root);
    if (!base || base->rank() != 3 || base->dim(0) != 1) return std::nullopt;
    return BmmToDenseLayout(*base);
  }
  return std::nullopt;
}

float SigmaFor(const NoiseSpec& noise, const std::string& param) {
  float sigma = noise.sigma;
  size_t best = 0;
  for (const auto& [key, value] : noise.sigma_overrides) {
    const bool match =
        param == key || (param.size() > key.size() &&
                         param.compare(0, key.size(), key) == 0 &&
                         param[key.size()] == '.');
    if (match && key.size() >= best) {
      best = key.size();
      sigma = value;
    }
  }
  return sigma;
}

}  // namespace

std::string NoiseTag(const std::optional<NoiseSpec>& noise) {
  if (!noise || noise->sigma == 0.0f) return "clean";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "noise-%.2e-s%llu",
                static_cast<double>(noise->sigma),
                static_cast<unsigned long long>(noise->seed));
  return buf;
}

std::string MakeVariantId(std::string_view model, const VariantSpec& spec) {
  std::string id(model);
  id += ".";
  id += DialectName(spec.dialect);
  id += "." + NoiseTag(spec.noise) + ".";
  id += OptLevelName(spec.level);
  id += ".";
  id += BackendName(spec.backend);
  return id;
}

ModelGraph Convert(const ModelGraph& graph, Dialect dialect) {
  if (graph.dialect != Dialect::kNative) {
    throw Error(ErrorCode::kInvalidGraph,
                "conversion source must be in the native dialect, got " +
                    std::string(DialectName(graph.dialect)));
  }
  Validate(graph);
  ModelGraph g = graph;
  switch (dialect) {
    case Dialect::kNative:
      return g;
    case Dialect::kDenseAsBatchMatmul:
      g = DenseAsBatchMatmul(graph);
      break;
    case Dialect::kPreFusedBatchNorm:
      FoldBatchNorms(g);
      Prune(g);
      break;
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  g.dialect = dialect;
  Validate(g);
  return g;
}

ModelGraph InjectNoise(const ModelGraph& graph, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0f) || !(noise.clamp >= 0.0f)) {
    throw Error(ErrorCode::kConfigError, "noise sigma and clamp must be >= 0");
  }
  ModelGraph g = graph;
  const double clamp = noise.clamp;
  for (auto& [name, tensor] : g.params) {
    const double sigma = SigmaFor(noise, name);
    if (sigma < 0.0) {
      throw Error(ErrorCode::kConfigError, "negative sigma for " + name);
    }
    if (sigma == 0.0) continue;
    const CounterRng rng(noise.seed, name);
    auto d = tensor.mutable_data();
    for (size_t i = 0; i < d.size(); ++i) {
      const double delta = std::clamp(sigma * rng.Normal(i), -clamp, clamp);
      d[i] = static_cast<float>(d[i] + delta);
    }
  }
  return g;
}

ModelGraph InjectNoise(const ModelGraph& graph, float sigma, float clamp,
                       uint64_t seed) {
  NoiseSpec spec;
  spec.sigma = sigma;
  spec.clamp = clamp;
  spec.seed = seed;
  return InjectNoise(graph, spec);
}

std::map<std::string, Tensor> MapParameters(const ModelGraph& target,
                                            const ModelGraph& source) {
  std::map<std::string, Tensor> mapped;
  std::map<std::string, std::string> used_by;
  for (const auto& [name, tensor] : target.params) {
    std::string root;
    std::optional<Tensor> value = Derive(name, source, &root);
    if (!value) {
      throw Error(ErrorCode::kParamMapMismatch,
                  "no source parameter for '" + name + "'");
    }
    if (value->shape() != tensor.shape()) {
      throw Error(ErrorCode::kParamMapMismatch,
                  "'" + name + "' has shape " + ShapeToString(tensor.shape()) +
                      " but its source maps to " +
                      ShapeToString(value->shape()));
    }
    auto [it, inserted] = used_by.emplace(root, name);
    if (!inserted) {
      throw Error(ErrorCode::kParamMapMismatch,
                  "source parameter '" + root + "' maps to both '" +
                      it->second + "' and '" + name + "'");
    }
    mapped.emplace(name, std::move(*value));
  }
  for (const auto& [name, tensor] : source.params) {
    if (!used_by.contains(name)) {
      throw Error(ErrorCode::kParamMapMismatch,
                  "source parameter '" + name + "' has no counterpart");
    }
  }
  return mapped;
}

ModelGraph RepairParameters(const ModelGraph& target,
                            const ModelGraph& source) {
  ModelGraph g = target;
  g.params = MapParameters(target, source);
  return g;
}

ModelGraph ResolveModel(const std::string& ref) {
  if (IsDeskModel(ref)) return BuildDeskModel(ref);
  try {
    return LoadModel(ref);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kConfigError,
                "cannot load model '" + ref + "': " + e.what());
  }
}

ModelGraph MaterializeVariant(const ModelGraph& source,
                              const VariantSpec& spec) {
  ModelGraph g = Convert(source, spec.dialect);
  if (spec.noise) g = InjectNoise(g, *spec.noise);
  const std::vector<PassId> passes =
      ResolvePasses(spec.level, spec.enable, spec.disable);
  return ApplyPasses(g, passes);
}

VariantSet EnumerateVariants(const VariantAxes& axes) {
  if (axes.models.empty()) {
    throw Error(ErrorCode::kConfigError, "no models requested");
  }
  const std::vector<Dialect> dialects =
      axes.dialects.empty() ? std::vector<Dialect>{Dialect::kNative}
                            : axes.dialects;
  const std::vector<OptLevel> levels =
      axes.levels.empty() ? std::vector<OptLevel>{OptLevel::kBasic}
                          : axes.levels;
  const std::vector<Backend> backends =
      axes.backends.empty() ? std::vector<Backend>{Backend::kReference}
                            : axes.backends;
  const std::vector<uint64_t> seeds =
      axes.noise_seeds.empty() ? std::vector<uint64_t>{0} : axes.noise_seeds;

  std::vector<std::optional<NoiseSpec>> noises{std::nullopt};
  for (float sigma : axes.noise_sigmas) {
    if (!(sigma >= 0.0f)) {
      throw Error(ErrorCode::kConfigError, "noise sigma must be >= 0");
    }
    if (sigma == 0.0f) continue;
    for (uint64_t seed : seeds) {
      NoiseSpec n;
      n.sigma = sigma;
      n.clamp = axes.noise_clamp;
      n.seed = seed;
      n.sigma_overrides = axes.sigma_overrides;
      noises.push_back(n);
    }
  }
  if (!(axes.noise_clamp >= 0.0f)) {
    throw Error(ErrorCode::kConfigError, "noise clamp must be >= 0");
  }

  VariantSet set;
  std::set<std::string> ids;
  auto make_spec = [&](const std::string& model_ref, Dialect d,
                       const std::optional<NoiseSpec>& n, OptLevel l,
                       Backend b) {
    VariantSpec spec;
    spec.source = model_ref;
    spec.dialect = d;
    spec.noise = n;
    spec.level = l;
    spec.enable = axes.enable;
    spec.disable = axes.disable;
    spec.backend = b;
    return spec;
  };
  auto claim_id = [&](VariantSpec& spec, const std::string& model) {
    spec.id = MakeVariantId(model, spec);
    if (!ids.insert(spec.id).second) {
      throw Error(ErrorCode::kConfigError, "duplicate variant " + spec.id);
    }
    set.order.push_back(spec.id);
  };

  for (const std::string& ref : axes.models) {
    const ModelGraph source = ResolveModel(ref);
    for (Dialect d : dialects) {
      std::optional<ModelGraph> converted;
      ErrorCode code = ErrorCode::kInternal;
      std::string why;
      try {
        converted = Convert(source, d);
      } catch (const Error& e) {
        code = e.code();
        why = e.what();
      }
      for (const auto& n : noises) {
        std::optional<ModelGraph> noisy;
        if (converted) noisy = n ? InjectNoise(*converted, *n) : *converted;
        for (OptLevel l : levels) {
          std::optional<ModelGraph> optimized;
          ErrorCode level_code = code;
          std::string level_why = why;
          if (noisy) {
            try {
              optimized = ApplyPasses(
                  *noisy, ResolvePasses(l, axes.enable, axes.disable));
            } catch (const Error& e) {
              level_code = e.code();
              level_why = e.what();
            }
          }
          for (Backend b : backends) {
            VariantSpec spec = make_spec(ref, d, n, l, b);
            claim_id(spec, source.name);
            if (optimized) {
              set.variants.push_back({std::move(spec), source.name, *optimized});
            } else {
              set.failed.push_back(
                  {std::move(spec), source.name, level_code, level_why});
            }
          }
        }
      }
    }
  }
  return set;
}

}  // namespace deltadiff
