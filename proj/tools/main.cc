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

#include <iostream>

#include "CLI11.hpp"
#include "commands.h"

int main(int argc, char** argv) {
  using deltadiff::cli::CommandOptions;
  CLI::App app{"Differential testing of model variants"};
  app.require_subcommand(1);

  CommandOptions options;
  std::string out_dir;
  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* config = cmd->add_option("--config", options.config,
                                   "Experiment config (TOML)");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", options.seed, "Override the noise seed");
    cmd->add_option("--out", out_dir, "Output directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "Materialize variants");
  add_common(generate, true);
  CLI::App* run = app.add_subcommand("run", "Execute variants on the corpus");
  add_common(run, true);
  run->add_flag("--debug", options.debug, "Capture per-layer traces");
  CLI::App* analyze = app.add_subcommand("analyze", "Compare variant runs");
  add_common(analyze, true);
  analyze->add_option("--pair", options.pairs, "Variant pair A:B");
  CLI::App* demo = app.add_subcommand("demo", "Fault-analysis walkthrough");
  add_common(demo, false);
  CLI::App* assets = app.add_subcommand("assets", "Write bundled assets");
  add_common(assets, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : deltadiff::cli::kExitConfig;
  }
  if (!out_dir.empty()) options.out = out_dir;

  if (*generate) return deltadiff::cli::Generate(options, std::cout, std::cerr);
  if (*run) return deltadiff::cli::Run(options, std::cout, std::cerr);
  if (*analyze) return deltadiff::cli::Analyze(options, std::cout, std::cerr);
  if (*demo) return deltadiff::cli::Demo(options, std::cout, std::cerr);
  return deltadiff::cli::Assets(options, std::cout, std::cerr);
}
