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

#ifndef DELTADIFF_TOOLS_COMMANDS_H_
#define DELTADIFF_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "deltadiff/errors.h"

namespace deltadiff::cli {

enum ExitCode {
  kExitOk = 0,
  kExitConfig = 2,
  kExitCorpus = 3,
  kExitMissingInputs = 4,
  kExitInternal = 5,
};

// Exit code for an error that escaped a command.
int ExitCodeFor(ErrorCode code);

struct CommandOptions {
  std::filesystem::path config;
  bool debug = false;
  std::optional<uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::vector<std::string> pairs;  // "a:b"
};

// Each command returns its exit code; progress goes to `out`, problems to
// `err`. Output layout under the output directory:
//   variants.json, variants/<id>/model.json + model.weights
//   runs/<id>/records.jsonl, timings.json, trace.bin (debug)
//   reports/<a>__<b>/{report.json,labels_diff.csv,layer_diff.csv},
//   reports/matrix.csv, reports/anova.json
int Generate(const CommandOptions& options, std::ostream& out,
             std::ostream& err);
int Run(const CommandOptions& options, std::ostream& out, std::ostream& err);
int Analyze(const CommandOptions& options, std::ostream& out,
            std::ostream& err);

// Fault-analysis walkthrough on tinynet-A: inject noise, observe label
// divergence, localize it, repair the parameters and confirm convergence.
// Exit 0 iff the repaired model shows no divergence.
int Demo(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Writes the bundled desk models and corpus to disk.
int Assets(const CommandOptions& options, std::ostream& out,
           std::ostream& err);

}  // namespace deltadiff::cli

#endif  // DELTADIFF_TOOLS_COMMANDS_H_
