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

#ifndef DELTADIFF_ERRORS_H_
#define DELTADIFF_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace deltadiff {

enum class ErrorCode {
  kShapeMismatch,
  kInvalidStride,
  kInvalidEpsilon,
  kParseError,
  kMissingWeight,
  kCyclicGraph,
  kUnsupportedOp,
  kIoError,
  kInvalidGraph,
  kParamMapMismatch,
  kConfigError,
  kZeroStd,
  kCorpusError,
  kOutOfMemoryBudget,
  kCorpusMismatch,
  kInvalidP,
  kTraceMismatch,
  kDegenerateGroups,
  kPrecondition,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

// All harness failures are reported through this exception type. The code
// is what callers branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace deltadiff

#endif  // DELTADIFF_ERRORS_H_
