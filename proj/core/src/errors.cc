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

#include "deltadiff/errors.h"

namespace deltadiff {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidStride: return "InvalidStride";
    case ErrorCode::kInvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingWeight: return "MissingWeight";
    case ErrorCode::kCyclicGraph: return "CyclicGraph";
    case ErrorCode::kUnsupportedOp: return "UnsupportedOp";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kParamMapMismatch: return "ParamMapMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kZeroStd: return "ZeroStd";
    case ErrorCode::kCorpusError: return "CorpusError";
    case ErrorCode::kOutOfMemoryBudget: return "OutOfMemoryBudget";
    case ErrorCode::kCorpusMismatch: return "CorpusMismatch";
    case ErrorCode::kInvalidP: return "InvalidP";
    case ErrorCode::kTraceMismatch: return "TraceMismatch";
    case ErrorCode::kDegenerateGroups: return "DegenerateGroups";
    case ErrorCode::kPrecondition: return "Precondition";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace deltadiff
