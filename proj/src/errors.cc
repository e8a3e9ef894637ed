// Copyright 2026 The OMPQ Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ompq/errors.h"

#include <exception>

namespace ompq {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidMatrix: return "InvalidMatrix";
    case ErrorCode::kMissingLayer: return "MissingLayer";
    case ErrorCode::kSampleMismatch: return "SampleMismatch";
    case ErrorCode::kZeroFeature: return "ZeroFeature";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kOrderMismatch: return "OrderMismatch";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kMixedPinInGroup: return "MixedPinInGroup";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kTrailingBytes: return "TrailingBytes";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

void rethrow_with_context(std::string_view context) {
  std::string prefix(context);
  prefix += ": ";
  try {
    throw;
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(prefix + e.what(), e.min_size_mb());
  } catch (const OmpqError& e) {
    throw OmpqError(e.code(), prefix + e.what());
  }
}

}  // namespace ompq
