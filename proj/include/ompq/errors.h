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

#ifndef OMPQ_ERRORS_H_
#define OMPQ_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ompq {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidMatrix,
  kMissingLayer,
  kSampleMismatch,
  kZeroFeature,
  kNonFiniteValue,
  kOrderMismatch,
  kDimMismatch,
  kInfeasible,
  kMixedPinInGroup,
  kBadMagic,
  kUnsupportedVersion,
  kUnsupportedDtype,
  kTruncated,
  kTrailingBytes,
  kDuplicateName,
  kParse,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library. The code is stable; the message is
// for humans and may gain context prefixes as the error propagates.
class OmpqError : public std::runtime_error {
 public:
  OmpqError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// The budget cannot be met even with every free layer at the lowest bit.
class InfeasibleError : public OmpqError {
 public:
  InfeasibleError(const std::string& message, double min_size_mb)
      : OmpqError(ErrorCode::kInfeasible, message), min_size_mb_(min_size_mb) {}

  double min_size_mb() const noexcept { return min_size_mb_; }

 private:
  double min_size_mb_;
};

// Rethrows the in-flight OmpqError (or InfeasibleError) with `context`
// prepended to the message. Must be called from inside a catch block.
[[noreturn]] void rethrow_with_context(std::string_view context);

}  // namespace ompq

#endif  // OMPQ_ERRORS_H_
