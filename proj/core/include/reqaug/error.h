//
// Copyright 2026 The reqaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef REQAUG_ERROR_H_
#define REQAUG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace reqaug {

// Every failure the library reports. The grouping into categories drives the
// CLI exit code.
enum class ErrorCode {
  // configuration
  kOutOfRange,
  kVocabTooSmall,
  kInvalidConfig,
  // data
  kEmptyRequest,
  kUnreadablePath,
  kUnknownFormat,
  kEmptyCorpus,
  kDegenerateSplit,
  kUnknownId,
  kSequenceTooLong,
  kNoMaskToken,
  kMultipleMaskTokens,
  kNoMaskableToken,
  kReservedPosition,
  kIndexOutOfRange,
  kNoViableCandidate,
  kEmptyInput,
  kSingleClassInput,
  kEmptyCalibrationSet,
  kLengthMismatch,
  kEmptyCandidate,
  kDimensionMismatch,
  kWeightMismatch,
  kCorruptArtifact,
  // numerical
  kZeroVector,
  kNotADistribution,
  kNegativeCost,
  kNonFiniteLoss,
};

enum class ErrorCategory { kConfig, kData, kNumerical };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return error_category(code_); }

 private:
  ErrorCode code_;
};

}  // namespace reqaug

#endif  // REQAUG_ERROR_H_
