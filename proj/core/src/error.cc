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

#include "reqaug/error.h"

namespace reqaug {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kVocabTooSmall: return "VocabTooSmall";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyRequest: return "EmptyRequest";
    case ErrorCode::kUnreadablePath: return "UnreadablePath";
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kNoMaskToken: return "NoMaskToken";
    case ErrorCode::kMultipleMaskTokens: return "MultipleMaskTokens";
    case ErrorCode::kNoMaskableToken: return "NoMaskableToken";
    case ErrorCode::kReservedPosition: return "ReservedPosition";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNoViableCandidate: return "NoViableCandidate";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kEmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCandidate: return "EmptyCandidate";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kCorruptArtifact: return "CorruptArtifact";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNotADistribution: return "NotADistribution";
    case ErrorCode::kNegativeCost: return "NegativeCost";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfRange:
    case ErrorCode::kVocabTooSmall:
    case ErrorCode::kInvalidConfig:
      return ErrorCategory::kConfig;
    case ErrorCode::kZeroVector:
    case ErrorCode::kNotADistribution:
    case ErrorCode::kNegativeCost:
    case ErrorCode::kNonFiniteLoss:
      return ErrorCategory::kNumerical;
    default:
      return ErrorCategory::kData;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace reqaug
