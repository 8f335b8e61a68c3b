// Copyright 2026 The ldp_robust Authors
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

#ifndef LDP_ROBUST_ERROR_H_
#define LDP_ROBUST_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldp_robust {

enum class ErrorCode {
  kNegativeMass,
  kNotNormalized,
  kTooSmallAlphabet,
  kLengthMismatch,
  kOutcomeMismatch,
  kNonPositiveAlpha,
  kAlphaOutOfRange,
  kSymbolOutOfRange,
  kDimensionMismatch,
  kEmptySubset,
  kCountMismatch,
  kEpsOutOfRange,
  kInvalidAttackParams,
  kDimensionTooLarge,
  kRankTooSmall,
  kNotSymmetric,
  kEmptyBatch,
  kEmptySelection,
  kTooFewBatches,
  kAllZeroScores,
  kExhausted,
  kIterationCap,
  kShiftTooLarge,
  kEmptySubspace,
  kInfeasibleScale,
  kProductSpaceTooLarge,
  kBadSigns,
  kInvalidArgument,
  kInvalidConfig,
  kIoError,
  kFormatError,
  kInsufficientData,
  kNoRoot,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kTooSmallAlphabet: return "TooSmallAlphabet";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kOutcomeMismatch: return "OutcomeMismatch";
    case ErrorCode::kNonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::kSymbolOutOfRange: return "SymbolOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kEpsOutOfRange: return "EpsOutOfRange";
    case ErrorCode::kInvalidAttackParams: return "InvalidAttackParams";
    case ErrorCode::kDimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::kRankTooSmall: return "RankTooSmall";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kTooFewBatches: return "TooFewBatches";
    case ErrorCode::kAllZeroScores: return "AllZeroScores";
    case ErrorCode::kExhausted: return "Exhausted";
    case ErrorCode::kIterationCap: return "IterationCap";
    case ErrorCode::kShiftTooLarge: return "ShiftTooLarge";
    case ErrorCode::kEmptySubspace: return "EmptySubspace";
    case ErrorCode::kInfeasibleScale: return "InfeasibleScale";
    case ErrorCode::kProductSpaceTooLarge: return "ProductSpaceTooLarge";
    case ErrorCode::kBadSigns: return "BadSigns";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNoRoot: return "NoRoot";
  }
  return "Unknown";
}

// All library failures are reported through this exception. The code is the
// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

namespace internal {

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace internal
}  // namespace ldp_robust

#endif  // LDP_ROBUST_ERROR_H_
