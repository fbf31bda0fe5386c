// Copyright 2026 The morphdesk Authors.
//
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

#include "morph/error.h"

namespace morph {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNoPosTag: return "NoPosTag";
    case ErrorCode::kUnknownVariety: return "UnknownVariety";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kUnbalancedBrace: return "UnbalancedBrace";
    case ErrorCode::kUnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::kZeroStemIndex: return "ZeroStemIndex";
    case ErrorCode::kMissingStem: return "MissingStem";
    case ErrorCode::kMissingLayerMorpheme: return "MissingLayerMorpheme";
    case ErrorCode::kRegexCompileError: return "RegexCompileError";
    case ErrorCode::kDuplicateFeatureSet: return "DuplicateFeatureSet";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kUntrainedModel: return "UntrainedModel";
    case ErrorCode::kModelFormat: return "ModelFormatError";
    case ErrorCode::kNoExemplars: return "NoExemplars";
    case ErrorCode::kUnknownTag: return "UnknownTag";
    case ErrorCode::kEmptyReply: return "EmptyReply";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kDuplicateSource: return "DuplicateSource";
    case ErrorCode::kNotASpeaker: return "NotASpeaker";
    case ErrorCode::kInvalidState: return "InvalidState";
    case ErrorCode::kEmptyForm: return "EmptyForm";
    case ErrorCode::kStaleVersion: return "StaleVersion";
    case ErrorCode::kSelfVerification: return "SelfVerification";
    case ErrorCode::kNotFlagged: return "NotFlagged";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kMalformedGold: return "MalformedGold";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kPageTooLarge: return "PageTooLarge";
    case ErrorCode::kReferentialIntegrity: return "ReferentialIntegrity";
    case ErrorCode::kStorage: return "StorageError";
    case ErrorCode::kMissingHeader: return "MissingHeader";
    case ErrorCode::kEncodingError: return "EncodingError";
    case ErrorCode::kFieldContainsSeparator: return "FieldContainsSeparator";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kPortUnavailable: return "PortUnavailable";
    case ErrorCode::kUsageError: return "UsageError";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kForbidden: return "Forbidden";
    case ErrorCode::kBadRequest: return "BadRequest";
    case ErrorCode::kMissingIdempotencyKey: return "MissingIdempotencyKey";
  }
  return "Unknown";
}

}  // namespace morph
