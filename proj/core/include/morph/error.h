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

#ifndef MORPH_ERROR_H_
#define MORPH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace morph {

// Every failure raised by the library carries one of these codes. The HTTP
// layer maps each code to exactly one status; the CLI prints the code name.
enum class ErrorCode {
  // domain
  kEmptyInput,
  kNoPosTag,
  kUnknownVariety,
  kValidation,
  // pattern engine
  kUnbalancedBrace,
  kUnknownPlaceholder,
  kZeroStemIndex,
  kMissingStem,
  kMissingLayerMorpheme,
  kRegexCompileError,
  kDuplicateFeatureSet,
  // neural inflector
  kInsufficientData,
  kUntrainedModel,
  kModelFormat,
  // llm suggester
  kNoExemplars,
  kUnknownTag,
  kEmptyReply,
  kProviderError,
  // ensemble
  kDuplicateSource,
  // workflow
  kNotASpeaker,
  kInvalidState,
  kEmptyForm,
  kStaleVersion,
  kSelfVerification,
  kNotFlagged,
  // metrics
  kEmptyReference,
  kMalformedGold,
  // storage
  kNotFound,
  kPageTooLarge,
  kReferentialIntegrity,
  kStorage,
  // io formats
  kMissingHeader,
  kEncodingError,
  kFieldContainsSeparator,
  // service / cli
  kConfigError,
  kPortUnavailable,
  kUsageError,
  kUnauthorized,
  kForbidden,
  kBadRequest,
  kMissingIdempotencyKey,
};

// Stable machine-readable name, e.g. "StaleVersion".
std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const { return code_; }
  // Optional path of the offending input field ("stems[2]", "line 4").
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace morph

#endif  // MORPH_ERROR_H_
