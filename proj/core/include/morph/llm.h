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

#ifndef MORPH_LLM_H_
#define MORPH_LLM_H_

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"

namespace morph {

// Text-completion backend. Implementations must be safe to call from
// several threads at once.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Throws kProviderError on transport or protocol failure.
  virtual std::string Complete(const std::string& prompt) = 0;
};

struct HttpProviderConfig {
  std::string endpoint;  // e.g. "https://llm.example.org/v1/complete"
  std::string model;
  std::string api_key;
  int max_tokens = 32;
  int timeout_seconds = 20;
  // Receives one JSON line per request/response with the key redacted.
  std::function<void(const std::string&)> log;
};

// POSTs {model, prompt, max_tokens} and reads {text}.
class HttpProvider : public CompletionProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  std::string Complete(const std::string& prompt) override;

 private:
  HttpProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

// Replaces every occurrence of `secret` with "***".
std::string RedactSecret(std::string_view text, std::string_view secret);

// Answers from a fixed table; unknown prompts get `fallback`.
class MockProvider : public CompletionProvider {
 public:
  explicit MockProvider(std::map<std::string, std::string> replies, std::string fallback = {})
      : replies_(std::move(replies)), fallback_(std::move(fallback)) {}
  std::string Complete(const std::string& prompt) override;

 private:
  std::map<std::string, std::string> replies_;
  std::string fallback_;
};

// Deterministic stand-in for a hosted model. Reads an inflection prompt,
// takes the first reference example, and transfers its affixes to the
// matching target stem: exemplar stem2 "gir" inside "degirim" turns target
// stem2 "hên" into "dehênim". Replies in a chatty "**form**." style so the
// reply parser is exercised. Unparseable prompts get an empty reply.
class AnalogyMockProvider : public CompletionProvider {
 public:
  std::string Complete(const std::string& prompt) override;
};

struct FewShotExemplar {
  std::string lemma;
  std::vector<std::string> stems;
  std::string form;
  FeatureSet features;
};

// A verified entry together with its lemma, as offered to SelectExemplars.
struct VerifiedCell {
  const WordformEntry* entry = nullptr;
  const Lemma* lemma = nullptr;
};

// Up to k Verified cells whose features equal the target's and whose lemma
// differs, most recently verified first. Throws kNoExemplars when none
// qualify, kValidation for k < 1.
std::vector<FewShotExemplar> SelectExemplars(const WordformEntry& target,
                                             std::span<const VerifiedCell> pool, int k);

// Suggestion prompt for `lemma`; one reference line per exemplar. Stem
// clauses are left out for stems the lemma does not have. Throws
// kNoExemplars for an empty exemplar list.
std::string BuildInflectionPrompt(const Lemma& lemma,
                                  std::span<const FewShotExemplar> exemplars,
                                  const Variety& variety);

// Question-generation prompt for a canonical feature set. Throws kUnknownTag.
std::string BuildQuestionPrompt(const FeatureSet& features,
                                std::string_view meta_language = "English");

// Word placeholder used in question-generation prompts.
inline constexpr std::string_view kQuestionWordPlaceholder = "XXX";

// Turns a generated question into a draft template text: the word
// placeholder becomes [LEMMA]. Throws kProviderError unless the reply
// contains the placeholder exactly once.
std::string QuestionTemplateText(std::string_view reply);

// Last whitespace-delimited token with quotes, punctuation and markdown
// emphasis stripped. Throws kEmptyReply.
std::string ParseSingleWordReply(std::string_view reply);

struct LlmConfig {
  int k = 2;             // shots
  int k_min = 2;         // no provider call below this many exemplars
  int max_in_flight = 4; // concurrent provider calls per variety
};

// Wraps a provider for suggestion use: parses replies, caches results by
// prompt, and degrades to "no suggestion" on failure (one retry).
class LlmSuggester {
 public:
  LlmSuggester(std::shared_ptr<CompletionProvider> provider, LlmConfig config = {});
  ~LlmSuggester();
  LlmSuggester(const LlmSuggester&) = delete;
  LlmSuggester& operator=(const LlmSuggester&) = delete;

  const LlmConfig& config() const { return config_; }

  // Prompt for the target cell, or nullopt when fewer than k_min exemplars
  // exist (cold-start guard).
  std::optional<std::string> PromptFor(const Variety& variety, const Lemma& lemma,
                                       const WordformEntry& target,
                                       std::span<const VerifiedCell> pool) const;

  // Blocking call.
  std::optional<std::string> Suggest(const std::string& prompt);

  // Never blocks on the provider: returns a cached answer, or schedules a
  // background call (when under the in-flight limit) and returns nullopt.
  std::optional<std::string> Poll(Id variety, const std::string& prompt);

  // Blocks until no background call is running.
  void WaitIdle();

  int provider_calls() const;

 private:
  std::optional<std::string> CallParsed(const std::string& prompt);

  std::shared_ptr<CompletionProvider> provider_;
  LlmConfig config_;
  mutable std::mutex mu_;
  std::condition_variable idle_;
  std::map<std::string, std::optional<std::string>> cache_;
  std::map<std::string, bool> pending_;
  std::map<Id, int> in_flight_;
  int running_ = 0;
  int calls_ = 0;
};

}  // namespace morph

#endif  // MORPH_LLM_H_
