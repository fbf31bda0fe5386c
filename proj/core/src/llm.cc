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

#include "morph/llm.h"

#include <httplib.h>
#include <unicode/uchar.h>

#include "json.hpp"

#include <algorithm>
#include <regex>
#include <thread>

#include "morph/error.h"
#include "morph/text.h"
#include "morph/unimorph.h"

namespace morph {
namespace {

using json = nlohmann::json;

bool IsStrippable(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) || u_ispunct(static_cast<UChar32>(c)) ||
         c == U'`' || c == U'~' || c == U'^';
}

std::u32string StripEnds(std::u32string s) {
  size_t b = 0;
  while (b < s.size() && IsStrippable(s[b])) ++b;
  size_t e = s.size();
  while (e > b && IsStrippable(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string StemClauses(const std::vector<std::string>& stems) {
  std::string out;
  for (size_t i = 0; i < stems.size(); ++i) {
    if (i > 0) out += i + 1 == stems.size() ? " and " : ", ";
    out += "stem" + std::to_string(i + 1) + " is \"" + stems[i] + "\"";
  }
  return out;
}

std::string ExemplarStems(const std::vector<std::string>& stems) {
  std::string out;
  for (size_t i = 0; i < stems.size(); ++i) {
    if (i > 0) out += ", ";
    out += "stem" + std::to_string(i + 1) + ": \"" + stems[i] + "\"";
  }
  return out;
}

}  // namespace

std::string RedactSecret(std::string_view text, std::string_view secret) {
  std::string out(text);
  if (secret.empty()) return out;
  size_t pos = 0;
  while ((pos = out.find(secret, pos)) != std::string::npos) {
    out.replace(pos, secret.size(), "***");
    pos += 3;
  }
  return out;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    throw Error(ErrorCode::kConfigError, "bad provider endpoint: " + config_.endpoint,
                "provider.endpoint");
  }
  scheme_host_port_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : std::string("/");
}

std::string HttpProvider::Complete(const std::string& prompt) {
  json request = {{"model", config_.model}, {"prompt", prompt}, {"max_tokens", config_.max_tokens}};
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  if (config_.log) {
    json line = {{"event", "provider_request"}, {"endpoint", config_.endpoint},
                 {"authorization", config_.api_key.empty() ? "" : "Bearer ***"},
                 {"body", request}};
    config_.log(RedactSecret(line.dump(), config_.api_key));
  }
  auto res = client.Post(path_, headers, request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderError, "provider unreachable: " + httplib::to_string(res.error()));
  }
  if (config_.log) {
    json line = {{"event", "provider_response"}, {"status", res->status}, {"body", res->body}};
    config_.log(RedactSecret(line.dump(), config_.api_key));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderError, "provider returned HTTP " + std::to_string(res->status));
  }
  json body = json::parse(res->body, nullptr, false);
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw Error(ErrorCode::kProviderError, "provider response lacks a text field");
  }
  return body["text"].get<std::string>();
}

std::string MockProvider::Complete(const std::string& prompt) {
  auto it = replies_.find(prompt);
  return it == replies_.end() ? fallback_ : it->second;
}

std::string AnalogyMockProvider::Complete(const std::string& prompt) {
  static const std::regex kTarget(R"re(the lemma (\S+?)(, given that its [^\n]*?)? for a )re");
  static const std::regex kTargetStem(R"re(stem(\d+) is "([^"]*)")re");
  static const std::regex kExample(
      R"re(- The lemma (\S+) (?:\(with ([^)]*)\) )?yields the form (\S+)\.)re");
  static const std::regex kExampleStem(R"re(stem(\d+): "([^"]*)")re");
  std::smatch target;
  std::smatch example;
  if (!std::regex_search(prompt, target, kTarget) ||
      !std::regex_search(prompt, example, kExample)) {
    return {};
  }
  auto stems = [](const std::string& clause, const std::regex& re) {
    std::map<int, std::string> out;
    for (std::sregex_iterator it(clause.begin(), clause.end(), re), end; it != end; ++it) {
      out[std::stoi((*it)[1])] = (*it)[2];
    }
    return out;
  };
  const std::map<int, std::string> target_stems = stems(target[2], kTargetStem);
  const std::map<int, std::string> ex_stems = stems(example[2], kExampleStem);
  const std::u32string ex_form = text::ToCodePoints(std::string(example[3]));

  // Longest exemplar stem found inside the exemplar form, if the target has
  // the same stem slot.
  std::u32string result;
  size_t best = 0;
  for (const auto& [index, stem] : ex_stems) {
    auto t = target_stems.find(index);
    std::u32string s = text::ToCodePoints(stem);
    if (t == target_stems.end() || s.empty() || s.size() <= best) continue;
    size_t at = ex_form.find(s);
    if (at == std::u32string::npos) continue;
    best = s.size();
    result = ex_form.substr(0, at) + text::ToCodePoints(t->second) + ex_form.substr(at + s.size());
  }
  if (result.empty()) {
    // Suffix replacement learned from the exemplar's lemma/form pair.
    const std::u32string ex_lemma = text::ToCodePoints(std::string(example[1]));
    const std::u32string target_lemma = text::ToCodePoints(std::string(target[1]));
    size_t common = 0;
    while (common < ex_lemma.size() && common < ex_form.size() &&
           ex_lemma[common] == ex_form[common]) {
      ++common;
    }
    size_t drop = ex_lemma.size() - common;
    if (common == 0 || drop > target_lemma.size()) return {};
    result = target_lemma.substr(0, target_lemma.size() - drop) + ex_form.substr(common);
  }
  return "The answer is **" + text::FromCodePoints(result) + "**.";
}

std::vector<FewShotExemplar> SelectExemplars(const WordformEntry& target,
                                             std::span<const VerifiedCell> pool, int k) {
  if (k < 1) throw Error(ErrorCode::kValidation, "k must be at least 1", "k");
  std::vector<VerifiedCell> matches;
  for (const VerifiedCell& c : pool) {
    if (c.entry == nullptr || c.lemma == nullptr) continue;
    if (c.entry->status != EntryStatus::kVerified || !c.entry->form) continue;
    if (c.entry->features != target.features || c.entry->lemma == target.lemma) continue;
    matches.push_back(c);
  }
  if (matches.empty()) {
    throw Error(ErrorCode::kNoExemplars, "no verified cell with features " + target.features.str());
  }
  std::sort(matches.begin(), matches.end(), [](const VerifiedCell& a, const VerifiedCell& b) {
    if (a.entry->verified_at_ms != b.entry->verified_at_ms) {
      return a.entry->verified_at_ms > b.entry->verified_at_ms;
    }
    return a.entry->id > b.entry->id;
  });
  if (matches.size() > static_cast<size_t>(k)) matches.resize(k);
  std::vector<FewShotExemplar> out;
  for (const VerifiedCell& c : matches) {
    out.push_back({c.lemma->citation_form, c.lemma->stems, *c.entry->form, c.entry->features});
  }
  return out;
}

std::string BuildInflectionPrompt(const Lemma& lemma, std::span<const FewShotExemplar> exemplars,
                                  const Variety& variety) {
  if (exemplars.empty()) throw Error(ErrorCode::kNoExemplars, "inflection prompt needs an example");
  std::string out = "In the language " + variety.name +
                    ", what is the correct inflected form of the lemma " + lemma.citation_form;
  if (!lemma.stems.empty()) out += ", given that its " + StemClauses(lemma.stems);
  out += " for a specific grammatical feature set? As reference examples, under the same "
         "grammatical features:\n";
  for (const FewShotExemplar& e : exemplars) {
    out += "- The lemma " + e.lemma;
    if (!e.stems.empty()) out += " (with " + ExemplarStems(e.stems) + ")";
    out += " yields the form " + e.form + ".\n";
  }
  out += "Think about this quietly and just give me one final inflected word.";
  return out;
}

std::string BuildQuestionPrompt(const FeatureSet& features, std::string_view meta_language) {
  std::vector<std::string> clauses;
  for (const std::string& tag : features.tags()) clauses.push_back(unimorph::Verbose(tag));
  const std::string lang(meta_language);
  return "You are a field linguist working with native speakers to study the morphology of "
         "their language. The speakers are not trained in linguistics but understand " +
         lang + ". Ask a speaker how they would say the word \"XXX\" with these specific "
         "features: \"" + text::Join(clauses, ", ") +
         "\".\nGenerate only the question for the speaker. \"XXX\" should be in the question. "
         "Do not use linguistic terms. Keep it under 50 words. Do not explain anything to me.";
}

std::string QuestionTemplateText(std::string_view reply) {
  std::string question = text::Trim(reply);
  size_t first = question.find(kQuestionWordPlaceholder);
  if (first == std::string::npos ||
      question.find(kQuestionWordPlaceholder, first + 1) != std::string::npos) {
    throw Error(ErrorCode::kProviderError, "generated question must contain XXX exactly once");
  }
  if (question.find(kLemmaPlaceholder) != std::string::npos) {
    throw Error(ErrorCode::kProviderError, "generated question already contains [LEMMA]");
  }
  question.replace(first, kQuestionWordPlaceholder.size(), kLemmaPlaceholder);
  // Providers like to quote the word; the template should not.
  std::string quoted = "\"" + std::string(kLemmaPlaceholder) + "\"";
  if (size_t q = question.find(quoted); q != std::string::npos) {
    question.replace(q, quoted.size(), kLemmaPlaceholder);
  }
  return question;
}

std::string ParseSingleWordReply(std::string_view reply) {
  if (!text::IsValidUtf8(reply)) throw Error(ErrorCode::kEmptyReply, "reply is not UTF-8");
  std::u32string s = StripEnds(text::ToCodePoints(reply));
  size_t last_space = std::u32string::npos;
  for (size_t i = 0; i < s.size(); ++i) {
    if (u_isUWhiteSpace(static_cast<UChar32>(s[i]))) last_space = i;
  }
  if (last_space != std::u32string::npos) s = StripEnds(s.substr(last_space + 1));
  if (s.empty()) throw Error(ErrorCode::kEmptyReply, "reply has no word");
  return text::Nfc(text::FromCodePoints(s));
}

LlmSuggester::LlmSuggester(std::shared_ptr<CompletionProvider> provider, LlmConfig config)
    : provider_(std::move(provider)), config_(config) {
  if (config_.k < 1 || config_.k > 3) {
    throw Error(ErrorCode::kConfigError, "llm k must be within 1..3", "llm.k");
  }
  if (config_.k_min < 1 || config_.k_min > config_.k) {
    throw Error(ErrorCode::kConfigError, "llm k_min must be within 1..k", "llm.k_min");
  }
}

LlmSuggester::~LlmSuggester() { WaitIdle(); }

std::optional<std::string> LlmSuggester::PromptFor(const Variety& variety, const Lemma& lemma,
                                                   const WordformEntry& target,
                                                   std::span<const VerifiedCell> pool) const {
  if (!provider_) return std::nullopt;
  std::vector<FewShotExemplar> exemplars;
  try {
    exemplars = SelectExemplars(target, pool, config_.k);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoExemplars) return std::nullopt;
    throw;
  }
  if (static_cast<int>(exemplars.size()) < config_.k_min) return std::nullopt;
  return BuildInflectionPrompt(lemma, exemplars, variety);
}

std::optional<std::string> LlmSuggester::CallParsed(const std::string& prompt) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++calls_;
    }
    try {
      std::string word = ParseSingleWordReply(provider_->Complete(prompt));
      if (text::ContainsWhitespace(word)) return std::nullopt;
      return word;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyReply) return std::nullopt;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::optional<std::string> LlmSuggester::Suggest(const std::string& prompt) {
  if (!provider_) return std::nullopt;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(prompt); it != cache_.end()) return it->second;
  }
  std::optional<std::string> answer = CallParsed(prompt);
  std::lock_guard<std::mutex> lock(mu_);
  cache_[prompt] = answer;
  return answer;
}

std::optional<std::string> LlmSuggester::Poll(Id variety, const std::string& prompt) {
  if (!provider_) return std::nullopt;
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = cache_.find(prompt); it != cache_.end()) return it->second;
  if (pending_.count(prompt) || in_flight_[variety] >= config_.max_in_flight) return std::nullopt;
  pending_[prompt] = true;
  ++in_flight_[variety];
  ++running_;
  std::thread([this, variety, prompt] {
    std::optional<std::string> answer = CallParsed(prompt);
    std::lock_guard<std::mutex> inner(mu_);
    cache_[prompt] = answer;
    pending_.erase(prompt);
    --in_flight_[variety];
    if (--running_ == 0) idle_.notify_all();
  }).detach();
  return std::nullopt;
}

void LlmSuggester::WaitIdle() {
  std::unique_lock<std::mutex> lock(mu_);
  idle_.wait(lock, [this] { return running_ == 0; });
}

int LlmSuggester::provider_calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

}  // namespace morph
