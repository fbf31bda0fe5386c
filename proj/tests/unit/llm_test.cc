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

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <thread>

#include "expect_error.h"
#include "httplib.h"
#include "json.hpp"
#include "morph/llm.h"

namespace morph {
namespace {

const char kAppendixA[] =
    "In the language YYY, what is the correct inflected form of the lemma hênan, given that its "
    "stem1 is \"hêna\" and stem2 is \"hên\" for a specific grammatical feature set? As reference "
    "examples, under the same grammatical features:\n"
    "- The lemma girtin (with stem1: \"girt\", stem2: \"gir\") yields the form degirim.\n"
    "- The lemma kuştin (with stem1: \"kuşt\", stem2: \"kuj\") yields the form dekujim.\n"
    "Think about this quietly and just give me one final inflected word.";

const char kAppendixBPast[] =
    "You are a field linguist working with native speakers to study the morphology of their "
    "language. The speakers are not trained in linguistics but understand English. Ask a speaker "
    "how they would say the word \"XXX\" with these specific features: "
    "\"Part-of-Speech=Verb, Tense=Past\".\n"
    "Generate only the question for the speaker. \"XXX\" should be in the question. Do not use "
    "linguistic terms. Keep it under 50 words. Do not explain anything to me.";

Lemma Kurdish(Id id, std::string citation, std::vector<std::string> stems) {
  Lemma l;
  l.id = id;
  l.variety = 1;
  l.citation_form = std::move(citation);
  l.stems = std::move(stems);
  return l;
}

Variety Yyy() { return Variety{1, "YYY", "English", std::nullopt, {}}; }

std::vector<FewShotExemplar> KurdishExemplars() {
  FeatureSet fs = FeatureSet::Parse("V;PRS;1;SG");
  return {{"girtin", {"girt", "gir"}, "degirim", fs}, {"kuştin", {"kuşt", "kuj"}, "dekujim", fs}};
}

TEST(InflectionPrompt, ReproducesReferenceText) {
  EXPECT_EQ(BuildInflectionPrompt(Kurdish(1, "hênan", {"hêna", "hên"}), KurdishExemplars(), Yyy()),
            kAppendixA);
}

TEST(InflectionPrompt, ContainsExemplarLine) {
  std::string p = BuildInflectionPrompt(Kurdish(1, "hênan", {"hêna", "hên"}), KurdishExemplars(), Yyy());
  EXPECT_NE(p.find("lemma girtin (with stem1: \"girt\", stem2: \"gir\") yields the form degirim"),
            std::string::npos);
}

TEST(InflectionPrompt, SingleStemHasNoStem2Clause) {
  std::vector<FewShotExemplar> ex = {{"walk", {"walk"}, "walked", FeatureSet::Parse("V;PST")}};
  std::string p = BuildInflectionPrompt(Kurdish(1, "talk", {"talk"}), ex, Yyy());
  EXPECT_EQ(p.find("stem2"), std::string::npos);
  EXPECT_NE(p.find("given that its stem1 is \"talk\" for a specific"), std::string::npos);
  EXPECT_NE(p.find("- The lemma walk (with stem1: \"walk\") yields the form walked.\n"), std::string::npos);
}

TEST(InflectionPrompt, OneBulletPerExemplar) {
  auto ex = KurdishExemplars();
  ex.resize(1);
  std::string p = BuildInflectionPrompt(Kurdish(1, "hênan", {"hêna", "hên"}), ex, Yyy());
  size_t bullets = 0;
  for (size_t pos = p.find("\n- "); pos != std::string::npos; pos = p.find("\n- ", pos + 1)) ++bullets;
  EXPECT_EQ(bullets, 1u);
  EXPECT_MORPH_ERROR(BuildInflectionPrompt(Kurdish(1, "hênan", {}), std::vector<FewShotExemplar>{}, Yyy()),
                     ErrorCode::kNoExemplars);
}

TEST(InflectionPrompt, TargetNamedOnceInQuestionClause) {
  std::string p = BuildInflectionPrompt(Kurdish(1, "hênan", {"hêna", "hên"}), KurdishExemplars(), Yyy());
  std::string question = p.substr(0, p.find('\n'));
  size_t first = question.find("hênan");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(question.find("hênan", first + 1), std::string::npos);
}

TEST(QuestionPrompt, ReproducesReferenceText) {
  EXPECT_EQ(BuildQuestionPrompt(FeatureSet::Parse("V;PST")), kAppendixBPast);
}

TEST(QuestionPrompt, ImperativeClauses) {
  std::string p = BuildQuestionPrompt(FeatureSet::Parse("V;IMP;PRS;PL;2"));
  EXPECT_NE(p.find("\"Part-of-Speech=Verb, Mood=Imperative, Tense=Present, Number=Plural, Person=2nd\""),
            std::string::npos);
}

TEST(QuestionPrompt, MetaLanguage) {
  std::string p = BuildQuestionPrompt(FeatureSet::Parse("V;PST"), "Spanish");
  EXPECT_NE(p.find("understand Spanish."), std::string::npos);
}

TEST(QuestionPrompt, UnknownTag) {
  EXPECT_MORPH_ERROR(BuildQuestionPrompt(FeatureSet::Parse("V;XYZ")), ErrorCode::kUnknownTag);
}

TEST(QuestionTemplateText, PlaceholderBecomesLemma) {
  EXPECT_EQ(QuestionTemplateText("How would you say that you \"XXX\" yesterday?"),
            "How would you say that you [LEMMA] yesterday?");
  EXPECT_MORPH_ERROR(QuestionTemplateText("no word here"), ErrorCode::kProviderError);
}

TEST(ParseReply, Examples) {
  EXPECT_EQ(ParseSingleWordReply("The answer is **dehênim**."), "dehênim");
  EXPECT_EQ(ParseSingleWordReply("dekujim"), "dekujim");
  EXPECT_EQ(ParseSingleWordReply("`walked`"), "walked");
  EXPECT_EQ(ParseSingleWordReply("\"geliyor\"\n"), "geliyor");
  EXPECT_MORPH_ERROR(ParseSingleWordReply("   "), ErrorCode::kEmptyReply);
  EXPECT_MORPH_ERROR(ParseSingleWordReply("**"), ErrorCode::kEmptyReply);
}

TEST(ParseReply, Idempotent) {
  for (const char* r : {"The answer is **dehênim**.", "  _x_ ", "Final: 'kitaplar'!", "a b c", "«ok»"}) {
    std::string once = ParseSingleWordReply(r);
    EXPECT_EQ(ParseSingleWordReply(once), once) << r;
  }
}

TEST(ParseReply, Normalizes) {
  EXPECT_EQ(ParseSingleWordReply("dehe\xcc\x82nim"), "dehênim");
}

// Exemplar selection.

struct Pool {
  std::vector<Lemma> lemmas;
  std::vector<WordformEntry> entries;

  std::vector<VerifiedCell> Cells() const {
    std::vector<VerifiedCell> out;
    for (const auto& e : entries) {
      for (const auto& l : lemmas) {
        if (l.id == e.lemma) out.push_back({&e, &l});
      }
    }
    return out;
  }
};

WordformEntry Verified(Id id, Id lemma, const char* features, const char* form, std::int64_t at) {
  WordformEntry e;
  e.id = id;
  e.lemma = lemma;
  e.features = FeatureSet::Parse(features);
  e.form = form;
  e.status = EntryStatus::kVerified;
  e.verified_at_ms = at;
  return e;
}

TEST(SelectExemplars, MostRecentFirst) {
  Pool pool;
  for (Id i = 1; i <= 6; ++i) pool.lemmas.push_back(Kurdish(i, "l" + std::to_string(i), {"s"}));
  for (Id i = 2; i <= 6; ++i) pool.entries.push_back(Verified(i, i, "V;PRS;1;SG", "f", 100 * i));
  pool.entries.push_back(Verified(7, 3, "V;PST;1;SG", "other", 10000));
  WordformEntry target;
  target.lemma = 1;
  target.features = FeatureSet::Parse("V;PRS;1;SG");
  auto cells = pool.Cells();
  auto ex = SelectExemplars(target, cells, 2);
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].lemma, "l6");
  EXPECT_EQ(ex[1].lemma, "l5");
  EXPECT_EQ(SelectExemplars(target, cells, 3).size(), 3u);
}

TEST(SelectExemplars, SkipsTargetLemmaAndUnverified) {
  Pool pool;
  pool.lemmas = {Kurdish(1, "a", {}), Kurdish(2, "b", {})};
  pool.entries.push_back(Verified(1, 1, "V;PST", "x", 5));
  WordformEntry sub = Verified(2, 2, "V;PST", "y", 6);
  sub.status = EntryStatus::kSubmitted;
  pool.entries.push_back(sub);
  WordformEntry target;
  target.lemma = 1;
  target.features = FeatureSet::Parse("V;PST");
  auto cells = pool.Cells();
  EXPECT_MORPH_ERROR(SelectExemplars(target, cells, 2), ErrorCode::kNoExemplars);
  EXPECT_MORPH_ERROR(SelectExemplars(target, cells, 0), ErrorCode::kValidation);
}

TEST(SelectExemplars, OneAvailable) {
  Pool pool;
  pool.lemmas = {Kurdish(1, "a", {}), Kurdish(2, "b", {})};
  pool.entries.push_back(Verified(1, 2, "V;PST", "x", 5));
  WordformEntry target;
  target.lemma = 1;
  target.features = FeatureSet::Parse("V;PST");
  auto cells = pool.Cells();
  EXPECT_EQ(SelectExemplars(target, cells, 3).size(), 1u);
}

// Mock providers.

TEST(AnalogyMock, TransfersAffixesToMatchingStem) {
  AnalogyMockProvider mock;
  std::string reply = mock.Complete(kAppendixA);
  EXPECT_EQ(ParseSingleWordReply(reply), "dehênim");
  EXPECT_EQ(mock.Complete(kAppendixA), reply);
  EXPECT_EQ(mock.Complete("unrelated"), "");
}

TEST(MockProvider, TableAndFallback) {
  MockProvider mock({{"p", "answer"}}, "none");
  EXPECT_EQ(mock.Complete("p"), "answer");
  EXPECT_EQ(mock.Complete("q"), "none");
}

class CountingProvider : public CompletionProvider {
 public:
  explicit CountingProvider(std::string reply, int failures = 0)
      : reply_(std::move(reply)), failures_(failures) {}
  std::string Complete(const std::string&) override {
    int n = calls++;
    if (gate) {
      std::unique_lock lock(mu);
      cv.wait(lock, [this] { return open; });
    }
    if (n < failures_) throw Error(ErrorCode::kProviderError, "down");
    return reply_;
  }
  void Open() {
    std::lock_guard lock(mu);
    open = true;
    cv.notify_all();
  }

  std::atomic<int> calls{0};
  bool gate = false;
  std::mutex mu;
  std::condition_variable cv;
  bool open = false;

 private:
  std::string reply_;
  int failures_;
};

TEST(LlmSuggester, ColdStartGuardMakesNoCall) {
  auto provider = std::make_shared<CountingProvider>("x");
  LlmSuggester s(provider, LlmConfig{2, 2, 4});
  Pool pool;
  pool.lemmas = {Kurdish(1, "a", {}), Kurdish(2, "b", {}), Kurdish(3, "c", {})};
  pool.entries.push_back(Verified(1, 2, "V;PST", "bed", 1));
  WordformEntry target;
  target.lemma = 1;
  target.features = FeatureSet::Parse("V;PST");
  auto cells = pool.Cells();
  EXPECT_FALSE(s.PromptFor(Yyy(), pool.lemmas[0], target, cells));
  pool.entries.push_back(Verified(2, 3, "V;PST", "ced", 2));
  cells = pool.Cells();
  EXPECT_TRUE(s.PromptFor(Yyy(), pool.lemmas[0], target, cells));
  EXPECT_EQ(provider->calls, 0);
}

TEST(LlmSuggester, CachesByPrompt) {
  auto provider = std::make_shared<CountingProvider>("**walked**");
  LlmSuggester s(provider);
  EXPECT_EQ(s.Suggest("p"), "walked");
  EXPECT_EQ(s.Suggest("p"), "walked");
  EXPECT_EQ(provider->calls, 1);
}

TEST(LlmSuggester, OneRetryThenDegrades) {
  auto flaky = std::make_shared<CountingProvider>("ok", 1);
  LlmSuggester a(flaky);
  EXPECT_EQ(a.Suggest("p"), "ok");
  EXPECT_EQ(flaky->calls, 2);

  auto down = std::make_shared<CountingProvider>("ok", 100);
  LlmSuggester b(down);
  EXPECT_FALSE(b.Suggest("p"));
  EXPECT_EQ(down->calls, 2);

  auto empty = std::make_shared<CountingProvider>("   ");
  LlmSuggester c(empty);
  EXPECT_FALSE(c.Suggest("p"));
}

TEST(LlmSuggester, InvalidShots) {
  EXPECT_MORPH_ERROR(LlmSuggester(nullptr, LlmConfig{4, 2, 4}), ErrorCode::kConfigError);
  EXPECT_MORPH_ERROR(LlmSuggester(nullptr, LlmConfig{0, 0, 4}), ErrorCode::kConfigError);
  EXPECT_MORPH_ERROR(LlmSuggester(nullptr, LlmConfig{2, 3, 4}), ErrorCode::kConfigError);
}

TEST(LlmSuggester, PollNeverBlocksAndBoundsInFlight) {
  auto provider = std::make_shared<CountingProvider>("w");
  provider->gate = true;
  LlmSuggester s(provider, LlmConfig{2, 2, 2});
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) EXPECT_FALSE(s.Poll(1, "p" + std::to_string(i)));
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
  // Another variety has its own budget.
  EXPECT_FALSE(s.Poll(2, "q"));
  for (int spin = 0; spin < 200 && provider->calls < 3; ++spin) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  EXPECT_EQ(provider->calls, 3);
  provider->Open();
  s.WaitIdle();
  EXPECT_EQ(s.Poll(1, "p0"), "w");
  EXPECT_EQ(s.Poll(2, "q"), "w");
  EXPECT_FALSE(s.Poll(1, "p4"));  // was over the limit, so scheduled only now
  s.WaitIdle();
  EXPECT_EQ(s.Poll(1, "p4"), "w");
}

// HTTP provider against a local stub.

TEST(HttpProvider, PostsJsonAndRedactsKey) {
  httplib::Server stub;
  nlohmann::json seen;
  std::string auth;
  stub.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"text":"The answer is **dekujim**."})", "application/json");
  });
  stub.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  int port = stub.bind_to_any_port("127.0.0.1");
  std::thread t([&] { stub.listen_after_bind(); });
  stub.wait_until_ready();

  std::vector<std::string> log;
  HttpProviderConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
  cfg.model = "tiny";
  cfg.api_key = "sk-secret-123";
  cfg.log = [&](const std::string& line) { log.push_back(line); };
  HttpProvider provider(cfg);
  EXPECT_EQ(provider.Complete("hello"), "The answer is **dekujim**.");
  EXPECT_EQ(seen["model"], "tiny");
  EXPECT_EQ(seen["prompt"], "hello");
  EXPECT_EQ(seen["max_tokens"], 32);
  EXPECT_EQ(auth, "Bearer sk-secret-123");
  ASSERT_EQ(log.size(), 2u);
  for (const auto& line : log) EXPECT_EQ(line.find("sk-secret-123"), std::string::npos);

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  EXPECT_MORPH_ERROR(HttpProvider(cfg).Complete("x"), ErrorCode::kProviderError);
  stub.stop();
  t.join();

  cfg.endpoint = "not a url";
  EXPECT_MORPH_ERROR(HttpProvider{cfg}, ErrorCode::kConfigError);
}

TEST(RedactSecret, ReplacesEveryOccurrence) {
  EXPECT_EQ(RedactSecret("k=abc; again abc", "abc"), "k=***; again ***");
  EXPECT_EQ(RedactSecret("nothing", ""), "nothing");
}

}  // namespace
}  // namespace morph
