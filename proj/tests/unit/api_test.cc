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
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "morph/api.h"

namespace morph {
namespace {

using nlohmann::json;

const char kClasses[] = "inflection_class\tpos\nverb\tV\n";
const char kStructures[] =
    "structure\tinflection_class\tfeatures\tpattern\tpriority\tlayer\n"
    "basic\tverb\tV;NFIN\t{stem1}\t0\t\n"
    "basic\tverb\tV;PST\t{stem1}ed\t1\t\n";
const char kLexicon[] =
    "lemma\tgloss\tinflection_class\tpriority\tstem1\n"
    "walk\twalk\tverb\t1\twalk\n"
    "jump\tjump\tverb\t0\tjump\n";

class ApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    users = {{"lin", "t-lin", Role::kLinguist, Expertise::kExpert, false},
             {"ann", "t-ann", Role::kSpeaker, Expertise::kExpert, true},
             {"ben", "t-ben", Role::kSpeaker, Expertise::kExpert, true},
             {"cat", "t-cat", Role::kSpeaker, Expertise::kExpert, true},
             {"dov", "t-dov", Role::kSpeaker, Expertise::kNonExpert, false}};
    auth = std::make_unique<StaticTokenAuthenticator>(repo, users);
    WorkflowConfig wc;
    wc.auto_retrain = false;
    workflow = std::make_unique<Workflow>(repo, wc, models, nullptr);
    ApiOptions opts;
    opts.session_ttl_seconds = 60;
    opts.clock = [this] { return now.load(); };
    opts.log = [this](const std::string& line) {
      std::lock_guard lock(log_mu);
      log.push_back(line);
    };
    opts.provider = std::make_shared<MockProvider>(
        std::map<std::string, std::string>{}, "How would you say \"XXX\" if it happened yesterday?");
    server = std::make_unique<ApiServer>(repo, *workflow, *auth, opts);
    port = server->Bind("127.0.0.1", 0);
    server->Start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  void TearDown() override { server->Stop(); }

  std::string Login(const std::string& token) {
    auto r = client->Post("/api/auth/session", json{{"token", token}}.dump(), "application/json");
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body)["session_token"];
  }

  httplib::Headers As(const std::string& session, const std::string& key = "") {
    httplib::Headers h = {{"Authorization", "Bearer " + session}};
    if (!key.empty()) h.emplace("Idempotency-Key", key);
    return h;
  }

  httplib::Result PostJson(const std::string& session, const std::string& path, const json& body,
                           const std::string& key = "") {
    return client->Post(path, As(session, key), body.dump(), "application/json");
  }

  static std::string Code(const httplib::Result& r) { return json::parse(r->body)["error"]["code"]; }

  // Variety with materials imported and entries generated.
  Id SetUpVariety(const std::string& lin) {
    auto r = PostJson(lin, "/api/varieties", {{"name", "English"}}, "v1");
    EXPECT_EQ(r->status, 201);
    Id v = json::parse(r->body)["id"];
    std::string base = "/api/varieties/" + std::to_string(v);
    int key = 0;
    for (auto [kind, doc] : {std::pair{"classes", kClasses}, std::pair{"structures", kStructures},
                             std::pair{"lexicon", kLexicon}}) {
      auto imp = client->Post(base + "/import/" + kind, As(lin, "imp" + std::to_string(++key)), doc,
                              "text/tab-separated-values");
      EXPECT_EQ(imp->status, 200) << imp->body;
      EXPECT_TRUE(json::parse(imp->body)["errors"].empty()) << imp->body;
    }
    auto gen = PostJson(lin, base + "/generate", json::object(), "gen");
    EXPECT_EQ(json::parse(gen->body)["created"], 4);
    return v;
  }

  SqliteRepository repo{":memory:"};
  ModelRegistry models;
  std::vector<UserSpec> users;
  std::unique_ptr<StaticTokenAuthenticator> auth;
  std::unique_ptr<Workflow> workflow;
  std::unique_ptr<ApiServer> server;
  std::unique_ptr<httplib::Client> client;
  std::atomic<std::int64_t> now{1'000'000};
  std::mutex log_mu;
  std::vector<std::string> log;
  int port = 0;
};

TEST(HttpStatus, EveryCodeHasAnErrorStatus) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kMissingIdempotencyKey); ++c) {
    int s = HttpStatusFor(static_cast<ErrorCode>(c));
    EXPECT_GE(s, 400);
    EXPECT_LT(s, 600);
  }
  EXPECT_EQ(HttpStatusFor(ErrorCode::kStaleVersion), 409);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kForbidden), 403);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kUnauthorized), 401);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kMissingIdempotencyKey), 428);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kValidation), 422);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kNotFound), 404);
}

TEST_F(ApiTest, SessionsAndAuthentication) {
  auto bad = client->Post("/api/auth/session", R"({"token":"nope"})", "application/json");
  EXPECT_EQ(bad->status, 401);
  EXPECT_EQ(Code(bad), "Unauthorized");
  EXPECT_EQ(client->Get("/api/me")->status, 401);

  std::string s = Login("t-ann");
  auto me = client->Get("/api/me", As(s));
  ASSERT_EQ(me->status, 200);
  EXPECT_EQ(json::parse(me->body)["name"], "ann");
  EXPECT_EQ(json::parse(me->body)["designated_expert"], true);

  now += 61'000;
  auto expired = client->Get("/api/me", As(s));
  EXPECT_EQ(expired->status, 401);
  EXPECT_EQ(client->Get("/api/me", As("forged"))->status, 401);
}

TEST_F(ApiTest, DuplicateTokensRejected) {
  std::vector<UserSpec> dup = {{"a", "same", Role::kSpeaker, Expertise::kExpert, false},
                               {"b", "same", Role::kSpeaker, Expertise::kExpert, false}};
  try {
    StaticTokenAuthenticator a(repo, dup);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST_F(ApiTest, RolesAndIdempotency) {
  std::string lin = Login("t-lin"), ann = Login("t-ann");
  auto forbidden = PostJson(ann, "/api/varieties", {{"name", "X"}}, "k");
  EXPECT_EQ(forbidden->status, 403);
  EXPECT_EQ(Code(forbidden), "Forbidden");

  auto missing = PostJson(lin, "/api/varieties", {{"name", "X"}});
  EXPECT_EQ(missing->status, 428);
  EXPECT_EQ(Code(missing), "MissingIdempotencyKey");

  auto first = PostJson(lin, "/api/varieties", {{"name", "X"}}, "create-x");
  auto again = PostJson(lin, "/api/varieties", {{"name", "X"}}, "create-x");
  EXPECT_EQ(first->status, 201);
  EXPECT_EQ(again->status, 201);
  EXPECT_EQ(first->body, again->body);
  EXPECT_EQ(again->get_header_value("Idempotent-Replay"), "true");
  EXPECT_EQ(repo.ListVarieties().size(), 1u);

  auto unknown = client->Get("/api/varieties/99", As(lin));
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(Code(unknown), "UnknownVariety");
  EXPECT_EQ(client->Get("/api/nothing-here", As(lin))->status, 404);
  auto junk = client->Post("/api/varieties", As(lin, "j"), "{not json", "application/json");
  EXPECT_EQ(junk->status, 400);
}

TEST_F(ApiTest, MaterialCrud) {
  std::string lin = Login("t-lin");
  Id v = SetUpVariety(lin);
  std::string base = "/api/varieties/" + std::to_string(v);
  auto lemmas = json::parse(client->Get(base + "/lemmas", As(lin))->body);
  ASSERT_EQ(lemmas.size(), 2u);
  Id cls = lemmas[0]["inflection_class"];
  auto created = PostJson(lin, base + "/lemmas",
                          {{"citation_form", "talk"}, {"inflection_class", cls}, {"stems", {"talk"}}}, "l1");
  ASSERT_EQ(created->status, 201) << created->body;
  Id id = json::parse(created->body)["id"];
  auto updated = client->Put(base + "/lemmas/" + std::to_string(id), As(lin, "u1"), R"({"gloss":"speak"})",
                             "application/json");
  EXPECT_EQ(json::parse(updated->body)["gloss"], "speak");
  auto invalid = PostJson(lin, base + "/lemmas", {{"citation_form", ""}, {"inflection_class", cls}}, "l2");
  EXPECT_EQ(invalid->status, 422);
  EXPECT_EQ(Code(invalid), "ValidationError");
  auto in_use = client->Delete(base + "/lemmas/" + std::to_string(lemmas[0]["id"].get<Id>()), As(lin, "d1"));
  EXPECT_EQ(in_use->status, 409);
  auto gone = client->Delete(base + "/lemmas/" + std::to_string(id), As(lin, "d2"));
  EXPECT_EQ(gone->status, 200);
  EXPECT_EQ(client->Get(base + "/lemmas/" + std::to_string(id), As(lin))->status, 404);

  auto tsv = client->Get(base + "/exports/materials/lexicon", As(lin));
  EXPECT_EQ(tsv->status, 200);
  EXPECT_EQ(tsv->body.rfind("lemma\tgloss\tinflection_class\tpriority\tstem1\n", 0), 0u);
  EXPECT_NE(tsv->get_header_value("Content-Disposition").find("English.lexicon.tsv"), std::string::npos);
  auto blanks = json::parse(client->Get(base + "/exports/blank-tables", As(lin))->body);
  EXPECT_TRUE(blanks["files"].contains("English.basic.blank.tsv"));

  auto clone = PostJson(lin, base + "/clone", {{"name", "English2"}}, "c1");
  ASSERT_EQ(clone->status, 201);
  EXPECT_EQ(json::parse(clone->body)["parent_variety"], v);
}

TEST_F(ApiTest, ElicitationLoop) {
  std::string lin = Login("t-lin"), ann = Login("t-ann"), ben = Login("t-ben"), cat = Login("t-cat");
  Id v = SetUpVariety(lin);
  std::string base = "/api/varieties/" + std::to_string(v);

  auto tasks = json::parse(client->Get(base + "/tasks/next?limit=10", As(ann))->body);
  ASSERT_EQ(tasks.size(), 4u);
  EXPECT_EQ(tasks[0]["citation_form"], "walk");
  json t0;
  for (const auto& t : tasks) {
    if (t["citation_form"] == "walk" && t["features"] == "V;PST") t0 = t;
  }
  ASSERT_FALSE(t0.is_null());
  const std::set<std::string> labels = {"RULE", "NEURAL", "LLM"};
  for (const auto& t : tasks) {
    for (const auto& o : t["presentation"]["options"]) {
      for (const auto& s : o["sources"]) EXPECT_TRUE(labels.count(s.get<std::string>()));
    }
  }
  EXPECT_EQ(client->Get(base + "/tasks/next", As(lin))->status, 403);

  auto submitted = PostJson(ann, "/api/forms", {{"entry", t0["entry"]}, {"form", "walkt"}, {"version", t0["version"]}});
  ASSERT_EQ(submitted->status, 200) << submitted->body;
  json e = json::parse(submitted->body);
  EXPECT_EQ(e["status"], "Submitted");
  EXPECT_EQ(e["source"], "HUMAN");

  auto stale = PostJson(ben, "/api/forms", {{"entry", t0["entry"]}, {"form", "x"}, {"version", t0["version"]}});
  EXPECT_EQ(stale->status, 409);
  EXPECT_EQ(Code(stale), "StaleVersion");

  auto self = PostJson(ann, "/api/verifications", {{"entry", e["id"]}, {"agree", true}, {"version", e["version"]}});
  EXPECT_EQ(Code(self), "SelfVerification");

  auto reviews = json::parse(client->Get(base + "/reviews/next", As(ben))->body);
  ASSERT_EQ(reviews.size(), 1u);
  auto flagged = PostJson(ben, "/api/verifications",
                          {{"entry", e["id"]}, {"agree", false}, {"alternative", "walked"}, {"version", e["version"]}});
  e = json::parse(flagged->body);
  EXPECT_EQ(e["status"], "Flagged");

  auto voted = PostJson(cat, "/api/verifications",
                        {{"entry", e["id"]}, {"agree", false}, {"alternative", "walked"}, {"version", e["version"]}});
  e = json::parse(voted->body);
  EXPECT_EQ(e["status"], "Flagged");

  auto resolved = PostJson(cat, "/api/entries/" + std::to_string(e["id"].get<Id>()) + "/resolve",
                           {{"version", e["version"]}});
  ASSERT_EQ(resolved->status, 200) << resolved->body;
  json r = json::parse(resolved->body);
  EXPECT_EQ(r["outcome"], "Resolved");
  EXPECT_EQ(r["form"], "walked");
  EXPECT_EQ(r["tally"]["total"], 3);
  EXPECT_EQ(r["entry"]["status"], "Verified");

  auto unimorph = client->Get(base + "/exports/unimorph", As(lin));
  EXPECT_EQ(unimorph->body, "walk\twalked\tV;PST\n");

  auto cells = json::parse(client->Get(base + "/cells?status=Verified", As(lin))->body);
  EXPECT_EQ(cells["total"], 1);
  auto too_big = client->Get(base + "/cells?limit=5000", As(lin));
  EXPECT_EQ(too_big->status, 400);
  EXPECT_EQ(Code(too_big), "PageTooLarge");

  auto paradigm = json::parse(client->Get(base + "/paradigm/" + std::to_string(t0["lemma"].get<Id>()), As(lin))->body);
  EXPECT_EQ(paradigm["cells"].size(), 2u);
  auto phase = json::parse(client->Get(base + "/phase", As(lin))->body);
  EXPECT_EQ(phase["phase"], "ColdStart");
}

TEST_F(ApiTest, EscalationAndOverride) {
  std::string lin = Login("t-lin"), ann = Login("t-ann"), ben = Login("t-ben"), dov = Login("t-dov");
  Id v = SetUpVariety(lin);
  std::string base = "/api/varieties/" + std::to_string(v);
  json t = json::parse(client->Get(base + "/tasks/next?limit=1", As(ann))->body)[0];
  json e = json::parse(PostJson(ann, "/api/forms", {{"entry", t["entry"]}, {"form", "a"}, {"version", t["version"]}})->body);
  e = json::parse(PostJson(ben, "/api/verifications",
                           {{"entry", e["id"]}, {"agree", false}, {"alternative", "b"}, {"version", e["version"]}})
                      ->body);
  std::string resolve = "/api/entries/" + std::to_string(e["id"].get<Id>()) + "/resolve";
  EXPECT_EQ(PostJson(dov, resolve, {{"version", e["version"]}})->status, 403);
  json r = json::parse(PostJson(lin, resolve, {{"version", e["version"]}})->body);
  EXPECT_EQ(r["outcome"], "Escalated");
  auto esc = json::parse(client->Get(base + "/escalations", As(lin))->body);
  ASSERT_EQ(esc.size(), 1u);
  EXPECT_EQ(PostJson(ann, "/api/resolutions", {{"entry", e["id"]}, {"form", "c"}, {"version", esc[0]["version"]}})->status,
            403);
  auto decided = PostJson(lin, "/api/resolutions", {{"entry", e["id"]}, {"form", "c"}, {"version", esc[0]["version"]}});
  ASSERT_EQ(decided->status, 200) << decided->body;
  EXPECT_EQ(json::parse(decided->body)["form"], "c");
  EXPECT_EQ(json::parse(decided->body)["status"], "Verified");
}

TEST_F(ApiTest, NonExpertSeesOneTask) {
  std::string lin = Login("t-lin"), dov = Login("t-dov");
  SetUpVariety(lin);
  auto tasks = json::parse(client->Get("/api/varieties/1/tasks/next?limit=10", As(dov))->body);
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0]["mode"], "NonExpertSingle");
}

TEST_F(ApiTest, QuestionDrafts) {
  std::string lin = Login("t-lin");
  Id v = SetUpVariety(lin);
  std::string base = "/api/varieties/" + std::to_string(v);
  auto gen = PostJson(lin, base + "/questions/generate", {{"features", "V;PST"}}, "q1");
  ASSERT_EQ(gen->status, 201) << gen->body;
  json q = json::parse(gen->body);
  EXPECT_EQ(q["draft"], true);
  EXPECT_EQ(q["text"], "How would you say [LEMMA] if it happened yesterday?");
  auto ok = PostJson(lin, base + "/questions/" + std::to_string(q["id"].get<Id>()) + "/approve", json::object(), "a1");
  EXPECT_EQ(json::parse(ok->body)["draft"], false);
}

TEST_F(ApiTest, StructuredRequestLog) {
  std::string lin = Login("t-lin");
  client->Get("/api/me", As(lin));
  std::lock_guard lock(log_mu);
  ASSERT_GE(log.size(), 2u);
  json line = json::parse(log.back());
  EXPECT_EQ(line["method"], "GET");
  EXPECT_EQ(line["path"], "/api/me");
  EXPECT_EQ(line["status"], 200);
  EXPECT_EQ(line["user"], "lin");
  EXPECT_TRUE(line.contains("duration_ms"));
  for (const auto& l : log) EXPECT_EQ(l.find("t-lin"), std::string::npos);
}

TEST_F(ApiTest, PortInUse) {
  ApiServer other(repo, *workflow, *auth);
  try {
    other.Bind("127.0.0.1", port);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortUnavailable);
  }
}

TEST(Service, StartsFromConfig) {
  ServiceConfig c;
  c.port = 0;
  c.database = ":memory:";
  c.users = {{"lin", "t", Role::kLinguist, Expertise::kExpert, false}};
  Service service(c);
  int port = service.Start();
  httplib::Client client("127.0.0.1", port);
  auto r = client.Post("/api/auth/session", R"({"token":"t"})", "application/json");
  EXPECT_EQ(r->status, 201);
  service.Stop();
}

}  // namespace
}  // namespace morph
