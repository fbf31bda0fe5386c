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
#include <filesystem>
#include <thread>

#include "expect_error.h"
#include "morph/storage.h"

namespace morph {
namespace {

class StorageTest : public ::testing::Test {
 protected:
  void SetUp() override {
    variety = repo.Create(Variety{0, "Kurmanji", "English", std::nullopt, {{"PST", "past"}}});
    cls = repo.Create(InflectionClass{0, variety, "verb", "V"});
    Lemma l;
    l.variety = variety;
    l.citation_form = "kuştin";
    l.gloss = "kill";
    l.inflection_class = cls;
    l.stems = {"kuşt", "kuj"};
    l.priority = 2;
    lemma = repo.Create(l);
    // History actors and voters reference users 1..10.
    for (int i = 1; i <= 10; ++i) {
      repo.Create(User{0, "u" + std::to_string(i), Role::kSpeaker, Expertise::kExpert, false});
    }
  }

  Id NewEntry(const char* features, Id on_lemma = 0) {
    WordformEntry e;
    e.lemma = on_lemma ? on_lemma : lemma;
    e.features = FeatureSet::Parse(features);
    return repo.Create(e);
  }

  SqliteRepository repo{":memory:"};
  Id variety = 0;
  Id cls = 0;
  Id lemma = 0;
};

TEST_F(StorageTest, VarietyRoundTrip) {
  auto v = repo.GetVariety(variety);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->name, "Kurmanji");
  EXPECT_EQ(v->tag_aliases.at("PST"), "past");
  EXPECT_EQ(repo.FindVariety("Kurmanji")->id, variety);
  EXPECT_FALSE(repo.FindVariety("nope"));
  v->meta_language = "Turkish";
  repo.Update(*v);
  EXPECT_EQ(repo.GetVariety(variety)->meta_language, "Turkish");
  EXPECT_EQ(repo.ListVarieties().size(), 1u);
  EXPECT_MORPH_ERROR(repo.Update(Variety{999, "x", "English", std::nullopt, {}}), ErrorCode::kUnknownVariety);
}

TEST_F(StorageTest, LemmaRoundTrip) {
  auto l = repo.GetLemma(lemma);
  ASSERT_TRUE(l);
  EXPECT_EQ(l->stems, (std::vector<std::string>{"kuşt", "kuj"}));
  EXPECT_EQ(l->priority, 2);
  EXPECT_EQ(repo.FindLemma(variety, "kuştin")->id, lemma);
  l->stems = {"giy"};
  repo.Update(*l);
  EXPECT_EQ(repo.GetLemma(lemma)->stems, std::vector<std::string>{"giy"});
  Lemma dup = *l;
  dup.id = 0;
  EXPECT_MORPH_ERROR(repo.Create(dup), ErrorCode::kValidation);
}

TEST_F(StorageTest, StructureAndLayerRoundTrip) {
  ReusableLayer layer{0, variety, "agr", {{"im", TagBundle::Parse("1;SG")}, {"î", TagBundle::Parse("2;SG")}}};
  Id lid = repo.Create(layer);
  layer.id = lid;
  EXPECT_EQ(*repo.GetLayer(lid), layer);

  ParadigmStructure s;
  s.inflection_class = cls;
  s.name = "present";
  s.slots.push_back(Slot{FeatureSet::Parse("V;PRS"), "de{stem2}{layer}", lid, 3});
  s.slots.push_back(Slot{FeatureSet::Parse("V;NFIN"), std::nullopt, std::nullopt, 0});
  Id sid = repo.Create(s);
  s.id = sid;
  EXPECT_EQ(*repo.GetStructure(sid), s);
  EXPECT_EQ(repo.ListStructures(variety).size(), 1u);
  EXPECT_MORPH_ERROR(repo.DeleteLayer(lid), ErrorCode::kReferentialIntegrity);
}

TEST_F(StorageTest, RuleOrderUniquePerScope) {
  repo.Create(MorphophonRule{0, variety, "ii", "i", 1, std::nullopt});
  repo.Create(MorphophonRule{0, variety, "aa", "a", 1, cls});
  EXPECT_MORPH_ERROR(repo.Create(MorphophonRule{0, variety, "uu", "u", 1, std::nullopt}),
                     ErrorCode::kValidation);
  EXPECT_EQ(repo.ListRules(variety).size(), 2u);
}

TEST_F(StorageTest, ForeignClassRejected) {
  Id other = repo.Create(Variety{0, "Sorani", "English", std::nullopt, {}});
  Id foreign = repo.Create(InflectionClass{0, other, "verb", "V"});
  Lemma l;
  l.variety = variety;
  l.citation_form = "hatin";
  l.inflection_class = foreign;
  EXPECT_MORPH_ERROR(repo.Create(l), ErrorCode::kReferentialIntegrity);
  l.inflection_class = 4242;
  EXPECT_MORPH_ERROR(repo.Create(l), ErrorCode::kReferentialIntegrity);
}

TEST_F(StorageTest, QuestionRoundTrip) {
  QuestionTemplate q{0, variety, FeatureSet::Parse("V;PST"), "How would you say [LEMMA] yesterday?", true};
  Id qid = repo.Create(q);
  q.id = qid;
  EXPECT_EQ(*repo.GetQuestion(qid), q);
  q.text = "no placeholder";
  EXPECT_MORPH_ERROR(repo.Update(q), ErrorCode::kValidation);
}

TEST_F(StorageTest, UsersByName) {
  Id u = repo.Create(User{0, "alice", Role::kSpeaker, Expertise::kExpert, true});
  EXPECT_EQ(repo.FindUser("alice")->id, u);
  EXPECT_TRUE(repo.GetUser(u)->designated_expert);
  EXPECT_MORPH_ERROR(repo.Create(User{0, "bob", Role::kSpeaker, Expertise::kNonExpert, true}),
                     ErrorCode::kValidation);
}

TEST_F(StorageTest, NewEntryStartsAtVersionOne) {
  Id id = NewEntry("V;PST;1;SG");
  auto e = repo.GetEntry(id);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->version, 1);
  EXPECT_TRUE(e->history.empty());
  EXPECT_EQ(e->status, EntryStatus::kEmpty);
  EXPECT_EQ(repo.VarietyOfEntry(id), variety);
}

TEST_F(StorageTest, CasSequence) {
  Id id = NewEntry("V;PST;1;SG");
  WordformEntry e = *repo.GetEntry(id);
  WordformEntry next = e;
  next.RecordChange(7, 100);
  next.form = "min kuşt";
  next.status = EntryStatus::kSuggested;
  next.source = Source::kRule;
  WordformEntry saved = repo.SaveEntryCas(next, 1);
  EXPECT_EQ(saved.version, 2);
  ASSERT_EQ(saved.history.size(), 1u);
  EXPECT_EQ(saved.history[0].status, EntryStatus::kEmpty);
  EXPECT_EQ(saved.history[0].actor, 7);
  EXPECT_EQ(saved.history[0].timestamp_ms, 100);

  // A writer still holding version 1 loses.
  WordformEntry stale = e;
  stale.RecordChange(8, 101);
  stale.form = "other";
  EXPECT_MORPH_ERROR(repo.SaveEntryCas(stale, 1), ErrorCode::kStaleVersion);
  EXPECT_EQ(repo.GetEntry(id)->form, "min kuşt");

  WordformEntry skip = saved;
  skip.RecordChange(7, 102);
  EXPECT_MORPH_ERROR(repo.SaveEntryCas(skip, 1), ErrorCode::kValidation);

  WordformEntry missing = skip;
  missing.id = 999;
  EXPECT_MORPH_ERROR(repo.SaveEntryCas(missing, 2), ErrorCode::kNotFound);
}

TEST_F(StorageTest, HistoryIsAppendOnly) {
  Id id = NewEntry("V;PST;1;SG");
  WordformEntry e = *repo.GetEntry(id);
  for (int i = 0; i < 3; ++i) {
    e.RecordChange(1, i);
    e.form = "f" + std::to_string(i);
    e = repo.SaveEntryCas(e, e.version - 1);
  }
  auto before = e.history;
  ASSERT_EQ(before.size(), 3u);
  // Rewriting an older record in memory does not reach storage.
  e.history[0].form = "tampered";
  e.RecordChange(1, 10);
  e = repo.SaveEntryCas(e, e.version - 1);
  ASSERT_EQ(e.history.size(), 4u);
  for (size_t i = 0; i < before.size(); ++i) EXPECT_EQ(e.history[i], before[i]);
  EXPECT_EQ(e.history[0].form, std::nullopt);
}

TEST_F(StorageTest, ConcurrentCasHasOneWinner) {
  Id id = NewEntry("V;PST;1;SG");
  WordformEntry base = *repo.GetEntry(id);
  constexpr int kThreads = 8;
  std::atomic<int> wins{0}, stale{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      WordformEntry mine = base;
      mine.RecordChange(t + 1, t);
      mine.form = "w" + std::to_string(t);
      try {
        repo.SaveEntryCas(mine, 1);
        ++wins;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kStaleVersion) ++stale;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(wins, 1);
  EXPECT_EQ(stale, kThreads - 1);
  EXPECT_EQ(repo.GetEntry(id)->version, 2);
}

TEST_F(StorageTest, VotesRoundTrip) {
  Id id = NewEntry("V;PST;1;SG");
  WordformEntry e = *repo.GetEntry(id);
  e.RecordChange(1, 1);
  e.form = "a";
  e.status = EntryStatus::kFlagged;
  e.votes = {{1, "a"}, {2, "b"}};
  e = repo.SaveEntryCas(e, 1);
  EXPECT_EQ(e.votes, (std::vector<Vote>{{1, "a"}, {2, "b"}}));
  EXPECT_EQ(e.DistinctVotedForms(), (std::vector<std::string>{"a", "b"}));
}

TEST_F(StorageTest, QueryCellsFilters) {
  Lemma other;
  other.variety = variety;
  other.citation_form = "girtin";
  other.inflection_class = cls;
  Id lemma2 = repo.Create(other);
  Id a = NewEntry("V;PST;1;SG");
  Id b = NewEntry("V;PRS;1;SG");
  Id c = NewEntry("V;PST;1;SG", lemma2);
  WordformEntry eb = *repo.GetEntry(b);
  eb.RecordChange(1, 1);
  eb.status = EntryStatus::kVerified;
  eb.form = "dekujim";
  repo.SaveEntryCas(eb, 1);

  auto ids = [](const std::vector<WordformEntry>& es) {
    std::vector<Id> out;
    for (const auto& e : es) out.push_back(e.id);
    return out;
  };
  EXPECT_EQ(ids(repo.QueryCells(variety, {}, {})), (std::vector<Id>{a, b, c}));
  CellFilter f;
  f.status = EntryStatus::kEmpty;
  EXPECT_EQ(ids(repo.QueryCells(variety, f, {})), (std::vector<Id>{a, c}));
  f.lemma = lemma2;
  EXPECT_EQ(ids(repo.QueryCells(variety, f, {})), (std::vector<Id>{c}));
  CellFilter by_tag;
  by_tag.tag = "PRS";
  EXPECT_EQ(ids(repo.QueryCells(variety, by_tag, {})), (std::vector<Id>{b}));
  CellFilter by_features;
  by_features.features = FeatureSet::Parse("V;PST;1;SG");
  EXPECT_EQ(repo.CountCells(variety, by_features), 2);
  EXPECT_EQ(ids(repo.QueryCells(variety, {}, PageRequest{1, 1})), (std::vector<Id>{b}));
  EXPECT_TRUE(repo.QueryCells(variety + 99, {}, {}).empty());
}

TEST_F(StorageTest, PageLimit) {
  EXPECT_NO_THROW(repo.QueryCells(variety, {}, PageRequest{0, kMaxPageSize}));
  EXPECT_MORPH_ERROR(repo.QueryCells(variety, {}, PageRequest{0, kMaxPageSize + 1}), ErrorCode::kPageTooLarge);
}

TEST_F(StorageTest, DeleteLemmaWithEntriesRejected) {
  NewEntry("V;PST;1;SG");
  EXPECT_MORPH_ERROR(repo.DeleteLemma(lemma), ErrorCode::kReferentialIntegrity);
  EXPECT_TRUE(repo.GetLemma(lemma));
  EXPECT_MORPH_ERROR(repo.DeleteClass(cls), ErrorCode::kReferentialIntegrity);
  EXPECT_MORPH_ERROR(repo.DeleteLemma(999), ErrorCode::kNotFound);
}

TEST_F(StorageTest, TransactionRollsBack) {
  EXPECT_ANY_THROW(repo.Transaction([&] {
    repo.Create(InflectionClass{0, variety, "noun", "N"});
    throw Error(ErrorCode::kValidation, "abort");
  }));
  EXPECT_EQ(repo.ListClasses(variety).size(), 1u);
}

TEST_F(StorageTest, TrainingState) {
  EXPECT_EQ(repo.GetTrainingState(variety), TrainingState{});
  repo.SetTrainingState(variety, {100, 5, 1});
  repo.SetTrainingState(variety, {200, 9, 2});
  EXPECT_EQ(repo.GetTrainingState(variety), (TrainingState{200, 9, 2}));
}

TEST(SqliteFile, PersistsAndMigrates) {
  auto path = std::filesystem::temp_directory_path() / "morphdesk_storage_test.db";
  std::filesystem::remove(path);
  {
    SqliteRepository repo(path.string());
    EXPECT_EQ(repo.schema_version(), SqliteRepository::LatestSchemaVersion());
    repo.Create(Variety{0, "Zazaki", "English", std::nullopt, {}});
  }
  {
    SqliteRepository repo(path.string());
    EXPECT_TRUE(repo.FindVariety("Zazaki"));
  }
  std::filesystem::remove(path);
  EXPECT_MORPH_ERROR(SqliteRepository("/nonexistent-dir/x/y.db"), ErrorCode::kStorage);
}

}  // namespace
}  // namespace morph
