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

#ifndef MORPH_STORAGE_H_
#define MORPH_STORAGE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"

struct sqlite3;

namespace morph {

inline constexpr int kMaxPageSize = 1000;

// Conjunctive filter for QueryCells. `tag` matches entries whose feature set
// contains that tag.
struct CellFilter {
  std::optional<EntryStatus> status;
  std::optional<FeatureSet> features;
  std::optional<Id> lemma;
  std::optional<std::string> tag;
};

struct PageRequest {
  std::int64_t offset = 0;
  int limit = 100;
};

struct TrainingState {
  std::int64_t verified_at_last_train = 0;
  std::int64_t trained_at_ms = 0;
  int runs = 0;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

// Persistence contract. Writes validate the entity first (kValidation);
// dangling references and deletes of referenced rows raise
// kReferentialIntegrity; unknown ids raise kNotFound. Implementations are
// safe for concurrent callers.
class Repository {
 public:
  virtual ~Repository() = default;

  // Runs `fn` atomically. Nested calls join the outer transaction.
  virtual void Transaction(const std::function<void()>& fn) = 0;

  virtual Id Create(const Variety& v) = 0;
  virtual void Update(const Variety& v) = 0;
  virtual std::optional<Variety> GetVariety(Id id) = 0;
  virtual std::optional<Variety> FindVariety(std::string_view name) = 0;
  virtual std::vector<Variety> ListVarieties() = 0;
  virtual void DeleteVariety(Id id) = 0;

  virtual Id Create(const InflectionClass& c) = 0;
  virtual void Update(const InflectionClass& c) = 0;
  virtual std::optional<InflectionClass> GetClass(Id id) = 0;
  virtual std::vector<InflectionClass> ListClasses(Id variety) = 0;
  virtual void DeleteClass(Id id) = 0;

  virtual Id Create(const ParadigmStructure& s) = 0;
  virtual void Update(const ParadigmStructure& s) = 0;
  virtual std::optional<ParadigmStructure> GetStructure(Id id) = 0;
  virtual std::vector<ParadigmStructure> ListStructures(Id variety) = 0;
  virtual void DeleteStructure(Id id) = 0;

  virtual Id Create(const ReusableLayer& l) = 0;
  virtual void Update(const ReusableLayer& l) = 0;
  virtual std::optional<ReusableLayer> GetLayer(Id id) = 0;
  virtual std::vector<ReusableLayer> ListLayers(Id variety) = 0;
  virtual void DeleteLayer(Id id) = 0;

  virtual Id Create(const MorphophonRule& r) = 0;
  virtual void Update(const MorphophonRule& r) = 0;
  virtual std::optional<MorphophonRule> GetRule(Id id) = 0;
  virtual std::vector<MorphophonRule> ListRules(Id variety) = 0;
  virtual void DeleteRule(Id id) = 0;

  virtual Id Create(const Lemma& l) = 0;
  virtual void Update(const Lemma& l) = 0;
  virtual std::optional<Lemma> GetLemma(Id id) = 0;
  virtual std::optional<Lemma> FindLemma(Id variety, std::string_view citation_form) = 0;
  virtual std::vector<Lemma> ListLemmas(Id variety) = 0;
  virtual void DeleteLemma(Id id) = 0;

  virtual Id Create(const QuestionTemplate& q) = 0;
  virtual void Update(const QuestionTemplate& q) = 0;
  virtual std::optional<QuestionTemplate> GetQuestion(Id id) = 0;
  virtual std::vector<QuestionTemplate> ListQuestions(Id variety) = 0;
  virtual void DeleteQuestion(Id id) = 0;

  virtual Id Create(const User& u) = 0;
  virtual std::optional<User> GetUser(Id id) = 0;
  virtual std::optional<User> FindUser(std::string_view name) = 0;
  virtual std::vector<User> ListUsers() = 0;

  // New entries start at version 1 with empty history.
  virtual Id Create(const WordformEntry& e) = 0;
  virtual std::optional<WordformEntry> GetEntry(Id id) = 0;
  // Writes `entry` iff the stored version equals `expected_version`; the
  // entry must carry version expected+1 and exactly one new history record.
  // Throws kStaleVersion or kNotFound.
  virtual WordformEntry SaveEntryCas(const WordformEntry& entry, std::int64_t expected_version) = 0;
  // Entries of the variety ordered by id. Throws kPageTooLarge above
  // kMaxPageSize.
  virtual std::vector<WordformEntry> QueryCells(Id variety, const CellFilter& filter,
                                                PageRequest page) = 0;
  virtual std::int64_t CountCells(Id variety, const CellFilter& filter) = 0;
  virtual Id VarietyOfEntry(Id entry) = 0;

  virtual TrainingState GetTrainingState(Id variety) = 0;
  virtual void SetTrainingState(Id variety, const TrainingState& state) = 0;
};

// SQLite-backed repository. ":memory:" gives a private in-memory database.
// Applies forward-only migrations on open.
class SqliteRepository : public Repository {
 public:
  explicit SqliteRepository(const std::string& path);
  ~SqliteRepository() override;
  SqliteRepository(const SqliteRepository&) = delete;
  SqliteRepository& operator=(const SqliteRepository&) = delete;

  int schema_version();
  static int LatestSchemaVersion();

  void Transaction(const std::function<void()>& fn) override;

  Id Create(const Variety& v) override;
  void Update(const Variety& v) override;
  std::optional<Variety> GetVariety(Id id) override;
  std::optional<Variety> FindVariety(std::string_view name) override;
  std::vector<Variety> ListVarieties() override;
  void DeleteVariety(Id id) override;

  Id Create(const InflectionClass& c) override;
  void Update(const InflectionClass& c) override;
  std::optional<InflectionClass> GetClass(Id id) override;
  std::vector<InflectionClass> ListClasses(Id variety) override;
  void DeleteClass(Id id) override;

  Id Create(const ParadigmStructure& s) override;
  void Update(const ParadigmStructure& s) override;
  std::optional<ParadigmStructure> GetStructure(Id id) override;
  std::vector<ParadigmStructure> ListStructures(Id variety) override;
  void DeleteStructure(Id id) override;

  Id Create(const ReusableLayer& l) override;
  void Update(const ReusableLayer& l) override;
  std::optional<ReusableLayer> GetLayer(Id id) override;
  std::vector<ReusableLayer> ListLayers(Id variety) override;
  void DeleteLayer(Id id) override;

  Id Create(const MorphophonRule& r) override;
  void Update(const MorphophonRule& r) override;
  std::optional<MorphophonRule> GetRule(Id id) override;
  std::vector<MorphophonRule> ListRules(Id variety) override;
  void DeleteRule(Id id) override;

  Id Create(const Lemma& l) override;
  void Update(const Lemma& l) override;
  std::optional<Lemma> GetLemma(Id id) override;
  std::optional<Lemma> FindLemma(Id variety, std::string_view citation_form) override;
  std::vector<Lemma> ListLemmas(Id variety) override;
  void DeleteLemma(Id id) override;

  Id Create(const QuestionTemplate& q) override;
  void Update(const QuestionTemplate& q) override;
  std::optional<QuestionTemplate> GetQuestion(Id id) override;
  std::vector<QuestionTemplate> ListQuestions(Id variety) override;
  void DeleteQuestion(Id id) override;

  Id Create(const User& u) override;
  std::optional<User> GetUser(Id id) override;
  std::optional<User> FindUser(std::string_view name) override;
  std::vector<User> ListUsers() override;

  Id Create(const WordformEntry& e) override;
  std::optional<WordformEntry> GetEntry(Id id) override;
  WordformEntry SaveEntryCas(const WordformEntry& entry, std::int64_t expected_version) override;
  std::vector<WordformEntry> QueryCells(Id variety, const CellFilter& filter,
                                        PageRequest page) override;
  std::int64_t CountCells(Id variety, const CellFilter& filter) override;
  Id VarietyOfEntry(Id entry) override;

  TrainingState GetTrainingState(Id variety) override;
  void SetTrainingState(Id variety, const TrainingState& state) override;

 private:
  class Stmt;
  Stmt Prepare(std::string_view sql);
  void Exec(std::string_view sql);
  void Migrate();
  void WriteSlots(const ParadigmStructure& s);
  void WriteMorphemes(const ReusableLayer& l);
  void WriteStems(const Lemma& l);
  void WriteAliases(const Variety& v);
  void CheckSameVariety(Id variety, Id cls, const char* field);
  void CheckRuleOrderFree(const MorphophonRule& r);
  ParadigmStructure ReadStructure(Stmt& row);
  ReusableLayer ReadLayer(Stmt& row);
  Lemma ReadLemma(Stmt& row);
  Variety ReadVariety(Stmt& row);
  WordformEntry ReadEntry(Stmt& row);
  std::string FilterSql(const CellFilter& filter);
  void BindFilter(Stmt& stmt, int& index, Id variety, const CellFilter& filter);

  sqlite3* db_ = nullptr;
  std::recursive_mutex mu_;
  int tx_depth_ = 0;
};

// Everything a linguist authored for the variety.
Materials LoadMaterials(Repository& repo, Id variety);

// Deep copy of classes, structures, layers, rules, lexicon and question
// templates into a new variety whose parent is `source`. No entries are
// copied. Throws kUnknownVariety.
Id CloneVariety(Repository& repo, Id source, const std::string& new_name);

}  // namespace morph

#endif  // MORPH_STORAGE_H_
