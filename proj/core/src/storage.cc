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

#include "morph/storage.h"

#include <sqlite3.h>

#include <array>
#include <map>
#include <set>

#include "morph/error.h"
#include "morph/pattern.h"

namespace morph {

namespace {

// Forward-only; index i upgrades user_version i to i+1.
constexpr std::array<std::string_view, 2> kMigrations = {
    R"sql(
CREATE TABLE varieties(
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  meta_language TEXT NOT NULL,
  parent_variety INTEGER REFERENCES varieties(id));
CREATE TABLE tag_aliases(
  variety INTEGER NOT NULL REFERENCES varieties(id) ON DELETE CASCADE,
  tag TEXT NOT NULL,
  label TEXT NOT NULL,
  PRIMARY KEY(variety, tag));
CREATE TABLE inflection_classes(
  id INTEGER PRIMARY KEY,
  variety INTEGER NOT NULL REFERENCES varieties(id),
  name TEXT NOT NULL,
  pos TEXT NOT NULL,
  UNIQUE(variety, name));
CREATE TABLE layers(
  id INTEGER PRIMARY KEY,
  variety INTEGER NOT NULL REFERENCES varieties(id),
  name TEXT NOT NULL,
  UNIQUE(variety, name));
CREATE TABLE morphemes(
  layer INTEGER NOT NULL REFERENCES layers(id) ON DELETE CASCADE,
  position INTEGER NOT NULL,
  fragment TEXT NOT NULL,
  features TEXT NOT NULL,
  PRIMARY KEY(layer, position));
CREATE TABLE structures(
  id INTEGER PRIMARY KEY,
  inflection_class INTEGER NOT NULL REFERENCES inflection_classes(id),
  name TEXT NOT NULL,
  UNIQUE(inflection_class, name));
CREATE TABLE slots(
  structure INTEGER NOT NULL REFERENCES structures(id) ON DELETE CASCADE,
  position INTEGER NOT NULL,
  features TEXT NOT NULL,
  pattern TEXT,
  layer INTEGER REFERENCES layers(id),
  priority INTEGER NOT NULL,
  PRIMARY KEY(structure, position));
CREATE TABLE rules(
  id INTEGER PRIMARY KEY,
  variety INTEGER NOT NULL REFERENCES varieties(id),
  pattern TEXT NOT NULL,
  replacement TEXT NOT NULL,
  ord INTEGER NOT NULL,
  scope INTEGER REFERENCES inflection_classes(id));
CREATE UNIQUE INDEX rules_order ON rules(variety, ifnull(scope, 0), ord);
CREATE TABLE lemmas(
  id INTEGER PRIMARY KEY,
  variety INTEGER NOT NULL REFERENCES varieties(id),
  citation_form TEXT NOT NULL,
  gloss TEXT NOT NULL,
  inflection_class INTEGER NOT NULL REFERENCES inflection_classes(id),
  priority INTEGER NOT NULL,
  UNIQUE(variety, citation_form));
CREATE TABLE stems(
  lemma INTEGER NOT NULL REFERENCES lemmas(id) ON DELETE CASCADE,
  idx INTEGER NOT NULL,
  text TEXT NOT NULL,
  PRIMARY KEY(lemma, idx));
CREATE TABLE questions(
  id INTEGER PRIMARY KEY,
  variety INTEGER NOT NULL REFERENCES varieties(id),
  features TEXT NOT NULL,
  text TEXT NOT NULL,
  draft INTEGER NOT NULL);
CREATE TABLE users(
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  role TEXT NOT NULL,
  expertise TEXT NOT NULL,
  designated_expert INTEGER NOT NULL);
CREATE TABLE entries(
  id INTEGER PRIMARY KEY,
  lemma INTEGER NOT NULL REFERENCES lemmas(id),
  features TEXT NOT NULL,
  form TEXT,
  status TEXT NOT NULL,
  source TEXT NOT NULL,
  version INTEGER NOT NULL,
  submitter INTEGER REFERENCES users(id),
  slot_priority INTEGER NOT NULL,
  escalated INTEGER NOT NULL,
  verified_at_ms INTEGER NOT NULL,
  UNIQUE(lemma, features));
CREATE TABLE entry_tags(
  entry INTEGER NOT NULL REFERENCES entries(id),
  position INTEGER NOT NULL,
  tag TEXT NOT NULL,
  PRIMARY KEY(entry, position));
CREATE INDEX entry_tags_tag ON entry_tags(tag, entry);
CREATE TABLE votes(
  entry INTEGER NOT NULL REFERENCES entries(id),
  position INTEGER NOT NULL,
  user INTEGER NOT NULL REFERENCES users(id),
  form TEXT NOT NULL,
  PRIMARY KEY(entry, position));
CREATE TABLE history(
  entry INTEGER NOT NULL REFERENCES entries(id),
  seq INTEGER NOT NULL,
  form TEXT,
  status TEXT NOT NULL,
  source TEXT NOT NULL,
  actor INTEGER REFERENCES users(id),
  timestamp_ms INTEGER NOT NULL,
  PRIMARY KEY(entry, seq));
CREATE TRIGGER history_no_update BEFORE UPDATE ON history
  BEGIN SELECT RAISE(ABORT, 'history is append-only'); END;
CREATE TRIGGER history_no_delete BEFORE DELETE ON history
  BEGIN SELECT RAISE(ABORT, 'history is append-only'); END;
)sql",
    R"sql(
CREATE INDEX entries_lemma_status ON entries(lemma, status);
CREATE TABLE training_state(
  variety INTEGER PRIMARY KEY REFERENCES varieties(id),
  verified_at_last_train INTEGER NOT NULL,
  trained_at_ms INTEGER NOT NULL,
  runs INTEGER NOT NULL);
)sql",
};

[[noreturn]] void Fail(sqlite3* db, int rc, std::string_view what) {
  const int ext = sqlite3_extended_errcode(db);
  std::string msg = std::string(what) + ": " + sqlite3_errmsg(db);
  if (ext == SQLITE_CONSTRAINT_FOREIGNKEY) throw Error(ErrorCode::kReferentialIntegrity, msg);
  if (ext == SQLITE_CONSTRAINT_UNIQUE || ext == SQLITE_CONSTRAINT_PRIMARYKEY) {
    throw Error(ErrorCode::kValidation, msg);
  }
  (void)rc;
  throw Error(ErrorCode::kStorage, msg);
}

}  // namespace

class SqliteRepository::Stmt {
 public:
  Stmt(sqlite3* db, std::string_view sql) : db_(db) {
    int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr);
    if (rc != SQLITE_OK) Fail(db, rc, "prepare");
  }
  Stmt(Stmt&& o) noexcept : db_(o.db_), stmt_(o.stmt_) { o.stmt_ = nullptr; }
  ~Stmt() { sqlite3_finalize(stmt_); }

  Stmt& Bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& Bind(int i, int v) { return Bind(i, static_cast<std::int64_t>(v)); }
  Stmt& Bind(int i, bool v) { return Bind(i, static_cast<std::int64_t>(v ? 1 : 0)); }
  Stmt& Bind(int i, std::string_view v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& Bind(int i, const std::string& v) { return Bind(i, std::string_view(v)); }
  Stmt& Bind(int i, const char* v) { return Bind(i, std::string_view(v)); }
  Stmt& Bind(int i, const std::optional<Id>& v) {
    if (v) return Bind(i, *v);
    sqlite3_bind_null(stmt_, i);
    return *this;
  }
  Stmt& Bind(int i, const std::optional<std::string>& v) {
    if (v) return Bind(i, std::string_view(*v));
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  // True while a row is available.
  bool Step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    Fail(db_, rc, "step");
  }
  void Run() {
    while (Step()) {
    }
  }

  std::int64_t Int(int col) { return sqlite3_column_int64(stmt_, col); }
  bool IsNull(int col) { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string Text(int col) {
    const unsigned char* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::optional<std::string> OptText(int col) {
    if (IsNull(col)) return std::nullopt;
    return Text(col);
  }
  std::optional<Id> OptInt(int col) {
    if (IsNull(col)) return std::nullopt;
    return Int(col);
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

SqliteRepository::SqliteRepository(const std::string& path) {
  int rc = sqlite3_open_v2(path.c_str(), &db_,
                           SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                           nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::kStorage, "cannot open database " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  Exec("PRAGMA foreign_keys = ON");
  if (path != ":memory:") Exec("PRAGMA journal_mode = WAL");
  Migrate();
}

SqliteRepository::~SqliteRepository() { sqlite3_close(db_); }

SqliteRepository::Stmt SqliteRepository::Prepare(std::string_view sql) { return Stmt(db_, sql); }

void SqliteRepository::Exec(std::string_view sql) {
  char* err = nullptr;
  std::string s(sql);
  int rc = sqlite3_exec(db_, s.c_str(), nullptr, nullptr, &err);
  if (rc != SQLITE_OK) {
    std::string msg = err ? err : "exec failed";
    sqlite3_free(err);
    if (sqlite3_extended_errcode(db_) == SQLITE_CONSTRAINT_FOREIGNKEY) {
      throw Error(ErrorCode::kReferentialIntegrity, msg);
    }
    throw Error(ErrorCode::kStorage, msg);
  }
}

int SqliteRepository::LatestSchemaVersion() { return static_cast<int>(kMigrations.size()); }

int SqliteRepository::schema_version() {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("PRAGMA user_version");
  s.Step();
  return static_cast<int>(s.Int(0));
}

void SqliteRepository::Migrate() {
  int current = schema_version();
  if (current > LatestSchemaVersion()) {
    throw Error(ErrorCode::kStorage, "database schema is newer than this build");
  }
  for (int v = current; v < LatestSchemaVersion(); ++v) {
    Transaction([&] {
      Exec(kMigrations[v]);
      Exec("PRAGMA user_version = " + std::to_string(v + 1));
    });
  }
}

void SqliteRepository::Transaction(const std::function<void()>& fn) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  if (tx_depth_ > 0) {
    ++tx_depth_;
    try {
      fn();
    } catch (...) {
      --tx_depth_;
      throw;
    }
    --tx_depth_;
    return;
  }
  Exec("BEGIN IMMEDIATE");
  tx_depth_ = 1;
  try {
    fn();
  } catch (...) {
    tx_depth_ = 0;
    Exec("ROLLBACK");
    throw;
  }
  tx_depth_ = 0;
  Exec("COMMIT");
}

// ---- varieties ----

void SqliteRepository::WriteAliases(const Variety& v) {
  Prepare("DELETE FROM tag_aliases WHERE variety = ?").Bind(1, v.id).Run();
  for (const auto& [tag, label] : v.tag_aliases) {
    Prepare("INSERT INTO tag_aliases(variety, tag, label) VALUES (?, ?, ?)")
        .Bind(1, v.id).Bind(2, tag).Bind(3, label).Run();
  }
}

Variety SqliteRepository::ReadVariety(Stmt& row) {
  Variety v;
  v.id = row.Int(0);
  v.name = row.Text(1);
  v.meta_language = row.Text(2);
  v.parent_variety = row.OptInt(3);
  Stmt a = Prepare("SELECT tag, label FROM tag_aliases WHERE variety = ? ORDER BY tag");
  a.Bind(1, v.id);
  while (a.Step()) v.tag_aliases[a.Text(0)] = a.Text(1);
  return v;
}

Id SqliteRepository::Create(const Variety& v) {
  Validate(v);
  Id id = 0;
  Transaction([&] {
    Prepare("INSERT INTO varieties(name, meta_language, parent_variety) VALUES (?, ?, ?)")
        .Bind(1, v.name).Bind(2, v.meta_language).Bind(3, v.parent_variety).Run();
    id = sqlite3_last_insert_rowid(db_);
    Variety copy = v;
    copy.id = id;
    WriteAliases(copy);
  });
  return id;
}

void SqliteRepository::Update(const Variety& v) {
  Validate(v);
  Transaction([&] {
    // A parent chain through v itself would make the clone graph cyclic.
    for (std::optional<Id> p = v.parent_variety; p;) {
      if (*p == v.id) throw Error(ErrorCode::kValidation, "parent chain is cyclic", "parent_variety");
      std::optional<Variety> parent = GetVariety(*p);
      if (!parent) throw Error(ErrorCode::kReferentialIntegrity, "unknown parent variety");
      p = parent->parent_variety;
    }
    Stmt s = Prepare("UPDATE varieties SET name = ?, meta_language = ?, parent_variety = ? WHERE id = ?");
    s.Bind(1, v.name).Bind(2, v.meta_language).Bind(3, v.parent_variety).Bind(4, v.id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(v.id));
    WriteAliases(v);
  });
}

std::optional<Variety> SqliteRepository::GetVariety(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, meta_language, parent_variety FROM varieties WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return ReadVariety(s);
}

std::optional<Variety> SqliteRepository::FindVariety(std::string_view name) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, meta_language, parent_variety FROM varieties WHERE name = ?");
  s.Bind(1, name);
  if (!s.Step()) return std::nullopt;
  return ReadVariety(s);
}

std::vector<Variety> SqliteRepository::ListVarieties() {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, meta_language, parent_variety FROM varieties ORDER BY id");
  std::vector<Variety> out;
  while (s.Step()) out.push_back(ReadVariety(s));
  return out;
}

void SqliteRepository::DeleteVariety(Id id) {
  Transaction([&] {
    Prepare("DELETE FROM training_state WHERE variety = ?").Bind(1, id).Run();
    Prepare("DELETE FROM varieties WHERE id = ?").Bind(1, id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(id));
  });
}

// ---- inflection classes ----

Id SqliteRepository::Create(const InflectionClass& c) {
  Validate(c);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("INSERT INTO inflection_classes(variety, name, pos) VALUES (?, ?, ?)")
      .Bind(1, c.variety).Bind(2, c.name).Bind(3, c.pos).Run();
  return sqlite3_last_insert_rowid(db_);
}

void SqliteRepository::Update(const InflectionClass& c) {
  Validate(c);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("UPDATE inflection_classes SET variety = ?, name = ?, pos = ? WHERE id = ?")
      .Bind(1, c.variety).Bind(2, c.name).Bind(3, c.pos).Bind(4, c.id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no inflection class " + std::to_string(c.id));
}

std::optional<InflectionClass> SqliteRepository::GetClass(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, name, pos FROM inflection_classes WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return InflectionClass{s.Int(0), s.Int(1), s.Text(2), s.Text(3)};
}

std::vector<InflectionClass> SqliteRepository::ListClasses(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, name, pos FROM inflection_classes WHERE variety = ? ORDER BY id");
  s.Bind(1, variety);
  std::vector<InflectionClass> out;
  while (s.Step()) out.push_back({s.Int(0), s.Int(1), s.Text(2), s.Text(3)});
  return out;
}

void SqliteRepository::DeleteClass(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("DELETE FROM inflection_classes WHERE id = ?").Bind(1, id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no inflection class " + std::to_string(id));
}

void SqliteRepository::CheckSameVariety(Id variety, Id cls, const char* field) {
  std::optional<InflectionClass> c = GetClass(cls);
  if (!c) throw Error(ErrorCode::kReferentialIntegrity, "unknown inflection class", field);
  if (c->variety != variety) {
    throw Error(ErrorCode::kReferentialIntegrity, "inflection class belongs to another variety", field);
  }
}

// ---- paradigm structures ----

void SqliteRepository::WriteSlots(const ParadigmStructure& s) {
  std::optional<InflectionClass> cls = GetClass(s.inflection_class);
  if (!cls) throw Error(ErrorCode::kReferentialIntegrity, "unknown inflection class", "inflection_class");
  Prepare("DELETE FROM slots WHERE structure = ?").Bind(1, s.id).Run();
  for (size_t i = 0; i < s.slots.size(); ++i) {
    const Slot& slot = s.slots[i];
    if (slot.layer) {
      std::optional<ReusableLayer> layer = GetLayer(*slot.layer);
      if (!layer || layer->variety != cls->variety) {
        throw Error(ErrorCode::kReferentialIntegrity, "slot refers to a layer outside the variety",
                    "slots[" + std::to_string(i) + "].layer");
      }
    }
    Prepare("INSERT INTO slots(structure, position, features, pattern, layer, priority) "
            "VALUES (?, ?, ?, ?, ?, ?)")
        .Bind(1, s.id).Bind(2, static_cast<std::int64_t>(i)).Bind(3, slot.features.str())
        .Bind(4, slot.pattern).Bind(5, slot.layer).Bind(6, slot.priority).Run();
  }
}

ParadigmStructure SqliteRepository::ReadStructure(Stmt& row) {
  ParadigmStructure s;
  s.id = row.Int(0);
  s.inflection_class = row.Int(1);
  s.name = row.Text(2);
  Stmt q = Prepare("SELECT features, pattern, layer, priority FROM slots WHERE structure = ? ORDER BY position");
  q.Bind(1, s.id);
  while (q.Step()) {
    s.slots.push_back(Slot{FeatureSet::Parse(q.Text(0)), q.OptText(1), q.OptInt(2),
                           static_cast<int>(q.Int(3))});
  }
  return s;
}

Id SqliteRepository::Create(const ParadigmStructure& s) {
  Validate(s);
  Id id = 0;
  Transaction([&] {
    Prepare("INSERT INTO structures(inflection_class, name) VALUES (?, ?)")
        .Bind(1, s.inflection_class).Bind(2, s.name).Run();
    id = sqlite3_last_insert_rowid(db_);
    ParadigmStructure copy = s;
    copy.id = id;
    WriteSlots(copy);
  });
  return id;
}

void SqliteRepository::Update(const ParadigmStructure& s) {
  Validate(s);
  Transaction([&] {
    Prepare("UPDATE structures SET inflection_class = ?, name = ? WHERE id = ?")
        .Bind(1, s.inflection_class).Bind(2, s.name).Bind(3, s.id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no structure " + std::to_string(s.id));
    WriteSlots(s);
  });
}

std::optional<ParadigmStructure> SqliteRepository::GetStructure(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, inflection_class, name FROM structures WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return ReadStructure(s);
}

std::vector<ParadigmStructure> SqliteRepository::ListStructures(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare(
      "SELECT s.id, s.inflection_class, s.name FROM structures s "
      "JOIN inflection_classes c ON c.id = s.inflection_class WHERE c.variety = ? ORDER BY s.id");
  s.Bind(1, variety);
  std::vector<ParadigmStructure> out;
  while (s.Step()) out.push_back(ReadStructure(s));
  return out;
}

void SqliteRepository::DeleteStructure(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("DELETE FROM structures WHERE id = ?").Bind(1, id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no structure " + std::to_string(id));
}

// ---- reusable layers ----

void SqliteRepository::WriteMorphemes(const ReusableLayer& l) {
  Prepare("DELETE FROM morphemes WHERE layer = ?").Bind(1, l.id).Run();
  for (size_t i = 0; i < l.morphemes.size(); ++i) {
    Prepare("INSERT INTO morphemes(layer, position, fragment, features) VALUES (?, ?, ?, ?)")
        .Bind(1, l.id).Bind(2, static_cast<std::int64_t>(i)).Bind(3, l.morphemes[i].fragment)
        .Bind(4, l.morphemes[i].features.str()).Run();
  }
}

ReusableLayer SqliteRepository::ReadLayer(Stmt& row) {
  ReusableLayer l;
  l.id = row.Int(0);
  l.variety = row.Int(1);
  l.name = row.Text(2);
  Stmt q = Prepare("SELECT fragment, features FROM morphemes WHERE layer = ? ORDER BY position");
  q.Bind(1, l.id);
  while (q.Step()) l.morphemes.push_back({q.Text(0), TagBundle::Parse(q.Text(1))});
  return l;
}

Id SqliteRepository::Create(const ReusableLayer& l) {
  Validate(l);
  Id id = 0;
  Transaction([&] {
    Prepare("INSERT INTO layers(variety, name) VALUES (?, ?)").Bind(1, l.variety).Bind(2, l.name).Run();
    id = sqlite3_last_insert_rowid(db_);
    ReusableLayer copy = l;
    copy.id = id;
    WriteMorphemes(copy);
  });
  return id;
}

void SqliteRepository::Update(const ReusableLayer& l) {
  Validate(l);
  Transaction([&] {
    Prepare("UPDATE layers SET variety = ?, name = ? WHERE id = ?")
        .Bind(1, l.variety).Bind(2, l.name).Bind(3, l.id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no layer " + std::to_string(l.id));
    WriteMorphemes(l);
  });
}

std::optional<ReusableLayer> SqliteRepository::GetLayer(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, name FROM layers WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return ReadLayer(s);
}

std::vector<ReusableLayer> SqliteRepository::ListLayers(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, name FROM layers WHERE variety = ? ORDER BY id");
  s.Bind(1, variety);
  std::vector<ReusableLayer> out;
  while (s.Step()) out.push_back(ReadLayer(s));
  return out;
}

void SqliteRepository::DeleteLayer(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("DELETE FROM layers WHERE id = ?").Bind(1, id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no layer " + std::to_string(id));
}

// ---- morphophonological rules ----

void SqliteRepository::CheckRuleOrderFree(const MorphophonRule& r) {
  Stmt s = Prepare("SELECT id FROM rules WHERE variety = ? AND ifnull(scope, 0) = ? AND ord = ? AND id != ?");
  s.Bind(1, r.variety).Bind(2, r.scope.value_or(0)).Bind(3, r.order).Bind(4, r.id);
  if (s.Step()) {
    throw Error(ErrorCode::kValidation, "rule order " + std::to_string(r.order) + " already used in scope",
                "order");
  }
  if (r.scope) CheckSameVariety(r.variety, *r.scope, "scope");
}

Id SqliteRepository::Create(const MorphophonRule& r) {
  CheckRule(r);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  MorphophonRule probe = r;
  probe.id = 0;
  CheckRuleOrderFree(probe);
  Prepare("INSERT INTO rules(variety, pattern, replacement, ord, scope) VALUES (?, ?, ?, ?, ?)")
      .Bind(1, r.variety).Bind(2, r.pattern).Bind(3, r.replacement).Bind(4, r.order).Bind(5, r.scope)
      .Run();
  return sqlite3_last_insert_rowid(db_);
}

void SqliteRepository::Update(const MorphophonRule& r) {
  CheckRule(r);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  CheckRuleOrderFree(r);
  Prepare("UPDATE rules SET variety = ?, pattern = ?, replacement = ?, ord = ?, scope = ? WHERE id = ?")
      .Bind(1, r.variety).Bind(2, r.pattern).Bind(3, r.replacement).Bind(4, r.order).Bind(5, r.scope)
      .Bind(6, r.id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no rule " + std::to_string(r.id));
}

std::optional<MorphophonRule> SqliteRepository::GetRule(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, pattern, replacement, ord, scope FROM rules WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return MorphophonRule{s.Int(0), s.Int(1), s.Text(2), s.Text(3), static_cast<int>(s.Int(4)), s.OptInt(5)};
}

std::vector<MorphophonRule> SqliteRepository::ListRules(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, pattern, replacement, ord, scope FROM rules WHERE variety = ? ORDER BY id");
  s.Bind(1, variety);
  std::vector<MorphophonRule> out;
  while (s.Step()) {
    out.push_back({s.Int(0), s.Int(1), s.Text(2), s.Text(3), static_cast<int>(s.Int(4)), s.OptInt(5)});
  }
  return out;
}

void SqliteRepository::DeleteRule(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("DELETE FROM rules WHERE id = ?").Bind(1, id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no rule " + std::to_string(id));
}

// ---- lemmas ----

void SqliteRepository::WriteStems(const Lemma& l) {
  Prepare("DELETE FROM stems WHERE lemma = ?").Bind(1, l.id).Run();
  for (size_t i = 0; i < l.stems.size(); ++i) {
    Prepare("INSERT INTO stems(lemma, idx, text) VALUES (?, ?, ?)")
        .Bind(1, l.id).Bind(2, static_cast<std::int64_t>(i + 1)).Bind(3, l.stems[i]).Run();
  }
}

Lemma SqliteRepository::ReadLemma(Stmt& row) {
  Lemma l;
  l.id = row.Int(0);
  l.variety = row.Int(1);
  l.citation_form = row.Text(2);
  l.gloss = row.Text(3);
  l.inflection_class = row.Int(4);
  l.priority = static_cast<int>(row.Int(5));
  Stmt q = Prepare("SELECT text FROM stems WHERE lemma = ? ORDER BY idx");
  q.Bind(1, l.id);
  while (q.Step()) l.stems.push_back(q.Text(0));
  return l;
}

Id SqliteRepository::Create(const Lemma& l) {
  Validate(l);
  Id id = 0;
  Transaction([&] {
    CheckSameVariety(l.variety, l.inflection_class, "inflection_class");
    Prepare("INSERT INTO lemmas(variety, citation_form, gloss, inflection_class, priority) "
            "VALUES (?, ?, ?, ?, ?)")
        .Bind(1, l.variety).Bind(2, l.citation_form).Bind(3, l.gloss).Bind(4, l.inflection_class)
        .Bind(5, l.priority).Run();
    id = sqlite3_last_insert_rowid(db_);
    Lemma copy = l;
    copy.id = id;
    WriteStems(copy);
  });
  return id;
}

void SqliteRepository::Update(const Lemma& l) {
  Validate(l);
  Transaction([&] {
    CheckSameVariety(l.variety, l.inflection_class, "inflection_class");
    Prepare("UPDATE lemmas SET variety = ?, citation_form = ?, gloss = ?, inflection_class = ?, "
            "priority = ? WHERE id = ?")
        .Bind(1, l.variety).Bind(2, l.citation_form).Bind(3, l.gloss).Bind(4, l.inflection_class)
        .Bind(5, l.priority).Bind(6, l.id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no lemma " + std::to_string(l.id));
    WriteStems(l);
  });
}

std::optional<Lemma> SqliteRepository::GetLemma(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, citation_form, gloss, inflection_class, priority FROM lemmas WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return ReadLemma(s);
}

std::optional<Lemma> SqliteRepository::FindLemma(Id variety, std::string_view citation_form) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare(
      "SELECT id, variety, citation_form, gloss, inflection_class, priority FROM lemmas "
      "WHERE variety = ? AND citation_form = ?");
  s.Bind(1, variety).Bind(2, citation_form);
  if (!s.Step()) return std::nullopt;
  return ReadLemma(s);
}

std::vector<Lemma> SqliteRepository::ListLemmas(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare(
      "SELECT id, variety, citation_form, gloss, inflection_class, priority FROM lemmas "
      "WHERE variety = ? ORDER BY id");
  s.Bind(1, variety);
  std::vector<Lemma> out;
  while (s.Step()) out.push_back(ReadLemma(s));
  return out;
}

void SqliteRepository::DeleteLemma(Id id) {
  Transaction([&] {
    Stmt dep = Prepare("SELECT count(*) FROM entries WHERE lemma = ?");
    dep.Bind(1, id);
    dep.Step();
    if (dep.Int(0) > 0) {
      throw Error(ErrorCode::kReferentialIntegrity,
                  "lemma " + std::to_string(id) + " still has " + std::to_string(dep.Int(0)) + " entries");
    }
    Prepare("DELETE FROM lemmas WHERE id = ?").Bind(1, id).Run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no lemma " + std::to_string(id));
  });
}

// ---- question templates ----

Id SqliteRepository::Create(const QuestionTemplate& q) {
  Validate(q);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("INSERT INTO questions(variety, features, text, draft) VALUES (?, ?, ?, ?)")
      .Bind(1, q.variety).Bind(2, q.features.str()).Bind(3, q.text).Bind(4, q.draft).Run();
  return sqlite3_last_insert_rowid(db_);
}

void SqliteRepository::Update(const QuestionTemplate& q) {
  Validate(q);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("UPDATE questions SET variety = ?, features = ?, text = ?, draft = ? WHERE id = ?")
      .Bind(1, q.variety).Bind(2, q.features.str()).Bind(3, q.text).Bind(4, q.draft).Bind(5, q.id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no question " + std::to_string(q.id));
}

std::optional<QuestionTemplate> SqliteRepository::GetQuestion(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, features, text, draft FROM questions WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return QuestionTemplate{s.Int(0), s.Int(1), FeatureSet::Parse(s.Text(2)), s.Text(3), s.Int(4) != 0};
}

std::vector<QuestionTemplate> SqliteRepository::ListQuestions(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, variety, features, text, draft FROM questions WHERE variety = ? ORDER BY id");
  s.Bind(1, variety);
  std::vector<QuestionTemplate> out;
  while (s.Step()) {
    out.push_back({s.Int(0), s.Int(1), FeatureSet::Parse(s.Text(2)), s.Text(3), s.Int(4) != 0});
  }
  return out;
}

void SqliteRepository::DeleteQuestion(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("DELETE FROM questions WHERE id = ?").Bind(1, id).Run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::kNotFound, "no question " + std::to_string(id));
}

// ---- users ----

Id SqliteRepository::Create(const User& u) {
  Validate(u);
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("INSERT INTO users(name, role, expertise, designated_expert) VALUES (?, ?, ?, ?)")
      .Bind(1, u.name).Bind(2, ToString(u.role)).Bind(3, ToString(u.expertise))
      .Bind(4, u.designated_expert).Run();
  return sqlite3_last_insert_rowid(db_);
}

std::optional<User> SqliteRepository::GetUser(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, role, expertise, designated_expert FROM users WHERE id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return User{s.Int(0), s.Text(1), ParseRole(s.Text(2)), ParseExpertise(s.Text(3)), s.Int(4) != 0};
}

std::optional<User> SqliteRepository::FindUser(std::string_view name) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, role, expertise, designated_expert FROM users WHERE name = ?");
  s.Bind(1, name);
  if (!s.Step()) return std::nullopt;
  return User{s.Int(0), s.Text(1), ParseRole(s.Text(2)), ParseExpertise(s.Text(3)), s.Int(4) != 0};
}

std::vector<User> SqliteRepository::ListUsers() {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT id, name, role, expertise, designated_expert FROM users ORDER BY id");
  std::vector<User> out;
  while (s.Step()) {
    out.push_back({s.Int(0), s.Text(1), ParseRole(s.Text(2)), ParseExpertise(s.Text(3)), s.Int(4) != 0});
  }
  return out;
}

// ---- wordform entries ----

namespace {
constexpr std::string_view kEntryColumns =
    "e.id, e.lemma, e.features, e.form, e.status, e.source, e.version, e.submitter, "
    "e.slot_priority, e.escalated, e.verified_at_ms";
}  // namespace

WordformEntry SqliteRepository::ReadEntry(Stmt& row) {
  WordformEntry e;
  e.id = row.Int(0);
  e.lemma = row.Int(1);
  e.features = FeatureSet::Parse(row.Text(2));
  e.form = row.OptText(3);
  e.status = ParseEntryStatus(row.Text(4));
  e.source = ParseSource(row.Text(5));
  e.version = row.Int(6);
  e.submitter = row.OptInt(7);
  e.slot_priority = static_cast<int>(row.Int(8));
  e.escalated = row.Int(9) != 0;
  e.verified_at_ms = row.Int(10);
  Stmt v = Prepare("SELECT user, form FROM votes WHERE entry = ? ORDER BY position");
  v.Bind(1, e.id);
  while (v.Step()) e.votes.push_back({v.Int(0), v.Text(1)});
  Stmt h = Prepare("SELECT form, status, source, actor, timestamp_ms FROM history WHERE entry = ? ORDER BY seq");
  h.Bind(1, e.id);
  while (h.Step()) {
    e.history.push_back({h.OptText(0), ParseEntryStatus(h.Text(1)), ParseSource(h.Text(2)), h.OptInt(3),
                         h.Int(4)});
  }
  return e;
}

Id SqliteRepository::Create(const WordformEntry& e) {
  Validate(e);
  if (e.version != 1) throw Error(ErrorCode::kValidation, "new entries start at version 1", "version");
  Id id = 0;
  Transaction([&] {
    Prepare("INSERT INTO entries(lemma, features, form, status, source, version, submitter, "
            "slot_priority, escalated, verified_at_ms) VALUES (?, ?, ?, ?, ?, 1, ?, ?, ?, ?)")
        .Bind(1, e.lemma).Bind(2, e.features.str()).Bind(3, e.form).Bind(4, ToString(e.status))
        .Bind(5, ToString(e.source)).Bind(6, e.submitter).Bind(7, e.slot_priority).Bind(8, e.escalated)
        .Bind(9, e.verified_at_ms).Run();
    id = sqlite3_last_insert_rowid(db_);
    for (size_t i = 0; i < e.features.tags().size(); ++i) {
      Prepare("INSERT INTO entry_tags(entry, position, tag) VALUES (?, ?, ?)")
          .Bind(1, id).Bind(2, static_cast<std::int64_t>(i)).Bind(3, e.features.tags()[i]).Run();
    }
    for (size_t i = 0; i < e.votes.size(); ++i) {
      Prepare("INSERT INTO votes(entry, position, user, form) VALUES (?, ?, ?, ?)")
          .Bind(1, id).Bind(2, static_cast<std::int64_t>(i)).Bind(3, e.votes[i].user)
          .Bind(4, e.votes[i].form).Run();
    }
  });
  return id;
}

std::optional<WordformEntry> SqliteRepository::GetEntry(Id id) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT " + std::string(kEntryColumns) + " FROM entries e WHERE e.id = ?");
  s.Bind(1, id);
  if (!s.Step()) return std::nullopt;
  return ReadEntry(s);
}

WordformEntry SqliteRepository::SaveEntryCas(const WordformEntry& entry, std::int64_t expected_version) {
  Validate(entry);
  if (entry.version != expected_version + 1) {
    throw Error(ErrorCode::kValidation, "entry must carry version expected+1", "version");
  }
  Transaction([&] {
    Stmt u = Prepare(
        "UPDATE entries SET form = ?, status = ?, source = ?, version = ?, submitter = ?, "
        "slot_priority = ?, escalated = ?, verified_at_ms = ? WHERE id = ? AND version = ?");
    u.Bind(1, entry.form).Bind(2, ToString(entry.status)).Bind(3, ToString(entry.source))
        .Bind(4, entry.version).Bind(5, entry.submitter).Bind(6, entry.slot_priority)
        .Bind(7, entry.escalated).Bind(8, entry.verified_at_ms).Bind(9, entry.id)
        .Bind(10, expected_version).Run();
    if (sqlite3_changes(db_) == 0) {
      Stmt probe = Prepare("SELECT version FROM entries WHERE id = ?");
      probe.Bind(1, entry.id);
      if (!probe.Step()) throw Error(ErrorCode::kNotFound, "no entry " + std::to_string(entry.id));
      throw Error(ErrorCode::kStaleVersion, "entry " + std::to_string(entry.id) + " is at version " +
                                                std::to_string(probe.Int(0)) + ", expected " +
                                                std::to_string(expected_version));
    }
    Prepare("DELETE FROM votes WHERE entry = ?").Bind(1, entry.id).Run();
    for (size_t i = 0; i < entry.votes.size(); ++i) {
      Prepare("INSERT INTO votes(entry, position, user, form) VALUES (?, ?, ?, ?)")
          .Bind(1, entry.id).Bind(2, static_cast<std::int64_t>(i)).Bind(3, entry.votes[i].user)
          .Bind(4, entry.votes[i].form).Run();
    }
    // History is append-only: only the newest record is written.
    const HistoryRecord& h = entry.history.back();
    Prepare("INSERT INTO history(entry, seq, form, status, source, actor, timestamp_ms) "
            "VALUES (?, ?, ?, ?, ?, ?, ?)")
        .Bind(1, entry.id).Bind(2, static_cast<std::int64_t>(entry.history.size() - 1)).Bind(3, h.form)
        .Bind(4, ToString(h.status)).Bind(5, ToString(h.source)).Bind(6, h.actor).Bind(7, h.timestamp_ms)
        .Run();
  });
  return *GetEntry(entry.id);
}

std::string SqliteRepository::FilterSql(const CellFilter& filter) {
  std::string sql = " FROM entries e JOIN lemmas l ON l.id = e.lemma WHERE l.variety = ?";
  if (filter.status) sql += " AND e.status = ?";
  if (filter.features) sql += " AND e.features = ?";
  if (filter.lemma) sql += " AND e.lemma = ?";
  if (filter.tag) sql += " AND EXISTS (SELECT 1 FROM entry_tags t WHERE t.entry = e.id AND t.tag = ?)";
  return sql;
}

void SqliteRepository::BindFilter(Stmt& stmt, int& index, Id variety, const CellFilter& filter) {
  stmt.Bind(index++, variety);
  if (filter.status) stmt.Bind(index++, ToString(*filter.status));
  if (filter.features) stmt.Bind(index++, filter.features->str());
  if (filter.lemma) stmt.Bind(index++, *filter.lemma);
  if (filter.tag) stmt.Bind(index++, *filter.tag);
}

std::vector<WordformEntry> SqliteRepository::QueryCells(Id variety, const CellFilter& filter,
                                                        PageRequest page) {
  if (page.limit > kMaxPageSize || page.limit < 0 || page.offset < 0) {
    throw Error(ErrorCode::kPageTooLarge,
                "page size must be within 0.." + std::to_string(kMaxPageSize), "limit");
  }
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT " + std::string(kEntryColumns) + FilterSql(filter) +
                   " ORDER BY e.id LIMIT ? OFFSET ?");
  int index = 1;
  BindFilter(s, index, variety, filter);
  s.Bind(index, page.limit);
  s.Bind(index + 1, page.offset);
  std::vector<WordformEntry> out;
  while (s.Step()) out.push_back(ReadEntry(s));
  return out;
}

std::int64_t SqliteRepository::CountCells(Id variety, const CellFilter& filter) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT count(*)" + FilterSql(filter));
  int index = 1;
  BindFilter(s, index, variety, filter);
  s.Step();
  return s.Int(0);
}

Id SqliteRepository::VarietyOfEntry(Id entry) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT l.variety FROM entries e JOIN lemmas l ON l.id = e.lemma WHERE e.id = ?");
  s.Bind(1, entry);
  if (!s.Step()) throw Error(ErrorCode::kNotFound, "no entry " + std::to_string(entry));
  return s.Int(0);
}

TrainingState SqliteRepository::GetTrainingState(Id variety) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Stmt s = Prepare("SELECT verified_at_last_train, trained_at_ms, runs FROM training_state WHERE variety = ?");
  s.Bind(1, variety);
  if (!s.Step()) return {};
  return TrainingState{s.Int(0), s.Int(1), static_cast<int>(s.Int(2))};
}

void SqliteRepository::SetTrainingState(Id variety, const TrainingState& state) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  Prepare("INSERT INTO training_state(variety, verified_at_last_train, trained_at_ms, runs) "
          "VALUES (?, ?, ?, ?) ON CONFLICT(variety) DO UPDATE SET "
          "verified_at_last_train = excluded.verified_at_last_train, "
          "trained_at_ms = excluded.trained_at_ms, runs = excluded.runs")
      .Bind(1, variety).Bind(2, state.verified_at_last_train).Bind(3, state.trained_at_ms)
      .Bind(4, state.runs).Run();
}

// ---- whole-variety operations ----

Materials LoadMaterials(Repository& repo, Id variety) {
  Materials m;
  repo.Transaction([&] {
    std::optional<Variety> v = repo.GetVariety(variety);
    if (!v) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(variety));
    m.variety = *v;
    m.classes = repo.ListClasses(variety);
    m.structures = repo.ListStructures(variety);
    m.layers = repo.ListLayers(variety);
    m.rules = repo.ListRules(variety);
    m.lemmas = repo.ListLemmas(variety);
    m.questions = repo.ListQuestions(variety);
  });
  return m;
}

Id CloneVariety(Repository& repo, Id source, const std::string& new_name) {
  Id clone = 0;
  repo.Transaction([&] {
    std::optional<Variety> src = repo.GetVariety(source);
    if (!src) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(source));
    Materials m = LoadMaterials(repo, source);

    Variety v = m.variety;
    v.id = 0;
    v.name = new_name;
    v.parent_variety = source;
    clone = repo.Create(v);

    std::map<Id, Id> classes;
    for (InflectionClass c : m.classes) {
      Id old = c.id;
      c.id = 0;
      c.variety = clone;
      classes[old] = repo.Create(c);
    }
    std::map<Id, Id> layers;
    for (ReusableLayer l : m.layers) {
      Id old = l.id;
      l.id = 0;
      l.variety = clone;
      layers[old] = repo.Create(l);
    }
    for (ParadigmStructure s : m.structures) {
      s.id = 0;
      s.inflection_class = classes.at(s.inflection_class);
      for (Slot& slot : s.slots) {
        if (slot.layer) slot.layer = layers.at(*slot.layer);
      }
      repo.Create(s);
    }
    for (MorphophonRule r : m.rules) {
      r.id = 0;
      r.variety = clone;
      if (r.scope) r.scope = classes.at(*r.scope);
      repo.Create(r);
    }
    for (Lemma l : m.lemmas) {
      l.id = 0;
      l.variety = clone;
      l.inflection_class = classes.at(l.inflection_class);
      repo.Create(l);
    }
    for (QuestionTemplate q : m.questions) {
      q.id = 0;
      q.variety = clone;
      repo.Create(q);
    }
  });
  return clone;
}

}  // namespace morph
