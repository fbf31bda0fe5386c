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

#include "morph/io_formats.h"

#include <algorithm>
#include <charconv>
#include <optional>

#include "morph/error.h"
#include "morph/pattern.h"
#include "morph/text.h"

namespace morph {
namespace {

struct Table {
  std::vector<std::string> header;
  struct Row {
    int line;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;

  int Column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

std::vector<std::pair<int, std::string>> Lines(std::string_view doc) {
  if (!text::IsValidUtf8(doc)) throw Error(ErrorCode::kEncodingError, "document is not valid UTF-8");
  std::vector<std::pair<int, std::string>> out;
  int line = 0;
  size_t pos = 0;
  while (pos < doc.size()) {
    size_t nl = doc.find('\n', pos);
    std::string_view l = doc.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.emplace_back(line, std::string(l));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

Table ParseTable(std::string_view doc, std::span<const std::string_view> required) {
  std::vector<std::pair<int, std::string>> lines = Lines(doc);
  Table t;
  if (lines.empty()) throw Error(ErrorCode::kMissingHeader, "document is empty");
  t.header = text::Split(lines.front().second, '\t');
  for (std::string_view col : required) {
    if (t.Column(col) < 0) {
      throw Error(ErrorCode::kMissingHeader, "header lacks column " + std::string(col), "line 1");
    }
  }
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].second.empty()) continue;
    t.rows.push_back({lines[i].first, text::Split(lines[i].second, '\t')});
  }
  return t;
}

struct RowFailure {
  std::string reason;
  std::string detail;
};

const std::string& Field(const Table& t, const Table::Row& row, std::string_view name) {
  static const std::string kEmpty;
  int c = t.Column(name);
  if (c < 0 || static_cast<size_t>(c) >= row.fields.size()) return kEmpty;
  return row.fields[c];
}

int ParsePriority(const std::string& s) {
  if (s.empty()) return 0;
  int value = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || value < 0) {
    throw RowFailure{"BadPriority", "priority must be a non-negative integer: " + s};
  }
  return value;
}

int ParseOrder(const std::string& s) {
  int value = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw RowFailure{"BadOrder", "order must be an integer: " + s};
  }
  return value;
}

void CheckColumns(const Table& t, const Table::Row& row) {
  if (row.fields.size() != t.header.size()) {
    throw RowFailure{"WrongColumnCount", "expected " + std::to_string(t.header.size()) +
                                             " fields, got " + std::to_string(row.fields.size())};
  }
}

struct RollBack {};

// Runs `body` for each row inside one transaction, collecting row errors.
template <class Body>
ImportResult ForEachRow(Repository& repo, const Table& t, const ImportOptions& options, Body body) {
  ImportResult result;
  try {
    repo.Transaction([&] {
      for (const Table::Row& row : t.rows) {
        try {
          CheckColumns(t, row);
          body(row);
          ++result.count;
        } catch (const RowFailure& f) {
          result.errors.push_back({row.line, f.reason, f.detail});
        } catch (const Error& e) {
          result.errors.push_back({row.line, std::string(ErrorCodeName(e.code())), e.what()});
        }
      }
      if (options.all_or_nothing && !result.errors.empty()) throw RollBack{};
    });
  } catch (const RollBack&) {
    result.count = 0;
  }
  return result;
}

std::string Header(std::initializer_list<std::string> cols) {
  std::vector<std::string> v(cols);
  return TsvRow(v);
}

std::string ClassName(const Materials& m, Id id) {
  const InflectionClass* c = m.FindClass(id);
  return c ? c->name : std::string();
}

ImportResult ImportClasses(Repository& repo, Id variety, std::string_view doc, const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"inflection_class", "pos"};
  Table t = ParseTable(doc, kCols);
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    InflectionClass c{0, variety, Field(t, row, "inflection_class"), Field(t, row, "pos")};
    for (const InflectionClass& existing : repo.ListClasses(variety)) {
      if (existing.name == c.name) {
        c.id = existing.id;
        repo.Update(c);
        return;
      }
    }
    repo.Create(c);
  });
}

ImportResult ImportLexicon(Repository& repo, Id variety, std::string_view doc, const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"lemma", "gloss", "inflection_class", "priority"};
  Table t = ParseTable(doc, kCols);
  int stem_columns = 0;
  while (t.Column("stem" + std::to_string(stem_columns + 1)) >= 0) ++stem_columns;
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    Lemma l;
    l.variety = variety;
    l.citation_form = Field(t, row, "lemma");
    if (text::Trim(l.citation_form).empty()) throw RowFailure{"EmptyLemma", "lemma is empty"};
    l.gloss = Field(t, row, "gloss");
    l.priority = ParsePriority(Field(t, row, "priority"));
    const std::string& cls_name = Field(t, row, "inflection_class");
    std::optional<Id> cls;
    for (const InflectionClass& c : repo.ListClasses(variety)) {
      if (c.name == cls_name) cls = c.id;
    }
    if (!cls) throw RowFailure{"UnknownInflectionClass", "no inflection class " + cls_name};
    l.inflection_class = *cls;
    bool gap = false;
    for (int k = 1; k <= stem_columns; ++k) {
      const std::string& s = Field(t, row, "stem" + std::to_string(k));
      if (s.empty()) {
        gap = true;
      } else if (gap) {
        throw RowFailure{"NonContiguousStems", "stem" + std::to_string(k) + " follows an empty stem"};
      } else {
        l.stems.push_back(s);
      }
    }
    if (std::optional<Lemma> existing = repo.FindLemma(variety, l.citation_form)) {
      l.id = existing->id;
      repo.Update(l);
    } else {
      repo.Create(l);
    }
  });
}

ImportResult ImportLayers(Repository& repo, Id variety, std::string_view doc, const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"layer", "fragment", "features"};
  Table t = ParseTable(doc, kCols);
  // Rows of one layer replace its morpheme list; the first row of a layer in
  // this document clears it.
  std::map<std::string, bool> seen;
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    const std::string& name = Field(t, row, "layer");
    if (name.empty()) throw RowFailure{"EmptyLayer", "layer name is empty"};
    ReusableMorpheme m{Field(t, row, "fragment"), TagBundle::Parse(Field(t, row, "features"))};
    std::optional<ReusableLayer> layer;
    for (ReusableLayer& l : repo.ListLayers(variety)) {
      if (l.name == name) layer = std::move(l);
    }
    if (!layer) {
      repo.Create(ReusableLayer{0, variety, name, {m}});
      seen[name] = true;
      return;
    }
    if (!seen[name]) layer->morphemes.clear();
    seen[name] = true;
    layer->morphemes.push_back(m);
    repo.Update(*layer);
  });
}

ImportResult ImportStructures(Repository& repo, Id variety, std::string_view doc,
                              const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"structure", "inflection_class", "features",
                                               "pattern",   "priority",         "layer"};
  Table t = ParseTable(doc, kCols);
  std::map<std::pair<std::string, std::string>, bool> seen;
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    const std::string& name = Field(t, row, "structure");
    const std::string& cls_name = Field(t, row, "inflection_class");
    if (name.empty()) throw RowFailure{"EmptyStructure", "structure name is empty"};
    Slot slot;
    slot.features = FeatureSet::Parse(Field(t, row, "features"));
    if (const std::string& p = Field(t, row, "pattern"); !p.empty()) {
      ParseTemplate(p);
      slot.pattern = p;
    }
    slot.priority = ParsePriority(Field(t, row, "priority"));
    if (const std::string& layer_name = Field(t, row, "layer"); !layer_name.empty()) {
      for (const ReusableLayer& l : repo.ListLayers(variety)) {
        if (l.name == layer_name) slot.layer = l.id;
      }
      if (!slot.layer) throw RowFailure{"UnknownLayer", "no layer " + layer_name};
    }
    std::optional<Id> cls;
    for (const InflectionClass& c : repo.ListClasses(variety)) {
      if (c.name == cls_name) cls = c.id;
    }
    if (!cls) {
      if (cls_name.empty()) throw RowFailure{"UnknownInflectionClass", "inflection class is empty"};
      cls = repo.Create(InflectionClass{0, variety, cls_name, slot.features.pos()});
    }
    std::optional<ParadigmStructure> structure;
    for (ParadigmStructure& s : repo.ListStructures(variety)) {
      if (s.inflection_class == *cls && s.name == name) structure = std::move(s);
    }
    bool& started = seen[{cls_name, name}];
    if (!structure) {
      repo.Create(ParadigmStructure{0, *cls, name, {slot}});
    } else {
      if (!started) structure->slots.clear();
      structure->slots.push_back(slot);
      repo.Update(*structure);
    }
    started = true;
  });
}

ImportResult ImportRules(Repository& repo, Id variety, std::string_view doc, const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"order", "scope", "pattern", "replacement"};
  Table t = ParseTable(doc, kCols);
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    MorphophonRule r;
    r.variety = variety;
    r.order = ParseOrder(Field(t, row, "order"));
    r.pattern = Field(t, row, "pattern");
    r.replacement = Field(t, row, "replacement");
    if (r.pattern.empty()) throw RowFailure{"EmptyPattern", "rule pattern is empty"};
    const std::string& scope = Field(t, row, "scope");
    if (scope != "*" && !scope.empty()) {
      for (const InflectionClass& c : repo.ListClasses(variety)) {
        if (c.name == scope) r.scope = c.id;
      }
      if (!r.scope) throw RowFailure{"UnknownInflectionClass", "no inflection class " + scope};
    }
    for (const MorphophonRule& existing : repo.ListRules(variety)) {
      if (existing.scope == r.scope && existing.order == r.order) {
        r.id = existing.id;
        repo.Update(r);
        return;
      }
    }
    repo.Create(r);
  });
}

ImportResult ImportQuestions(Repository& repo, Id variety, std::string_view doc, const ImportOptions& o) {
  static constexpr std::string_view kCols[] = {"features", "text"};
  Table t = ParseTable(doc, kCols);
  return ForEachRow(repo, t, o, [&](const Table::Row& row) {
    QuestionTemplate q{0, variety, FeatureSet::Parse(Field(t, row, "features")), Field(t, row, "text"), false};
    for (const QuestionTemplate& existing : repo.ListQuestions(variety)) {
      if (!existing.draft && existing.features == q.features) {
        q.id = existing.id;
        repo.Update(q);
        return;
      }
    }
    repo.Create(q);
  });
}

}  // namespace

std::string_view ToString(MaterialKind kind) {
  switch (kind) {
    case MaterialKind::kClasses: return "classes";
    case MaterialKind::kLexicon: return "lexicon";
    case MaterialKind::kStructures: return "structures";
    case MaterialKind::kLayers: return "layers";
    case MaterialKind::kRules: return "rules";
    case MaterialKind::kQuestions: return "questions";
  }
  return "?";
}

MaterialKind ParseMaterialKind(std::string_view name) {
  for (MaterialKind k : kAllMaterialKinds) {
    if (ToString(k) == name) return k;
  }
  throw Error(ErrorCode::kBadRequest, "unknown material kind " + std::string(name), "kind");
}

std::string TsvRow(std::span<const std::string> fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].find_first_of("\t\n\r") != std::string::npos) {
      throw Error(ErrorCode::kFieldContainsSeparator,
                  "field contains a tab or line break: " + fields[i], "field " + std::to_string(i + 1));
    }
    if (i > 0) out += '\t';
    out += fields[i];
  }
  out += '\n';
  return out;
}

ImportResult Import(Repository& repo, Id variety, MaterialKind kind, std::string_view document,
                    const ImportOptions& options) {
  if (!repo.GetVariety(variety)) {
    throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(variety));
  }
  switch (kind) {
    case MaterialKind::kClasses: return ImportClasses(repo, variety, document, options);
    case MaterialKind::kLexicon: return ImportLexicon(repo, variety, document, options);
    case MaterialKind::kStructures: return ImportStructures(repo, variety, document, options);
    case MaterialKind::kLayers: return ImportLayers(repo, variety, document, options);
    case MaterialKind::kRules: return ImportRules(repo, variety, document, options);
    case MaterialKind::kQuestions: return ImportQuestions(repo, variety, document, options);
  }
  return {};
}

std::string Export(Repository& repo, Id variety, MaterialKind kind) {
  Materials m = LoadMaterials(repo, variety);
  std::string out;
  switch (kind) {
    case MaterialKind::kClasses:
      out = Header({"inflection_class", "pos"});
      for (const InflectionClass& c : m.classes) out += TsvRow(std::vector<std::string>{c.name, c.pos});
      break;
    case MaterialKind::kLexicon: {
      size_t k = 1;
      for (const Lemma& l : m.lemmas) k = std::max(k, l.stems.size());
      std::vector<std::string> header = {"lemma", "gloss", "inflection_class", "priority"};
      for (size_t i = 1; i <= k; ++i) header.push_back("stem" + std::to_string(i));
      out = TsvRow(header);
      for (const Lemma& l : m.lemmas) {
        std::vector<std::string> row = {l.citation_form, l.gloss, ClassName(m, l.inflection_class),
                                        std::to_string(l.priority)};
        for (size_t i = 0; i < k; ++i) row.push_back(i < l.stems.size() ? l.stems[i] : std::string());
        out += TsvRow(row);
      }
      break;
    }
    case MaterialKind::kStructures:
      out = Header({"structure", "inflection_class", "features", "pattern", "priority", "layer"});
      for (const ParadigmStructure& s : m.structures) {
        for (const Slot& slot : s.slots) {
          const ReusableLayer* layer = slot.layer ? m.FindLayer(*slot.layer) : nullptr;
          out += TsvRow(std::vector<std::string>{s.name, ClassName(m, s.inflection_class),
                                                 slot.features.str(), slot.pattern.value_or(""),
                                                 std::to_string(slot.priority),
                                                 layer ? layer->name : std::string()});
        }
      }
      break;
    case MaterialKind::kLayers:
      out = Header({"layer", "fragment", "features"});
      for (const ReusableLayer& l : m.layers) {
        for (const ReusableMorpheme& mo : l.morphemes) {
          out += TsvRow(std::vector<std::string>{l.name, mo.fragment, mo.features.str()});
        }
      }
      break;
    case MaterialKind::kRules:
      out = Header({"order", "scope", "pattern", "replacement"});
      for (const MorphophonRule& r : m.rules) {
        out += TsvRow(std::vector<std::string>{std::to_string(r.order),
                                               r.scope ? ClassName(m, *r.scope) : std::string("*"),
                                               r.pattern, r.replacement});
      }
      break;
    case MaterialKind::kQuestions:
      out = Header({"features", "text"});
      for (const QuestionTemplate& q : m.questions) {
        if (!q.draft) out += TsvRow(std::vector<std::string>{q.features.str(), q.text});
      }
      break;
  }
  return out;
}

MaterialBundle ExportMaterials(Repository& repo, Id variety) {
  MaterialBundle bundle;
  repo.Transaction([&] {
    for (MaterialKind k : kAllMaterialKinds) bundle[k] = Export(repo, variety, k);
  });
  return bundle;
}

std::map<MaterialKind, ImportResult> ImportMaterials(Repository& repo, Id variety,
                                                     const MaterialBundle& bundle,
                                                     const ImportOptions& options) {
  std::map<MaterialKind, ImportResult> results;
  for (MaterialKind k : kAllMaterialKinds) {
    auto it = bundle.find(k);
    if (it != bundle.end()) results[k] = Import(repo, variety, k, it->second, options);
  }
  return results;
}

std::string ExportUniMorph(Repository& repo, Id variety) {
  std::vector<GoldItem> items;
  repo.Transaction([&] {
    std::map<Id, std::string> lemmas;
    for (const Lemma& l : repo.ListLemmas(variety)) lemmas[l.id] = l.citation_form;
    CellFilter verified;
    verified.status = EntryStatus::kVerified;
    for (std::int64_t offset = 0;; offset += kMaxPageSize) {
      std::vector<WordformEntry> page = repo.QueryCells(variety, verified, {offset, kMaxPageSize});
      for (const WordformEntry& e : page) items.push_back({lemmas.at(e.lemma), *e.form, e.features});
      if (page.size() < static_cast<size_t>(kMaxPageSize)) break;
    }
  });
  return WriteUniMorph(items);
}

std::string WriteUniMorph(std::span<const GoldItem> items) {
  std::vector<const GoldItem*> sorted;
  for (const GoldItem& g : items) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(), [](const GoldItem* a, const GoldItem* b) {
    if (a->lemma != b->lemma) return a->lemma < b->lemma;
    return a->features.str() < b->features.str();
  });
  std::string out;
  for (const GoldItem* g : sorted) {
    if (g->lemma.empty() || g->form.empty()) {
      throw Error(ErrorCode::kValidation, "UniMorph fields must be non-empty", "lemma");
    }
    out += TsvRow(std::vector<std::string>{g->lemma, g->form, g->features.str()});
  }
  return out;
}

std::vector<GoldItem> ReadUniMorph(std::string_view document) {
  std::vector<std::pair<int, std::string>> lines;
  try {
    lines = Lines(document);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedGold, e.what());
  }
  std::vector<GoldItem> out;
  for (const auto& [line, content] : lines) {
    if (content.empty()) continue;
    std::vector<std::string> f = text::Split(content, '\t');
    const std::string where = "line " + std::to_string(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw Error(ErrorCode::kMalformedGold, "expected lemma<TAB>form<TAB>features", where);
    }
    try {
      out.push_back({f[0], f[1], FeatureSet::Parse(f[2])});
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedGold, std::string("bad features: ") + e.what(), where);
    }
  }
  return out;
}

std::string MaterialFileName(std::string_view variety, MaterialKind kind) {
  return std::string(variety) + "." + std::string(ToString(kind)) + ".tsv";
}

std::string UniMorphFileName(std::string_view variety) {
  return std::string(variety) + ".unimorph.tsv";
}

std::string BlankTableFileName(std::string_view variety, std::string_view structure) {
  return std::string(variety) + "." + std::string(structure) + ".blank.tsv";
}

std::string BlankTableFor(const Materials& materials, const ParadigmStructure& structure) {
  std::vector<Lemma> lemmas;
  for (const Lemma& l : materials.lemmas) {
    if (l.inflection_class == structure.inflection_class) lemmas.push_back(l);
  }
  return BlankTable(structure, materials.layers, lemmas);
}

}  // namespace morph
