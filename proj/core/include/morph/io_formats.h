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

#ifndef MORPH_IO_FORMATS_H_
#define MORPH_IO_FORMATS_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"
#include "morph/storage.h"

namespace morph {

// Tab-separated material documents. UTF-8, LF, mandatory header, no quoting:
// fields may not contain tabs or newlines.
//
//   classes     inflection_class  pos
//   lexicon     lemma  gloss  inflection_class  priority  stem1 .. stemK
//   structures  structure  inflection_class  features  pattern  priority  layer
//   layers      layer  fragment  features
//   rules       order  scope  pattern  replacement      (scope "*" = variety-wide)
//   questions   features  text
enum class MaterialKind { kClasses, kLexicon, kStructures, kLayers, kRules, kQuestions };

// Dependency order, which is also the import order for a bundle.
inline constexpr MaterialKind kAllMaterialKinds[] = {
    MaterialKind::kClasses, MaterialKind::kLayers, MaterialKind::kStructures,
    MaterialKind::kRules,   MaterialKind::kLexicon, MaterialKind::kQuestions};

std::string_view ToString(MaterialKind kind);
// Throws kBadRequest for unknown names.
MaterialKind ParseMaterialKind(std::string_view name);

struct RowError {
  int line = 0;  // 1-based, header is line 1
  std::string reason;
  std::string detail;

  friend bool operator==(const RowError&, const RowError&) = default;
};

struct ImportResult {
  int count = 0;
  std::vector<RowError> errors;
};

struct ImportOptions {
  // Reject the whole document when any row is invalid.
  bool all_or_nothing = false;
};

// Upserts rows into the variety: lexicon by citation form, classes by name,
// structures and layers by name (their rows replace the slot or morpheme
// list), rules by (scope, order), questions by feature set. Invalid rows are
// skipped and reported. Throws kMissingHeader, kEncodingError,
// kUnknownVariety.
ImportResult Import(Repository& repo, Id variety, MaterialKind kind, std::string_view document,
                    const ImportOptions& options = {});

std::string Export(Repository& repo, Id variety, MaterialKind kind);

using MaterialBundle = std::map<MaterialKind, std::string>;
MaterialBundle ExportMaterials(Repository& repo, Id variety);
std::map<MaterialKind, ImportResult> ImportMaterials(Repository& repo, Id variety,
                                                     const MaterialBundle& bundle,
                                                     const ImportOptions& options = {});

// "lemma<TAB>form<TAB>features" per Verified entry, sorted by lemma then
// feature serialization, no header.
std::string ExportUniMorph(Repository& repo, Id variety);

struct GoldItem {
  std::string lemma;
  std::string form;
  FeatureSet features;

  friend bool operator==(const GoldItem&, const GoldItem&) = default;
};

// Three-column UniMorph reader. Throws kMalformedGold with the line number
// in the field path.
std::vector<GoldItem> ReadUniMorph(std::string_view document);
std::string WriteUniMorph(std::span<const GoldItem> items);

// Joins fields with tabs and appends LF. Throws kFieldContainsSeparator.
std::string TsvRow(std::span<const std::string> fields);

std::string MaterialFileName(std::string_view variety, MaterialKind kind);
std::string UniMorphFileName(std::string_view variety);
std::string BlankTableFileName(std::string_view variety, std::string_view structure);

// Printable blank table for a structure and the lemmas of its class.
std::string BlankTableFor(const Materials& materials, const ParadigmStructure& structure);

}  // namespace morph

#endif  // MORPH_IO_FORMATS_H_
