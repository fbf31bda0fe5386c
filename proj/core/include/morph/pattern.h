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

#ifndef MORPH_PATTERN_H_
#define MORPH_PATTERN_H_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"

namespace morph {

struct Segment {
  enum class Kind { kLiteral, kStem, kLayer };
  Kind kind = Kind::kLiteral;
  std::string literal;  // kLiteral only
  int stem_index = 0;   // kStem only, >= 1

  static Segment Literal(std::string text) { return {Kind::kLiteral, std::move(text), 0}; }
  static Segment Stem(int index) { return {Kind::kStem, {}, index}; }
  static Segment Layer() { return {Kind::kLayer, {}, 0}; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Inflectional pattern such as "de{stem2}{layer}". Placeholders are
// {stem1}..{stemK} and {layer}; every other character is literal.
class PatternTemplate {
 public:
  PatternTemplate() = default;
  explicit PatternTemplate(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  bool HasLayerRef() const;
  int MaxStemIndex() const;
  // Inverse of ParseTemplate.
  std::string Serialize() const;

  friend bool operator==(const PatternTemplate&, const PatternTemplate&) = default;

 private:
  std::vector<Segment> segments_;
};

// Throws kEmptyInput, kUnbalancedBrace, kUnknownPlaceholder, kZeroStemIndex.
PatternTemplate ParseTemplate(std::string_view source);

// Concatenates literals, stems and the morpheme fragment. Throws
// kMissingStem (field "stem<N>") or kMissingLayerMorpheme.
std::string Render(const PatternTemplate& tpl, const Lemma& lemma,
                   const ReusableMorpheme* morpheme = nullptr);

struct RenderedForm {
  std::string raw;
  std::string surface;
  std::vector<Id> applied_rules;
};

// Throws kRegexCompileError if the rule's pattern does not compile. Called
// when a rule is saved.
void CheckRule(const MorphophonRule& rule);

// A compiled, ordered list of rewrite rules. Each rule runs exactly once, in
// list order, replacing all non-overlapping leftmost matches; there is no
// iteration to a fixpoint. Immutable after construction and safe to share.
class RewriteCascade {
 public:
  RewriteCascade();
  explicit RewriteCascade(std::span<const MorphophonRule> ordered_rules);
  RewriteCascade(RewriteCascade&&) noexcept;
  RewriteCascade& operator=(RewriteCascade&&) noexcept;
  ~RewriteCascade();

  RenderedForm Apply(std::string_view raw) const;
  size_t size() const;

 private:
  struct Compiled;
  std::vector<std::unique_ptr<Compiled>> rules_;
};

// Convenience wrapper compiling `rules` (already sorted) for a single call.
RenderedForm ApplyMorphophonology(std::string_view raw,
                                  std::span<const MorphophonRule> rules);

// Rules in effect for one inflection class: variety-wide rules first, then
// rules scoped to the class, each group sorted by order.
std::vector<MorphophonRule> RulesFor(std::span<const MorphophonRule> rules,
                                     Id inflection_class);

// One cell of an expanded structure before a lemma is attached.
struct CellSpec {
  FeatureSet features;
  const Slot* slot = nullptr;
  const ReusableMorpheme* morpheme = nullptr;
};

// Cross product of slots and their layer's morphemes, in slot order. Throws
// kDuplicateFeatureSet when two cells share a feature set.
std::vector<CellSpec> ExpandCells(const ParadigmStructure& structure,
                                  std::span<const ReusableLayer> layers);

// One WordformEntry per cell. Cells whose pattern renders get
// status=Suggested / source=Rule with the rewritten surface form; the rest
// are Empty.
std::vector<WordformEntry> ExpandParadigm(const Lemma& lemma,
                                          const ParadigmStructure& structure,
                                          std::span<const ReusableLayer> layers,
                                          std::span<const MorphophonRule> rules);

// Same, with rules precompiled (rules must already be in effect order).
std::vector<WordformEntry> ExpandParadigm(const Lemma& lemma,
                                          const ParadigmStructure& structure,
                                          std::span<const ReusableLayer> layers,
                                          const RewriteCascade& cascade);

// Printable TSV: header "lemma" + canonical feature sets, one row per lemma
// with empty cells. UTF-8, LF line endings.
std::string BlankTable(const ParadigmStructure& structure,
                       std::span<const ReusableLayer> layers,
                       std::span<const Lemma> lemmas);

}  // namespace morph

#endif  // MORPH_PATTERN_H_
