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

#ifndef MORPH_DOMAIN_H_
#define MORPH_DOMAIN_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morph {

using Id = std::int64_t;

// Ordered, duplicate-free tag bundle without part-of-speech requirement.
// Layer morphemes carry these ("1;SG"); they complete a slot's FeatureSet.
class TagBundle {
 public:
  TagBundle() = default;
  // Removes duplicates, keeps first occurrences in input order. Throws
  // kEmptyInput for an empty list or an empty tag.
  explicit TagBundle(std::span<const std::string> tags);
  static TagBundle Parse(std::string_view serialized);

  const std::vector<std::string>& tags() const { return tags_; }
  bool empty() const { return tags_.empty(); }
  std::string str() const;

  friend bool operator==(const TagBundle&, const TagBundle&) = default;

 private:
  std::vector<std::string> tags_;
};

// Canonical UniMorph feature bundle identifying one paradigm cell: POS tag
// first, then the remaining tags in input order, no duplicates. Equality is
// equality of the ";"-joined serialization; aliases only affect display.
class FeatureSet {
 public:
  FeatureSet() = default;

  // Throws kEmptyInput / kNoPosTag.
  static FeatureSet Canonicalize(std::span<const std::string> tags);
  static FeatureSet Parse(std::string_view serialized);
  // Canonical union: this set's tags followed by `extra`'s.
  FeatureSet Union(const TagBundle& extra) const;

  const std::vector<std::string>& tags() const { return tags_; }
  const std::string& pos() const { return tags_.front(); }
  bool empty() const { return tags_.empty(); }
  const std::string& str() const { return serialized_; }
  bool Contains(std::string_view tag) const;

  // Community labels shown in place of tags; never serialized.
  const std::map<std::string, std::string>& aliases() const { return aliases_; }
  FeatureSet WithAliases(std::map<std::string, std::string> aliases) const;
  std::string Display() const;

  friend bool operator==(const FeatureSet& a, const FeatureSet& b) {
    return a.serialized_ == b.serialized_;
  }
  friend auto operator<=>(const FeatureSet& a, const FeatureSet& b) {
    return a.serialized_ <=> b.serialized_;
  }

 private:
  std::vector<std::string> tags_;
  std::string serialized_;
  std::map<std::string, std::string> aliases_;
};

struct Variety {
  Id id = 0;
  std::string name;
  std::string meta_language = "English";
  std::optional<Id> parent_variety;
  std::map<std::string, std::string> tag_aliases;

  friend bool operator==(const Variety&, const Variety&) = default;
};

struct InflectionClass {
  Id id = 0;
  Id variety = 0;
  std::string name;
  std::string pos;

  friend bool operator==(const InflectionClass&, const InflectionClass&) = default;
};

struct Slot {
  FeatureSet features;
  std::optional<std::string> pattern;
  // Layer whose morphemes fill the pattern's {layer} placeholder.
  std::optional<Id> layer;
  int priority = 0;

  friend bool operator==(const Slot&, const Slot&) = default;
};

struct ParadigmStructure {
  Id id = 0;
  Id inflection_class = 0;
  std::string name;
  std::vector<Slot> slots;

  // Distinct layers referenced by the slots, in first-use order.
  std::vector<Id> layer_refs() const;

  friend bool operator==(const ParadigmStructure&, const ParadigmStructure&) = default;
};

struct ReusableMorpheme {
  std::string fragment;
  TagBundle features;

  friend bool operator==(const ReusableMorpheme&, const ReusableMorpheme&) = default;
};

struct ReusableLayer {
  Id id = 0;
  Id variety = 0;
  std::string name;
  std::vector<ReusableMorpheme> morphemes;

  friend bool operator==(const ReusableLayer&, const ReusableLayer&) = default;
};

struct Lemma {
  Id id = 0;
  Id variety = 0;
  std::string citation_form;
  std::string gloss;
  Id inflection_class = 0;
  // stems[i] is stem i+1.
  std::vector<std::string> stems;
  int priority = 0;

  const std::string* stem(int index) const;

  friend bool operator==(const Lemma&, const Lemma&) = default;
};

struct MorphophonRule {
  Id id = 0;
  Id variety = 0;
  std::string pattern;
  std::string replacement;
  int order = 0;
  // nullopt: variety-wide; otherwise the inflection class it is scoped to.
  std::optional<Id> scope;

  friend bool operator==(const MorphophonRule&, const MorphophonRule&) = default;
};

enum class EntryStatus { kEmpty, kSuggested, kSubmitted, kVerified, kFlagged, kResolved };
enum class Source { kNone, kRule, kNeural, kLlm, kHuman };

std::string_view ToString(EntryStatus status);
std::string_view ToString(Source source);
EntryStatus ParseEntryStatus(std::string_view s);
Source ParseSource(std::string_view s);
// RULE / NEURAL / LLM / HUMAN / NONE labels shown next to suggestions.
std::string_view SourceLabel(Source source);

struct Vote {
  Id user = 0;
  std::string form;

  friend bool operator==(const Vote&, const Vote&) = default;
};

// Prior state of an entry, recorded whenever `actor` changed it.
struct HistoryRecord {
  std::optional<std::string> form;
  EntryStatus status = EntryStatus::kEmpty;
  Source source = Source::kNone;
  std::optional<Id> actor;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct WordformEntry {
  Id id = 0;
  Id lemma = 0;
  FeatureSet features;
  std::optional<std::string> form;
  EntryStatus status = EntryStatus::kEmpty;
  Source source = Source::kNone;
  std::vector<Vote> votes;
  std::int64_t version = 1;
  std::vector<HistoryRecord> history;
  std::optional<Id> submitter;
  // Slot priority; the queue uses max(lemma priority, slot_priority).
  int slot_priority = 0;
  bool escalated = false;
  // Time the entry last became Verified; orders few-shot exemplars.
  std::int64_t verified_at_ms = 0;

  // Distinct voted forms, in first-vote order.
  std::vector<std::string> DistinctVotedForms() const;
  // Appends the prior state to history and bumps the version.
  void RecordChange(std::optional<Id> actor, std::int64_t timestamp_ms);

  friend bool operator==(const WordformEntry&, const WordformEntry&) = default;
};

enum class Role { kLinguist, kSpeaker };
enum class Expertise { kExpert, kNonExpert };

std::string_view ToString(Role role);
std::string_view ToString(Expertise expertise);
Role ParseRole(std::string_view s);
Expertise ParseExpertise(std::string_view s);

struct User {
  Id id = 0;
  std::string name;
  Role role = Role::kSpeaker;
  Expertise expertise = Expertise::kNonExpert;
  bool designated_expert = false;

  friend bool operator==(const User&, const User&) = default;
};

inline constexpr std::string_view kLemmaPlaceholder = "[LEMMA]";

struct QuestionTemplate {
  Id id = 0;
  Id variety = 0;
  FeatureSet features;
  std::string text;
  // Provider-generated templates stay drafts until a linguist approves them.
  bool draft = false;

  // Replaces the placeholder with the given word.
  std::string Render(std::string_view word) const;

  friend bool operator==(const QuestionTemplate&, const QuestionTemplate&) = default;
};

// Invariant checks. Each throws Error(kValidation, ..., field) on violation.
void Validate(const Variety& variety);
void Validate(const InflectionClass& cls);
void Validate(const ParadigmStructure& structure);
void Validate(const ReusableLayer& layer);
void Validate(const Lemma& lemma);
void Validate(const WordformEntry& entry);
void Validate(const User& user);
void Validate(const QuestionTemplate& question);

// Everything a linguist authors for one variety; the unit that is cloned,
// exported and imported.
struct Materials {
  Variety variety;
  std::vector<InflectionClass> classes;
  std::vector<ParadigmStructure> structures;
  std::vector<ReusableLayer> layers;
  std::vector<MorphophonRule> rules;
  std::vector<Lemma> lemmas;
  std::vector<QuestionTemplate> questions;

  const InflectionClass* FindClass(Id id) const;
  const InflectionClass* FindClass(std::string_view name) const;
  const ReusableLayer* FindLayer(Id id) const;
  const ReusableLayer* FindLayer(std::string_view name) const;
  const Lemma* FindLemma(Id id) const;
};

}  // namespace morph

#endif  // MORPH_DOMAIN_H_
