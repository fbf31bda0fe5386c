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

#include "morph/domain.h"

#include <algorithm>
#include <set>

#include "morph/error.h"
#include "morph/pattern.h"
#include "morph/text.h"
#include "morph/unimorph.h"

namespace morph {
namespace {

std::vector<std::string> Dedup(std::span<const std::string> tags) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const std::string& tag : tags) {
    if (tag.empty()) throw Error(ErrorCode::kEmptyInput, "empty tag");
    if (seen.insert(tag).second) out.push_back(tag);
  }
  return out;
}

std::vector<std::string> SplitTags(std::string_view serialized) {
  if (serialized.empty()) return {};
  return text::Split(serialized, ';');
}

[[noreturn]] void Invalid(const std::string& message, std::string field) {
  throw Error(ErrorCode::kValidation, message, std::move(field));
}

}  // namespace

TagBundle::TagBundle(std::span<const std::string> tags) : tags_(Dedup(tags)) {
  if (tags_.empty()) throw Error(ErrorCode::kEmptyInput, "empty tag list");
}

TagBundle TagBundle::Parse(std::string_view serialized) {
  auto tags = SplitTags(serialized);
  return TagBundle(tags);
}

std::string TagBundle::str() const { return text::Join(tags_, ";"); }

FeatureSet FeatureSet::Canonicalize(std::span<const std::string> tags) {
  if (tags.empty()) throw Error(ErrorCode::kEmptyInput, "empty tag list");
  std::vector<std::string> unique = Dedup(tags);
  auto pos = std::find_if(unique.begin(), unique.end(),
                          [](const std::string& t) { return unimorph::IsPosTag(t); });
  if (pos == unique.end()) {
    throw Error(ErrorCode::kNoPosTag,
                "no part-of-speech tag in '" + text::Join(unique, ";") + "'");
  }
  std::rotate(unique.begin(), pos, pos + 1);
  FeatureSet fs;
  fs.tags_ = std::move(unique);
  fs.serialized_ = text::Join(fs.tags_, ";");
  return fs;
}

FeatureSet FeatureSet::Parse(std::string_view serialized) {
  auto tags = SplitTags(serialized);
  return Canonicalize(tags);
}

FeatureSet FeatureSet::Union(const TagBundle& extra) const {
  std::vector<std::string> all = tags_;
  all.insert(all.end(), extra.tags().begin(), extra.tags().end());
  FeatureSet out = Canonicalize(all);
  out.aliases_ = aliases_;
  return out;
}

bool FeatureSet::Contains(std::string_view tag) const {
  return std::find(tags_.begin(), tags_.end(), tag) != tags_.end();
}

FeatureSet FeatureSet::WithAliases(std::map<std::string, std::string> aliases) const {
  FeatureSet out = *this;
  out.aliases_ = std::move(aliases);
  return out;
}

std::string FeatureSet::Display() const {
  std::vector<std::string> shown;
  shown.reserve(tags_.size());
  for (const std::string& tag : tags_) {
    auto it = aliases_.find(tag);
    shown.push_back(it == aliases_.end() ? tag : it->second);
  }
  return text::Join(shown, ";");
}

std::vector<Id> ParadigmStructure::layer_refs() const {
  std::vector<Id> refs;
  for (const Slot& slot : slots) {
    if (slot.layer && std::find(refs.begin(), refs.end(), *slot.layer) == refs.end()) {
      refs.push_back(*slot.layer);
    }
  }
  return refs;
}

const std::string* Lemma::stem(int index) const {
  if (index < 1 || index > static_cast<int>(stems.size())) return nullptr;
  return &stems[index - 1];
}

std::string_view ToString(EntryStatus status) {
  switch (status) {
    case EntryStatus::kEmpty: return "Empty";
    case EntryStatus::kSuggested: return "Suggested";
    case EntryStatus::kSubmitted: return "Submitted";
    case EntryStatus::kVerified: return "Verified";
    case EntryStatus::kFlagged: return "Flagged";
    case EntryStatus::kResolved: return "Resolved";
  }
  return "Empty";
}

std::string_view ToString(Source source) {
  switch (source) {
    case Source::kNone: return "None";
    case Source::kRule: return "Rule";
    case Source::kNeural: return "Neural";
    case Source::kLlm: return "LLM";
    case Source::kHuman: return "Human";
  }
  return "None";
}

std::string_view SourceLabel(Source source) {
  switch (source) {
    case Source::kNone: return "NONE";
    case Source::kRule: return "RULE";
    case Source::kNeural: return "NEURAL";
    case Source::kLlm: return "LLM";
    case Source::kHuman: return "HUMAN";
  }
  return "NONE";
}

EntryStatus ParseEntryStatus(std::string_view s) {
  for (auto status : {EntryStatus::kEmpty, EntryStatus::kSuggested, EntryStatus::kSubmitted,
                      EntryStatus::kVerified, EntryStatus::kFlagged, EntryStatus::kResolved}) {
    if (ToString(status) == s) return status;
  }
  throw Error(ErrorCode::kBadRequest, "unknown status: " + std::string(s), "status");
}

Source ParseSource(std::string_view s) {
  for (auto source : {Source::kNone, Source::kRule, Source::kNeural, Source::kLlm,
                      Source::kHuman}) {
    if (ToString(source) == s || SourceLabel(source) == s) return source;
  }
  throw Error(ErrorCode::kBadRequest, "unknown source: " + std::string(s), "source");
}

std::vector<std::string> WordformEntry::DistinctVotedForms() const {
  std::vector<std::string> forms;
  for (const Vote& vote : votes) {
    if (std::find(forms.begin(), forms.end(), vote.form) == forms.end()) {
      forms.push_back(vote.form);
    }
  }
  return forms;
}

void WordformEntry::RecordChange(std::optional<Id> actor, std::int64_t timestamp_ms) {
  history.push_back(HistoryRecord{form, status, source, actor, timestamp_ms});
  ++version;
}

std::string_view ToString(Role role) {
  return role == Role::kLinguist ? "Linguist" : "Speaker";
}

std::string_view ToString(Expertise expertise) {
  return expertise == Expertise::kExpert ? "Expert" : "NonExpert";
}

Role ParseRole(std::string_view s) {
  if (s == "Linguist" || s == "linguist") return Role::kLinguist;
  if (s == "Speaker" || s == "speaker") return Role::kSpeaker;
  throw Error(ErrorCode::kBadRequest, "unknown role: " + std::string(s), "role");
}

Expertise ParseExpertise(std::string_view s) {
  if (s == "Expert" || s == "expert") return Expertise::kExpert;
  if (s == "NonExpert" || s == "nonexpert" || s == "non-expert") return Expertise::kNonExpert;
  throw Error(ErrorCode::kBadRequest, "unknown expertise: " + std::string(s), "expertise");
}

std::string QuestionTemplate::Render(std::string_view word) const {
  std::string out = text;
  auto pos = out.find(kLemmaPlaceholder);
  if (pos != std::string::npos) out.replace(pos, kLemmaPlaceholder.size(), word);
  return out;
}

void Validate(const Variety& variety) {
  if (variety.name.empty()) Invalid("variety name is empty", "name");
  if (variety.parent_variety && *variety.parent_variety == variety.id && variety.id != 0) {
    Invalid("variety cannot be its own parent", "parent_variety");
  }
}

void Validate(const InflectionClass& cls) {
  if (cls.name.empty()) Invalid("inflection class name is empty", "name");
  if (!unimorph::IsPosTag(cls.pos)) Invalid("not a POS tag: " + cls.pos, "pos");
}

void Validate(const ParadigmStructure& structure) {
  if (structure.name.empty()) Invalid("structure name is empty", "name");
  if (structure.slots.empty()) Invalid("structure has no slots", "slots");
  std::set<std::string> seen;
  for (size_t i = 0; i < structure.slots.size(); ++i) {
    const Slot& slot = structure.slots[i];
    std::string field = "slots[" + std::to_string(i) + "]";
    if (slot.features.empty()) Invalid("slot has no features", field + ".features");
    if (slot.priority < 0) Invalid("negative priority", field + ".priority");
    if (slot.pattern) {
      PatternTemplate tpl = ParseTemplate(*slot.pattern);
      if (tpl.HasLayerRef() && !slot.layer) {
        Invalid("pattern uses {layer} but slot names no layer", field + ".layer");
      }
    }
    // Layer-free slots must already be unique; layered ones are checked on
    // expansion, where the morpheme features are known.
    if (!slot.layer && !seen.insert(slot.features.str()).second) {
      throw Error(ErrorCode::kDuplicateFeatureSet,
                  "duplicate slot features " + slot.features.str(), field);
    }
  }
}

void Validate(const ReusableLayer& layer) {
  if (layer.name.empty()) Invalid("layer name is empty", "name");
  if (layer.morphemes.empty()) Invalid("layer has no morphemes", "morphemes");
  std::set<std::string> seen;
  for (size_t i = 0; i < layer.morphemes.size(); ++i) {
    const auto& m = layer.morphemes[i];
    std::string field = "morphemes[" + std::to_string(i) + "]";
    if (m.features.empty()) Invalid("morpheme has no features", field + ".features");
    if (!seen.insert(m.features.str()).second) {
      Invalid("duplicate morpheme features " + m.features.str(), field + ".features");
    }
  }
}

void Validate(const Lemma& lemma) {
  if (lemma.citation_form.empty()) Invalid("citation form is empty", "citation_form");
  if (lemma.priority < 0) Invalid("negative priority", "priority");
  for (size_t i = 0; i < lemma.stems.size(); ++i) {
    if (lemma.stems[i].empty()) {
      Invalid("stem indices must be contiguous from 1",
              "stems[" + std::to_string(i + 1) + "]");
    }
  }
}

void Validate(const WordformEntry& entry) {
  if (entry.features.empty()) Invalid("entry has no features", "features");
  if (entry.status == EntryStatus::kVerified && !entry.form) {
    Invalid("verified entry without form", "form");
  }
  if (entry.status == EntryStatus::kFlagged && entry.DistinctVotedForms().size() < 2) {
    Invalid("flagged entry needs two distinct voted forms", "votes");
  }
  if (entry.version < 1 ||
      static_cast<std::int64_t>(entry.history.size()) != entry.version - 1) {
    Invalid("history length must equal version - 1", "version");
  }
}

void Validate(const User& user) {
  if (user.designated_expert && user.expertise != Expertise::kExpert) {
    Invalid("designated expert must have Expert expertise", "designated_expert");
  }
}

void Validate(const QuestionTemplate& question) {
  if (question.features.empty()) Invalid("question has no features", "features");
  size_t first = question.text.find(kLemmaPlaceholder);
  if (first == std::string::npos ||
      question.text.find(kLemmaPlaceholder, first + 1) != std::string::npos) {
    Invalid("question text must contain [LEMMA] exactly once", "text");
  }
}

const InflectionClass* Materials::FindClass(Id id) const {
  for (const auto& c : classes) if (c.id == id) return &c;
  return nullptr;
}
const InflectionClass* Materials::FindClass(std::string_view name) const {
  for (const auto& c : classes) if (c.name == name) return &c;
  return nullptr;
}
const ReusableLayer* Materials::FindLayer(Id id) const {
  for (const auto& l : layers) if (l.id == id) return &l;
  return nullptr;
}
const ReusableLayer* Materials::FindLayer(std::string_view name) const {
  for (const auto& l : layers) if (l.name == name) return &l;
  return nullptr;
}
const Lemma* Materials::FindLemma(Id id) const {
  for (const auto& l : lemmas) if (l.id == id) return &l;
  return nullptr;
}

}  // namespace morph
