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

#include "morph/pattern.h"

#include <unicode/regex.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "morph/error.h"

namespace morph {

PatternTemplate::PatternTemplate(std::vector<Segment> segments)
    : segments_(std::move(segments)) {}

bool PatternTemplate::HasLayerRef() const {
  return std::any_of(segments_.begin(), segments_.end(),
                     [](const Segment& s) { return s.kind == Segment::Kind::kLayer; });
}

int PatternTemplate::MaxStemIndex() const {
  int max_index = 0;
  for (const Segment& s : segments_) {
    if (s.kind == Segment::Kind::kStem) max_index = std::max(max_index, s.stem_index);
  }
  return max_index;
}

std::string PatternTemplate::Serialize() const {
  std::string out;
  for (const Segment& s : segments_) {
    switch (s.kind) {
      case Segment::Kind::kLiteral: out += s.literal; break;
      case Segment::Kind::kStem: out += "{stem" + std::to_string(s.stem_index) + "}"; break;
      case Segment::Kind::kLayer: out += "{layer}"; break;
    }
  }
  return out;
}

PatternTemplate ParseTemplate(std::string_view source) {
  if (source.empty()) throw Error(ErrorCode::kEmptyInput, "empty pattern");
  std::vector<Segment> segments;
  std::string literal;
  bool has_layer = false;
  size_t i = 0;
  while (i < source.size()) {
    char c = source[i];
    if (c == '}') {
      throw Error(ErrorCode::kUnbalancedBrace, "unmatched '}' in pattern",
                  "offset " + std::to_string(i));
    }
    if (c != '{') {
      literal.push_back(c);
      ++i;
      continue;
    }
    size_t close = source.find_first_of("{}", i + 1);
    if (close == std::string_view::npos || source[close] != '}') {
      throw Error(ErrorCode::kUnbalancedBrace, "unterminated '{' in pattern",
                  "offset " + std::to_string(i));
    }
    std::string_view name = source.substr(i + 1, close - i - 1);
    if (!literal.empty()) {
      segments.push_back(Segment::Literal(std::move(literal)));
      literal.clear();
    }
    if (name == "layer") {
      if (has_layer) {
        throw Error(ErrorCode::kValidation, "at most one {layer} per pattern",
                    "offset " + std::to_string(i));
      }
      has_layer = true;
      segments.push_back(Segment::Layer());
    } else if (name.size() > 4 && name.substr(0, 4) == "stem") {
      std::string_view digits = name.substr(4);
      int index = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      bool canonical = ec == std::errc() && ptr == digits.data() + digits.size() &&
                       (digits.size() == 1 || digits.front() != '0');
      if (!canonical) {
        throw Error(ErrorCode::kUnknownPlaceholder,
                    "unknown placeholder {" + std::string(name) + "}");
      }
      if (index == 0) {
        throw Error(ErrorCode::kZeroStemIndex, "stem indices start at 1");
      }
      segments.push_back(Segment::Stem(index));
    } else {
      throw Error(ErrorCode::kUnknownPlaceholder,
                  "unknown placeholder {" + std::string(name) + "}");
    }
    i = close + 1;
  }
  if (!literal.empty()) segments.push_back(Segment::Literal(std::move(literal)));
  return PatternTemplate(std::move(segments));
}

std::string Render(const PatternTemplate& tpl, const Lemma& lemma,
                   const ReusableMorpheme* morpheme) {
  std::string out;
  for (const Segment& s : tpl.segments()) {
    switch (s.kind) {
      case Segment::Kind::kLiteral:
        out += s.literal;
        break;
      case Segment::Kind::kStem: {
        const std::string* stem = lemma.stem(s.stem_index);
        if (stem == nullptr) {
          throw Error(ErrorCode::kMissingStem,
                      "lemma '" + lemma.citation_form + "' has no stem" +
                          std::to_string(s.stem_index),
                      "stem" + std::to_string(s.stem_index));
        }
        out += *stem;
        break;
      }
      case Segment::Kind::kLayer:
        if (morpheme == nullptr) {
          throw Error(ErrorCode::kMissingLayerMorpheme,
                      "pattern has {layer} but no morpheme was given");
        }
        out += morpheme->fragment;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rewrite rules, backed by ICU regular expressions over UTF-16.

struct RewriteCascade::Compiled {
  Id id = 0;
  std::unique_ptr<icu::RegexPattern> pattern;
  icu::UnicodeString replacement;
};

namespace {

std::unique_ptr<icu::RegexPattern> Compile(const MorphophonRule& rule) {
  UParseError parse_error;
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(rule.pattern);
  std::unique_ptr<icu::RegexPattern> pattern(
      icu::RegexPattern::compile(source, 0, parse_error, status));
  if (U_FAILURE(status) || rule.pattern.empty()) {
    throw Error(ErrorCode::kRegexCompileError,
                "rule pattern does not compile: '" + rule.pattern + "' (" +
                    u_errorName(status) + ")",
                "pattern");
  }
  // Validate replacement references against the group count.
  std::unique_ptr<icu::RegexMatcher> probe(pattern->matcher(status));
  int32_t groups = U_SUCCESS(status) ? probe->groupCount() : 0;
  for (size_t i = 0; i + 1 < rule.replacement.size(); ++i) {
    if (rule.replacement[i] == '\\') {
      ++i;
      continue;
    }
    if (rule.replacement[i] == '$' && std::isdigit(static_cast<unsigned char>(rule.replacement[i + 1]))) {
      int ref = rule.replacement[i + 1] - '0';
      if (ref > groups) {
        throw Error(ErrorCode::kRegexCompileError,
                    "replacement references group $" + std::to_string(ref) +
                        " but pattern has " + std::to_string(groups),
                    "replacement");
      }
    }
  }
  return pattern;
}

}  // namespace

void CheckRule(const MorphophonRule& rule) { Compile(rule); }

RewriteCascade::RewriteCascade() = default;
RewriteCascade::RewriteCascade(RewriteCascade&&) noexcept = default;
RewriteCascade& RewriteCascade::operator=(RewriteCascade&&) noexcept = default;
RewriteCascade::~RewriteCascade() = default;

RewriteCascade::RewriteCascade(std::span<const MorphophonRule> ordered_rules) {
  for (const MorphophonRule& rule : ordered_rules) {
    auto compiled = std::make_unique<Compiled>();
    compiled->id = rule.id;
    compiled->pattern = Compile(rule);
    compiled->replacement = icu::UnicodeString::fromUTF8(rule.replacement);
    rules_.push_back(std::move(compiled));
  }
}

size_t RewriteCascade::size() const { return rules_.size(); }

RenderedForm RewriteCascade::Apply(std::string_view raw) const {
  RenderedForm result;
  result.raw = std::string(raw);
  icu::UnicodeString current = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  for (const auto& rule : rules_) {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::RegexMatcher> matcher(rule->pattern->matcher(current, status));
    if (U_FAILURE(status)) {
      throw Error(ErrorCode::kRegexCompileError, "cannot create matcher");
    }
    icu::UnicodeString next = matcher->replaceAll(rule->replacement, status);
    if (U_FAILURE(status)) {
      throw Error(ErrorCode::kRegexCompileError,
                  std::string("rewrite failed: ") + u_errorName(status));
    }
    if (next != current) {
      result.applied_rules.push_back(rule->id);
      current = std::move(next);
    }
  }
  current.toUTF8String(result.surface);
  return result;
}

RenderedForm ApplyMorphophonology(std::string_view raw,
                                  std::span<const MorphophonRule> rules) {
  return RewriteCascade(rules).Apply(raw);
}

std::vector<MorphophonRule> RulesFor(std::span<const MorphophonRule> rules,
                                     Id inflection_class) {
  std::vector<MorphophonRule> wide;
  std::vector<MorphophonRule> scoped;
  for (const MorphophonRule& rule : rules) {
    if (!rule.scope) {
      wide.push_back(rule);
    } else if (*rule.scope == inflection_class) {
      scoped.push_back(rule);
    }
  }
  auto by_order = [](const MorphophonRule& a, const MorphophonRule& b) {
    return a.order < b.order;
  };
  std::stable_sort(wide.begin(), wide.end(), by_order);
  std::stable_sort(scoped.begin(), scoped.end(), by_order);
  wide.insert(wide.end(), scoped.begin(), scoped.end());
  return wide;
}

std::vector<CellSpec> ExpandCells(const ParadigmStructure& structure,
                                  std::span<const ReusableLayer> layers) {
  std::vector<CellSpec> cells;
  std::set<std::string> seen;
  auto add = [&](CellSpec cell) {
    if (!seen.insert(cell.features.str()).second) {
      throw Error(ErrorCode::kDuplicateFeatureSet,
                  "structure '" + structure.name + "' expands to duplicate cell " +
                      cell.features.str());
    }
    cells.push_back(std::move(cell));
  };
  for (const Slot& slot : structure.slots) {
    if (!slot.layer) {
      add(CellSpec{slot.features, &slot, nullptr});
      continue;
    }
    auto layer = std::find_if(layers.begin(), layers.end(),
                              [&](const ReusableLayer& l) { return l.id == *slot.layer; });
    if (layer == layers.end()) {
      throw Error(ErrorCode::kNotFound,
                  "slot references unknown layer " + std::to_string(*slot.layer), "layer");
    }
    for (const ReusableMorpheme& morpheme : layer->morphemes) {
      add(CellSpec{slot.features.Union(morpheme.features), &slot, &morpheme});
    }
  }
  return cells;
}

std::vector<WordformEntry> ExpandParadigm(const Lemma& lemma,
                                          const ParadigmStructure& structure,
                                          std::span<const ReusableLayer> layers,
                                          const RewriteCascade& cascade) {
  if (lemma.inflection_class != structure.inflection_class) {
    throw Error(ErrorCode::kValidation,
                "lemma '" + lemma.citation_form + "' is not in the structure's class",
                "inflection_class");
  }
  std::vector<WordformEntry> entries;
  for (const CellSpec& cell : ExpandCells(structure, layers)) {
    WordformEntry entry;
    entry.lemma = lemma.id;
    entry.features = cell.features;
    entry.slot_priority = cell.slot->priority;
    if (cell.slot->pattern) {
      try {
        PatternTemplate tpl = ParseTemplate(*cell.slot->pattern);
        std::string raw = Render(tpl, lemma, cell.morpheme);
        entry.form = cascade.Apply(raw).surface;
        entry.status = EntryStatus::kSuggested;
        entry.source = Source::kRule;
      } catch (const Error& e) {
        // A lemma lacking a stem the pattern needs gets no rule suggestion.
        if (e.code() != ErrorCode::kMissingStem) throw;
      }
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<WordformEntry> ExpandParadigm(const Lemma& lemma,
                                          const ParadigmStructure& structure,
                                          std::span<const ReusableLayer> layers,
                                          std::span<const MorphophonRule> rules) {
  return ExpandParadigm(lemma, structure, layers, RewriteCascade(rules));
}

std::string BlankTable(const ParadigmStructure& structure,
                       std::span<const ReusableLayer> layers,
                       std::span<const Lemma> lemmas) {
  std::vector<CellSpec> cells = ExpandCells(structure, layers);
  std::string out = "lemma";
  for (const CellSpec& cell : cells) {
    out += '\t';
    out += cell.features.str();
  }
  out += '\n';
  for (const Lemma& lemma : lemmas) {
    out += lemma.citation_form;
    out.append(cells.size(), '\t');
    out += '\n';
  }
  return out;
}

}  // namespace morph
