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

#include "synthetic.h"

#include <map>

#include "morph/text.h"

namespace morph::synth {
namespace {

const char* const kTenses[] = {"PRS", "PST", "FUT"};
const char* const kTenseSuffix[] = {"", "di", "ra"};
const char* const kAgreement[] = {"1;SG", "2;SG", "3;SG", "1;PL", "2;PL", "3;PL"};
const char* const kAgreementSuffix[] = {"m", "s", "", "mos", "tis", "n"};

}  // namespace

SuffixationLanguage::SuffixationLanguage(int lemma_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::string consonants = "ptkbdgmnslr";
  const std::string vowels = "aeiou";
  std::set<std::string> seen;
  while (static_cast<int>(stems_.size()) < lemma_count) {
    const int len = 3 + static_cast<int>(rng() % 4);
    std::string s;
    for (int k = 0; k < len; ++k) {
      const std::string& from = k % 2 == 0 ? consonants : vowels;
      s += from[rng() % from.size()];
    }
    if (seen.insert(s).second) stems_.push_back(s);
  }
}

FeatureSet SuffixationLanguage::Features(int cell) const {
  return FeatureSet::Parse(std::string("V;") + kTenses[cell / 6] + ";" + kAgreement[cell % 6]);
}

std::string SuffixationLanguage::Inflect(int lemma, int cell) const {
  return stems_.at(lemma) + kTenseSuffix[cell / 6] + kAgreementSuffix[cell % 6];
}

GoldItem SuffixationLanguage::Item(int lemma, int cell) const {
  return GoldItem{stems_.at(lemma), Inflect(lemma, cell), Features(cell)};
}

std::vector<GoldItem> SuffixationLanguage::Draw(int n, std::mt19937_64& rng,
                                                std::set<std::pair<int, int>>& used) const {
  std::vector<GoldItem> out;
  const size_t capacity = stems_.size() * kCells;
  while (static_cast<int>(out.size()) < n && used.size() < capacity) {
    int lemma = static_cast<int>(rng() % stems_.size());
    int cell = static_cast<int>(rng() % kCells);
    if (!used.insert({lemma, cell}).second) continue;
    out.push_back(Item(lemma, cell));
  }
  return out;
}

std::vector<GoldItem> SuffixationLanguage::All() const {
  std::vector<GoldItem> out;
  for (int l = 0; l < static_cast<int>(stems_.size()); ++l) {
    for (int c = 0; c < kCells; ++c) out.push_back(Item(l, c));
  }
  return out;
}

Lemma SuffixationLanguage::LemmaOf(const std::string& stem) const {
  Lemma l;
  l.citation_form = stem;
  l.stems = {stem};
  return l;
}

Materials SuffixationLanguage::AsMaterials() const {
  Materials m;
  m.variety = Variety{1, "Suffixation", "English", std::nullopt, {}};
  m.classes = {InflectionClass{1, 1, "verb", "V"}};
  ReusableLayer agreement{1, 1, "agreement", {}};
  for (int a = 0; a < 6; ++a) {
    agreement.morphemes.push_back({kAgreementSuffix[a], TagBundle::Parse(kAgreement[a])});
  }
  m.layers = {agreement};
  ParadigmStructure verb{1, 1, "verb", {}};
  for (int t = 0; t < 3; ++t) {
    verb.slots.push_back(Slot{FeatureSet::Parse(std::string("V;") + kTenses[t]),
                              std::string("{stem1}") + kTenseSuffix[t] + "{layer}", Id{1}, 0});
  }
  m.structures = {verb};
  for (size_t i = 0; i < stems_.size(); ++i) {
    Lemma l = LemmaOf(stems_[i]);
    l.id = static_cast<Id>(i + 1);
    l.variety = 1;
    l.inflection_class = 1;
    m.lemmas.push_back(l);
  }
  return m;
}

namespace {

const std::u32string kBack = U"aıou";
const std::u32string kFront = U"eiöü";
const std::u32string kVoiceless = U"çfhkpsşt";

bool In(const std::u32string& set, char32_t c) { return set.find(c) != std::u32string::npos; }

struct Case {
  const char* features;
  const char* suffix;
};
const Case kCases[] = {
    {"N;SG;NOM", ""},    {"N;SG;ACC", "I"},     {"N;SG;DAT", "A"},     {"N;SG;LOC", "dA"},
    {"N;SG;ABL", "dAn"}, {"N;SG;GEN", "In"},    {"N;PL;NOM", "lAr"},   {"N;PL;ACC", "lArI"},
    {"N;PL;DAT", "lArA"}, {"N;PL;LOC", "lArdA"}, {"N;PL;ABL", "lArdAn"}, {"N;PL;GEN", "lArIn"},
};

}  // namespace

std::string HarmonyLanguage::Surface(const std::string& stem, const std::string& suffix,
                                     bool front_override) {
  std::u32string out = text::ToCodePoints(stem);
  for (char32_t c : text::ToCodePoints(suffix)) {
    char32_t last = 0;
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      if (In(kBack, *it) || In(kFront, *it)) {
        last = *it;
        break;
      }
    }
    const bool front = front_override || In(kFront, last);
    const bool round = last == U'o' || last == U'u' || last == U'ö' || last == U'ü';
    if (c == U'A') {
      out += front ? U'e' : U'a';
    } else if (c == U'I') {
      out += front ? (round ? U'ü' : U'i') : (round ? U'u' : U'ı');
    } else if (c == U'd' && !out.empty() && In(kVoiceless, out.back())) {
      out += U't';
    } else {
      out += c;
    }
  }
  return text::FromCodePoints(out);
}

HarmonyLanguage::HarmonyLanguage(int form_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::u32string consonants = U"bcçfgğhjklmnprsştvyz";
  const std::u32string vowels = U"aeıioöuü";
  auto pick = [&](const std::u32string& s) { return s[rng() % s.size()]; };

  materials_.variety = Variety{1, "Harmony", "English", std::nullopt, {}};
  materials_.classes = {InflectionClass{1, 1, "noun", "N"}};
  ParadigmStructure noun{1, 1, "noun", {}};
  for (const Case& c : kCases) {
    noun.slots.push_back(Slot{FeatureSet::Parse(c.features), std::string("{stem1}") + c.suffix,
                              std::nullopt, 0});
  }
  materials_.structures = {noun};
  const char* const kCons = "[^aeıioöuüAI]*";
  const std::vector<std::pair<std::string, std::string>> rules = {
      {std::string("([aıou]") + kCons + ")A", "$1a"},
      {std::string("([aıou]") + kCons + ")A", "$1a"},  // second A in -lArdA
      {"A", "e"},
      {std::string("([aı]") + kCons + ")I", "$1ı"},
      {std::string("([ou]") + kCons + ")I", "$1u"},
      {std::string("([öü]") + kCons + ")I", "$1ü"},
      {"I", "i"},
      {"([çfhkpsşt])d", "$1t"},
  };
  for (size_t i = 0; i < rules.size(); ++i) {
    materials_.rules.push_back(MorphophonRule{static_cast<Id>(i + 1), 1, rules[i].first,
                                              rules[i].second, static_cast<int>(i + 1), std::nullopt});
  }

  std::set<std::string> seen;
  Id next = 1;
  while (static_cast<int>(gold_.size()) < form_count) {
    std::u32string s;
    const int syllables = 1 + static_cast<int>(rng() % 2);
    for (int k = 0; k < syllables; ++k) {
      s += pick(consonants);
      s += pick(vowels);
    }
    s += pick(consonants);
    const std::string stem = text::FromCodePoints(s);
    if (!seen.insert(stem).second) continue;
    char32_t last = 0;
    for (char32_t c : s) {
      if (In(kBack, c) || In(kFront, c)) last = c;
    }
    // Roughly one lemma in twenty is a back-vowel loan with front suffixes.
    const bool irregular = In(kBack, last) && rng() % 20 == 0;
    if (irregular) irregular_.insert(stem);

    Lemma l;
    l.id = next++;
    l.variety = 1;
    l.citation_form = stem;
    l.inflection_class = 1;
    l.stems = {stem};
    materials_.lemmas.push_back(l);
    for (const Case& c : kCases) {
      if (static_cast<int>(gold_.size()) == form_count) break;
      gold_.push_back({stem, Surface(stem, c.suffix, irregular), FeatureSet::Parse(c.features)});
    }
  }
}

Id StoreMaterials(Repository& repo, const Materials& m, const std::string& name) {
  Variety v = m.variety;
  v.id = 0;
  v.name = name;
  v.parent_variety.reset();
  Id variety = repo.Create(v);
  std::map<Id, Id> classes, layers;
  for (InflectionClass c : m.classes) {
    Id old = c.id;
    c.id = 0;
    c.variety = variety;
    classes[old] = repo.Create(c);
  }
  for (ReusableLayer l : m.layers) {
    Id old = l.id;
    l.id = 0;
    l.variety = variety;
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
    r.variety = variety;
    if (r.scope) r.scope = classes.at(*r.scope);
    repo.Create(r);
  }
  for (Lemma l : m.lemmas) {
    l.id = 0;
    l.variety = variety;
    l.inflection_class = classes.at(l.inflection_class);
    repo.Create(l);
  }
  for (QuestionTemplate q : m.questions) {
    q.id = 0;
    q.variety = variety;
    repo.Create(q);
  }
  return variety;
}

}  // namespace morph::synth
