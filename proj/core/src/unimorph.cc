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

#include "morph/unimorph.h"

#include <array>
#include <string>

#include "morph/error.h"

namespace morph::unimorph {
namespace {

struct Row {
  std::string_view tag;
  std::string_view dimension;
  std::string_view value;
};

constexpr std::string_view kPos = "Part-of-Speech";

// Subset of the UniMorph schema covering the dimensions used in paradigm
// work. Person values follow the "1st/2nd/3rd" register used in elicitation.
constexpr std::array kSchema = {
    Row{"N", kPos, "Noun"},
    Row{"PROPN", kPos, "Proper Noun"},
    Row{"ADJ", kPos, "Adjective"},
    Row{"PRO", kPos, "Pronoun"},
    Row{"CLF", kPos, "Classifier"},
    Row{"ART", kPos, "Article"},
    Row{"DET", kPos, "Determiner"},
    Row{"V", kPos, "Verb"},
    Row{"ADV", kPos, "Adverb"},
    Row{"AUX", kPos, "Auxiliary"},
    Row{"V.PTCP", kPos, "Participle"},
    Row{"V.MSDR", kPos, "Masdar"},
    Row{"V.CVB", kPos, "Converb"},
    Row{"ADP", kPos, "Adposition"},
    Row{"COMP", kPos, "Complementizer"},
    Row{"CONJ", kPos, "Conjunction"},
    Row{"NUM", kPos, "Numeral"},
    Row{"PART", kPos, "Particle"},
    Row{"INTJ", kPos, "Interjection"},

    Row{"PRS", "Tense", "Present"},
    Row{"PST", "Tense", "Past"},
    Row{"FUT", "Tense", "Future"},
    Row{"IMMED", "Tense", "Immediate"},
    Row{"HOD", "Tense", "Hodiernal"},
    Row{"1DAY", "Tense", "Within One Day"},
    Row{"RCT", "Tense", "Recent"},
    Row{"RMT", "Tense", "Remote"},

    Row{"IPFV", "Aspect", "Imperfective"},
    Row{"PFV", "Aspect", "Perfective"},
    Row{"PRF", "Aspect", "Perfect"},
    Row{"PROG", "Aspect", "Progressive"},
    Row{"PROSP", "Aspect", "Prospective"},
    Row{"ITER", "Aspect", "Iterative"},
    Row{"HAB", "Aspect", "Habitual"},

    Row{"IND", "Mood", "Indicative"},
    Row{"SBJV", "Mood", "Subjunctive"},
    Row{"IMP", "Mood", "Imperative"},
    Row{"COND", "Mood", "Conditional"},
    Row{"OPT", "Mood", "Optative"},
    Row{"POT", "Mood", "Potential"},
    Row{"PURP", "Mood", "Purposive"},
    Row{"REAL", "Mood", "Realis"},
    Row{"IRR", "Mood", "Irrealis"},
    Row{"JUS", "Mood", "Jussive"},
    Row{"ADM", "Mood", "Admirative"},
    Row{"OBLIG", "Mood", "Obligative"},
    Row{"DEB", "Mood", "Debitive"},
    Row{"PERM", "Mood", "Permissive"},
    Row{"DED", "Mood", "Deductive"},
    Row{"SIM", "Mood", "Simulative"},
    Row{"LKLY", "Mood", "Likely"},

    Row{"SG", "Number", "Singular"},
    Row{"PL", "Number", "Plural"},
    Row{"DU", "Number", "Dual"},
    Row{"TRI", "Number", "Trial"},
    Row{"PAUC", "Number", "Paucal"},
    Row{"GRPL", "Number", "Greater Plural"},
    Row{"GRPAUC", "Number", "Greater Paucal"},
    Row{"INVN", "Number", "Inverse"},

    Row{"0", "Person", "Zero"},
    Row{"1", "Person", "1st"},
    Row{"2", "Person", "2nd"},
    Row{"3", "Person", "3rd"},
    Row{"4", "Person", "4th"},
    Row{"INCL", "Person", "Inclusive"},
    Row{"EXCL", "Person", "Exclusive"},
    Row{"PRX", "Person", "Proximate"},
    Row{"OBV", "Person", "Obviative"},

    Row{"MASC", "Gender", "Masculine"},
    Row{"FEM", "Gender", "Feminine"},
    Row{"NEUT", "Gender", "Neuter"},

    Row{"NOM", "Case", "Nominative"},
    Row{"ACC", "Case", "Accusative"},
    Row{"ERG", "Case", "Ergative"},
    Row{"ABS", "Case", "Absolutive"},
    Row{"NOMS", "Case", "Nominative, S-only"},
    Row{"DAT", "Case", "Dative"},
    Row{"BEN", "Case", "Benefactive"},
    Row{"PRP", "Case", "Purposive"},
    Row{"GEN", "Case", "Genitive"},
    Row{"REL", "Case", "Relative"},
    Row{"PRT", "Case", "Partitive"},
    Row{"INS", "Case", "Instrumental"},
    Row{"COM", "Case", "Comitative"},
    Row{"VOC", "Case", "Vocative"},
    Row{"COMPV", "Case", "Comparative"},
    Row{"EQTV", "Case", "Equative"},
    Row{"PRIV", "Case", "Privative"},
    Row{"PROPR", "Case", "Proprietive"},
    Row{"AVR", "Case", "Aversive"},
    Row{"FRML", "Case", "Formal"},
    Row{"TRANS", "Case", "Translative"},
    Row{"BYWAY", "Case", "By Way Of"},
    Row{"INTER", "Case", "Inter"},
    Row{"AT", "Case", "At"},
    Row{"POST", "Case", "Post"},
    Row{"IN", "Case", "In"},
    Row{"CIRC", "Case", "Circum"},
    Row{"ANTE", "Case", "Ante"},
    Row{"APUD", "Case", "Apud"},
    Row{"ON", "Case", "On"},
    Row{"ONHR", "Case", "On, Horizontal"},
    Row{"ONVR", "Case", "On, Vertical"},
    Row{"SUB", "Case", "Sub"},
    Row{"REM", "Case", "Remote"},
    Row{"PROXM", "Case", "Proximate"},
    Row{"ESS", "Case", "Essive"},
    Row{"ALL", "Case", "Allative"},
    Row{"ABL", "Case", "Ablative"},
    Row{"APPRX", "Case", "Approximative"},
    Row{"TERM", "Case", "Terminative"},
    Row{"LOC", "Case", "Locative"},

    Row{"ACT", "Voice", "Active"},
    Row{"MID", "Voice", "Middle"},
    Row{"PASS", "Voice", "Passive"},
    Row{"ANTIP", "Voice", "Antipassive"},
    Row{"DIR", "Voice", "Direct"},
    Row{"INV", "Voice", "Inverse"},
    Row{"AGFOC", "Voice", "Agent Focus"},
    Row{"PFOC", "Voice", "Patient Focus"},
    Row{"LFOC", "Voice", "Location Focus"},
    Row{"BFOC", "Voice", "Beneficiary Focus"},
    Row{"ACFOC", "Voice", "Accompanier Focus"},
    Row{"IFOC", "Voice", "Instrument Focus"},
    Row{"CFOC", "Voice", "Conveyed Focus"},

    Row{"FIN", "Finiteness", "Finite"},
    Row{"NFIN", "Finiteness", "Non-finite"},

    Row{"DEF", "Definiteness", "Definite"},
    Row{"INDF", "Definiteness", "Indefinite"},
    Row{"SPEC", "Definiteness", "Specific"},
    Row{"NSPEC", "Definiteness", "Non-specific"},

    Row{"POS", "Polarity", "Positive"},
    Row{"NEG", "Polarity", "Negative"},

    Row{"CMPR", "Comparison", "Comparative"},
    Row{"SPRL", "Comparison", "Superlative"},
    Row{"AB", "Comparison", "Absolute"},
    Row{"RL", "Comparison", "Relative"},
    Row{"EQT", "Comparison", "Equative"},

    Row{"INFM", "Politeness", "Informal"},
    Row{"FORM", "Politeness", "Formal"},
    Row{"POL", "Politeness", "Polite"},
    Row{"ELEV", "Politeness", "Elevated"},
    Row{"HUMB", "Politeness", "Humble"},

    Row{"ANIM", "Animacy", "Animate"},
    Row{"INAN", "Animacy", "Inanimate"},
    Row{"HUM", "Animacy", "Human"},
    Row{"NHUM", "Animacy", "Non-human"},

    Row{"FH", "Evidentiality", "Firsthand"},
    Row{"NFH", "Evidentiality", "Non-firsthand"},
    Row{"QUOT", "Evidentiality", "Quotative"},
    Row{"RPRT", "Evidentiality", "Reported"},
    Row{"HRSY", "Evidentiality", "Hearsay"},
    Row{"SEN", "Evidentiality", "Sensory"},
    Row{"EVID", "Evidentiality", "Evidential"},

    Row{"DECL", "Interrogativity", "Declarative"},
    Row{"INT", "Interrogativity", "Interrogative"},

    Row{"IMPRS", "Valency", "Impersonal"},
    Row{"INTR", "Valency", "Intransitive"},
    Row{"TR", "Valency", "Transitive"},
    Row{"DITR", "Valency", "Ditransitive"},
    Row{"REFL", "Valency", "Reflexive"},
    Row{"RECP", "Valency", "Reciprocal"},
    Row{"CAUS", "Valency", "Causative"},
    Row{"APPL", "Valency", "Applicative"},

    Row{"ALN", "Possession", "Alienable"},
    Row{"NALN", "Possession", "Inalienable"},
    Row{"PSSD", "Possession", "Possessed"},

    Row{"SS", "Switch-Reference", "Same Subject"},
    Row{"DS", "Switch-Reference", "Different Subject"},

    Row{"PROX", "Deixis", "Proximate"},
    Row{"MED", "Deixis", "Medial"},
    Row{"REMT", "Deixis", "Remote"},
    Row{"VIS", "Deixis", "Visible"},
    Row{"NVIS", "Deixis", "Invisible"},
    Row{"ABV", "Deixis", "Above"},
    Row{"BEL", "Deixis", "Below"},
    Row{"EVEN", "Deixis", "Even"},

    Row{"TOP", "Information Structure", "Topic"},
    Row{"FOC", "Information Structure", "Focus"},

    Row{"STAT", "Aktionsart", "Stative"},
    Row{"DYN", "Aktionsart", "Dynamic"},
    Row{"TEL", "Aktionsart", "Telic"},
    Row{"ATEL", "Aktionsart", "Atelic"},
    Row{"PCT", "Aktionsart", "Punctual"},
    Row{"DUR", "Aktionsart", "Durative"},
    Row{"ACCMP", "Aktionsart", "Accomplishment"},
    Row{"ACH", "Aktionsart", "Achievement"},
    Row{"SEMEL", "Aktionsart", "Semelfactive"},
    Row{"ACTY", "Aktionsart", "Activity"},
};

}  // namespace

bool IsPosTag(std::string_view tag) {
  auto info = Lookup(tag);
  return info && info->dimension == kPos;
}

std::optional<TagInfo> Lookup(std::string_view tag) {
  for (const Row& row : kSchema) {
    if (row.tag == tag) return TagInfo{row.dimension, row.value};
  }
  if (tag.size() > 6 && tag.substr(0, 6) == "LGSPEC") {
    return TagInfo{"Language-Specific", tag};
  }
  return std::nullopt;
}

std::string Verbose(std::string_view tag) {
  auto info = Lookup(tag);
  if (!info) {
    throw Error(ErrorCode::kUnknownTag,
                "tag not in UniMorph table: " + std::string(tag));
  }
  return std::string(info->dimension) + "=" + std::string(info->value);
}

}  // namespace morph::unimorph
