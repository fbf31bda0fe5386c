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

#include <gtest/gtest.h>

#include <algorithm>

#include "expect_error.h"
#include "morph/ensemble.h"

namespace morph {
namespace {

std::vector<std::string> Labels(const PresentationOption& o) {
  std::vector<std::string> out;
  for (Source s : o.sources) out.emplace_back(SourceLabel(s));
  return out;
}

TEST(Aggregate, Unanimous) {
  std::vector<Suggestion> s = {{"geliyor", Source::kRule, {}},
                               {"geliyor", Source::kNeural, 0.8},
                               {"geliyor", Source::kLlm, {}}};
  Presentation p = Aggregate(s);
  EXPECT_TRUE(p.unanimous);
  EXPECT_EQ(p.confidence(), "High");
  ASSERT_EQ(p.options.size(), 1u);
  EXPECT_EQ(p.options[0].form, "geliyor");
  EXPECT_EQ(Labels(p.options[0]), (std::vector<std::string>{"RULE", "NEURAL", "LLM"}));
}

TEST(Aggregate, ChoiceOrderedByAgreement) {
  std::vector<Suggestion> s = {{"gelyor", Source::kRule, {}},
                               {"geliyor", Source::kNeural, 0.4},
                               {"geliyor", Source::kLlm, {}}};
  Presentation p = Aggregate(s);
  EXPECT_FALSE(p.unanimous);
  ASSERT_EQ(p.options.size(), 2u);
  EXPECT_EQ(p.options[0].form, "geliyor");
  EXPECT_EQ(Labels(p.options[0]), (std::vector<std::string>{"NEURAL", "LLM"}));
  EXPECT_EQ(p.options[1].form, "gelyor");
  EXPECT_EQ(Labels(p.options[1]), std::vector<std::string>{"RULE"});
}

TEST(Aggregate, EmptyMeansManual) {
  Presentation p = Aggregate({});
  EXPECT_FALSE(p.unanimous);
  EXPECT_TRUE(p.options.empty());
  EXPECT_TRUE(TagSources(p).empty());
}

TEST(Aggregate, RuleWinsSingleSourceTie) {
  std::vector<Suggestion> s = {{"b", Source::kLlm, {}}, {"a", Source::kRule, {}}};
  Presentation p = Aggregate(s);
  EXPECT_EQ(p.options[0].form, "a");
}

TEST(Aggregate, NeuralConfidenceBreaksTies) {
  // Two single-source options; the neural one outranks LLM regardless.
  std::vector<Suggestion> s = {{"x", Source::kLlm, {}}, {"y", Source::kNeural, 0.1}};
  EXPECT_EQ(Aggregate(s).options[0].form, "y");
}

TEST(Aggregate, NormalizesBeforeComparing) {
  // Precomposed ê versus e + combining circumflex, plus padding.
  std::vector<Suggestion> s = {{"dehênim", Source::kRule, {}}, {" dehênim ", Source::kLlm, {}}};
  Presentation p = Aggregate(s);
  EXPECT_TRUE(p.unanimous);
  EXPECT_EQ(p.options[0].form, "dehênim");
}

TEST(Aggregate, DuplicateSource) {
  std::vector<Suggestion> s = {{"a", Source::kRule, {}}, {"b", Source::kRule, {}}};
  EXPECT_MORPH_ERROR(Aggregate(s), ErrorCode::kDuplicateSource);
}

TEST(Aggregate, PermutationInvariant) {
  std::vector<Suggestion> s = {{"a", Source::kRule, {}}, {"b", Source::kNeural, 0.5}, {"c", Source::kLlm, {}}};
  Presentation first = Aggregate(s);
  std::sort(s.begin(), s.end(), [](const auto& x, const auto& y) { return x.form < y.form; });
  do {
    Presentation p = Aggregate(s);
    ASSERT_EQ(p.options.size(), first.options.size());
    for (size_t i = 0; i < p.options.size(); ++i) {
      EXPECT_EQ(p.options[i].form, first.options[i].form);
      EXPECT_EQ(p.options[i].sources, first.options[i].sources);
    }
  } while (std::next_permutation(s.begin(), s.end(), [](const auto& x, const auto& y) { return x.form < y.form; }));
}

TEST(TagSources, RecordsCoverInputs) {
  std::vector<Suggestion> s = {{"a", Source::kRule, {}}, {"b", Source::kNeural, 0.5}, {"a", Source::kLlm, {}}};
  auto records = TagSources(Aggregate(s));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].form, "a");
  EXPECT_EQ(records[0].labels, (std::vector<std::string>{"RULE", "LLM"}));
  EXPECT_EQ(records[1].labels, std::vector<std::string>{"NEURAL"});
}

}  // namespace
}  // namespace morph
