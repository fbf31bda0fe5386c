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

#include "expect_error.h"
#include "morph/simulate.h"
#include "synthetic.h"

namespace morph {
namespace {

SimulationConfig Small(SelectionPolicy policy, std::uint64_t seed) {
  SimulationConfig c;
  c.policy = policy;
  c.seed = seed;
  c.budget = 60;
  c.round_size = 20;
  c.n_train = 20;
  c.delta_n = 20;
  c.eval_size = 10;
  c.train.epochs = 2;
  c.model = ModelConfig{16, 16, 1};
  return c;
}

TEST(Simulate, RulesAreExactOnRegularLanguage) {
  synth::SuffixationLanguage lang(6, 1);
  Materials m = lang.AsMaterials();
  auto gold = lang.All();
  SimulationResult r = Simulate(gold, &m, Small(SelectionPolicy::kRandom, 3));
  EXPECT_EQ(r.annotated, 60);
  int rule_cells = 0;
  for (const RoundRow& row : r.rows) {
    if (row.source == "RULE") {
      EXPECT_EQ(row.cer_percent, 0.0);
      rule_cells += row.n_cells;
    }
  }
  EXPECT_EQ(rule_cells, 60);
}

TEST(Simulate, DeterministicForSeed) {
  synth::SuffixationLanguage lang(6, 1);
  Materials m = lang.AsMaterials();
  auto gold = lang.All();
  for (SelectionPolicy p : {SelectionPolicy::kRandom, SelectionPolicy::kUncertaintyRanked,
                            SelectionPolicy::kPriorityOnly}) {
    SimulationResult a = Simulate(gold, &m, Small(p, 5));
    SimulationResult b = Simulate(gold, &m, Small(p, 5));
    EXPECT_EQ(a.rows, b.rows) << ToString(p);
  }
}

TEST(Simulate, RoundsAndTraining) {
  synth::SuffixationLanguage lang(6, 1);
  auto gold = lang.All();
  SimulationConfig c = Small(SelectionPolicy::kUncertaintyRanked, 2);
  c.budget = 70;
  SimulationResult r = Simulate(gold, nullptr, c);
  EXPECT_EQ(r.annotated, 70);
  // Retrains after rounds 1, 2, 3; the last partial round adds 10 < delta_n.
  EXPECT_EQ(r.training_runs, 3);
  int last_round = 0;
  for (const RoundRow& row : r.rows) {
    last_round = std::max(last_round, row.round);
    EXPECT_NE(row.source, "RULE");  // no materials
    if (row.source == "NEURAL_HELDOUT") EXPECT_EQ(row.n_cells, 10);
  }
  EXPECT_EQ(last_round, 4);
  EXPECT_GE(r.HeldOutCerAtBudget(), 0.0);
  EXPECT_EQ(r.rows.front().source, "NEURAL_HELDOUT");  // round 1 has no model yet
}

TEST(Simulate, BudgetLargerThanPool) {
  synth::SuffixationLanguage lang(2, 1);
  auto gold = lang.All();
  SimulationConfig c = Small(SelectionPolicy::kRandom, 1);
  c.budget = 1000;
  c.sources.neural = false;
  EXPECT_EQ(Simulate(gold, nullptr, c).annotated, 36 - 10);
  EXPECT_EQ(Simulate(gold, nullptr, c).HeldOutCerAtBudget(), -1.0);
}

TEST(Simulate, RulesWithoutRewritesDegrade) {
  synth::HarmonyLanguage lang(240, 4);
  SimulationConfig c = Small(SelectionPolicy::kRandom, 1);
  c.sources.neural = false;
  c.budget = 200;
  auto cer = [&](bool apply) {
    c.apply_rules = apply;
    SimulationResult r = Simulate(lang.gold(), &lang.materials(), c);
    double edits = 0, n = 0;
    for (const RoundRow& row : r.rows) {
      if (row.source == "RULE") {
        edits += row.cer_percent * row.n_cells;
        n += row.n_cells;
      }
    }
    return edits / n;
  };
  double with = cer(true), without = cer(false);
  EXPECT_LT(with, without);
  EXPECT_LT(with, 5.0);
}

TEST(Simulate, LlmRowsOnceExemplarsExist) {
  synth::SuffixationLanguage lang(8, 2);
  Materials m = lang.AsMaterials();
  auto gold = lang.All();
  SimulationConfig c = Small(SelectionPolicy::kRandom, 9);
  c.sources = {false, false, true};
  c.budget = 100;
  AnalogyMockProvider mock;
  SimulationResult r = Simulate(gold, &m, c, &mock);
  int llm_rounds = 0;
  for (const RoundRow& row : r.rows) {
    if (row.source == "LLM") {
      ++llm_rounds;
      EXPECT_GT(row.round, 1);
    }
  }
  EXPECT_GT(llm_rounds, 0);
}

TEST(Simulate, Errors) {
  std::vector<GoldItem> dup = {{"a", "b", FeatureSet::Parse("V;PST")}, {"a", "c", FeatureSet::Parse("V;PST")}};
  EXPECT_MORPH_ERROR(Simulate(dup, nullptr, Small(SelectionPolicy::kRandom, 1)), ErrorCode::kMalformedGold);
  EXPECT_MORPH_ERROR(ParseSelectionPolicy("greedy"), ErrorCode::kUsageError);
  EXPECT_EQ(ParseSelectionPolicy("uncertainty"), SelectionPolicy::kUncertaintyRanked);
  SimulationConfig zero = Small(SelectionPolicy::kRandom, 1);
  zero.round_size = 0;
  std::vector<GoldItem> one = {dup[0]};
  EXPECT_MORPH_ERROR(Simulate(one, nullptr, zero), ErrorCode::kUsageError);
}

TEST(Simulate, RoundTableFormat) {
  std::vector<RoundRow> rows = {{1, "RULE", 100, 4.0}, {1, "NEURAL", 100, 12.346}};
  EXPECT_EQ(RoundTableTsv(rows), "round\tsource\tn_cells\tcer_percent\n1\tRULE\t100\t4.00\n1\tNEURAL\t100\t12.35\n");
}

}  // namespace
}  // namespace morph
