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

#ifndef MORPH_SIMULATE_H_
#define MORPH_SIMULATE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"
#include "morph/inflector.h"
#include "morph/io_formats.h"
#include "morph/llm.h"

namespace morph {

enum class SelectionPolicy { kUncertaintyRanked, kRandom, kPriorityOnly };
std::string_view ToString(SelectionPolicy policy);
// Accepts "uncertainty", "random", "priority". Throws kUsageError.
SelectionPolicy ParseSelectionPolicy(std::string_view name);

struct SourceSet {
  bool rule = true;
  bool neural = true;
  bool llm = false;
};

struct SimulationConfig {
  SelectionPolicy policy = SelectionPolicy::kUncertaintyRanked;
  std::uint64_t seed = 0;
  int budget = 0;        // total annotations
  int round_size = 100;  // cells annotated per round
  SourceSet sources;
  bool apply_rules = true;  // false: patterns without rewrite rules
  int n_train = 100;
  int delta_n = 100;
  // Gold cells held out from annotation; the neural model's CER on them is
  // reported after every round as source NEURAL_HELDOUT.
  int eval_size = 0;
  TrainConfig train;
  ModelConfig model;
  LlmConfig llm;
};

struct RoundRow {
  int round = 0;
  std::string source;  // RULE, NEURAL, LLM, NEURAL_HELDOUT
  int n_cells = 0;     // cells the source produced a suggestion for
  double cer_percent = 0.0;

  friend bool operator==(const RoundRow&, const RoundRow&) = default;
};

struct SimulationResult {
  std::vector<RoundRow> rows;
  int annotated = 0;
  int training_runs = 0;

  // Last NEURAL_HELDOUT value, or -1 when the model never trained.
  double HeldOutCerAtBudget() const;
};

// Replays the elicitation loop against gold data with an infallible
// annotator. Each round selects cells by policy, scores every enabled
// source's suggestions for them against gold, marks them verified and
// retrains the neural source when thresholds are met. `materials` supplies
// patterns, rules, stems and priorities for lemmas it contains; `provider`
// backs the LLM source. Throws kMalformedGold for duplicate cells.
SimulationResult Simulate(std::span<const GoldItem> gold, const Materials* materials,
                          const SimulationConfig& config, CompletionProvider* provider = nullptr);

// Header "round\tsource\tn_cells\tcer_percent", two-decimal CER.
std::string RoundTableTsv(std::span<const RoundRow> rows);

}  // namespace morph

#endif  // MORPH_SIMULATE_H_
