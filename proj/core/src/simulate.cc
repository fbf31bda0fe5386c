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

#include "morph/simulate.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "morph/error.h"
#include "morph/metrics.h"
#include "morph/pattern.h"

namespace morph {
namespace {

struct Cell {
  const GoldItem* gold = nullptr;
  const Lemma* lemma = nullptr;
  std::optional<std::string> rule_form;
  int priority = 0;
  WordformEntry entry;  // verified copy once annotated
};

// Uniform index in [0, n) from the top bits of a 64-bit draw; identical on
// every standard library.
size_t Draw(std::mt19937_64& rng, size_t n) {
  return static_cast<size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

void Shuffle(std::vector<size_t>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Draw(rng, i)]);
}

RoundRow Score(int round, std::string source, const std::vector<HypRef>& pairs) {
  CerReport r = ComputeCer(pairs);
  return RoundRow{round, std::move(source), static_cast<int>(pairs.size()), r.percent()};
}

}  // namespace

std::string_view ToString(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::kUncertaintyRanked: return "uncertainty";
    case SelectionPolicy::kRandom: return "random";
    case SelectionPolicy::kPriorityOnly: return "priority";
  }
  return "?";
}

SelectionPolicy ParseSelectionPolicy(std::string_view name) {
  for (SelectionPolicy p : {SelectionPolicy::kUncertaintyRanked, SelectionPolicy::kRandom,
                            SelectionPolicy::kPriorityOnly}) {
    if (ToString(p) == name) return p;
  }
  throw Error(ErrorCode::kUsageError, "unknown policy " + std::string(name), "policy");
}

double SimulationResult::HeldOutCerAtBudget() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->source == "NEURAL_HELDOUT") return it->cer_percent;
  }
  return -1.0;
}

SimulationResult Simulate(std::span<const GoldItem> gold, const Materials* materials,
                          const SimulationConfig& config, CompletionProvider* provider) {
  SimulationResult result;
  {
    std::set<std::pair<std::string, std::string>> seen;
    for (size_t i = 0; i < gold.size(); ++i) {
      if (!seen.insert({gold[i].lemma, gold[i].features.str()}).second) {
        throw Error(ErrorCode::kMalformedGold,
                    "duplicate cell " + gold[i].lemma + " " + gold[i].features.str(),
                    "line " + std::to_string(i + 1));
      }
    }
  }
  if (config.budget <= 0 || gold.empty()) return result;
  if (config.round_size <= 0) throw Error(ErrorCode::kUsageError, "round size must be positive", "round_size");

  // Lemmas: authored ones where available, bare citation forms otherwise.
  std::map<std::string, Lemma> lemmas;
  if (materials) {
    for (const Lemma& l : materials->lemmas) lemmas[l.citation_form] = l;
  }
  Id next_id = 1'000'000;
  for (const GoldItem& g : gold) {
    if (!lemmas.count(g.lemma)) {
      Lemma l;
      l.id = next_id++;
      l.citation_form = g.lemma;
      lemmas[g.lemma] = l;
    }
  }

  // Rule suggestions for every (lemma, features) the materials can render.
  std::map<std::pair<std::string, std::string>, std::pair<std::string, int>> rendered;
  if (materials) {
    for (const ParadigmStructure& s : materials->structures) {
      std::vector<MorphophonRule> rules;
      if (config.apply_rules) rules = RulesFor(materials->rules, s.inflection_class);
      RewriteCascade cascade(rules);
      for (const Lemma& l : materials->lemmas) {
        if (l.inflection_class != s.inflection_class) continue;
        for (const WordformEntry& e : ExpandParadigm(l, s, materials->layers, cascade)) {
          rendered[{l.citation_form, e.features.str()}] = {e.form.value_or(""),
                                                           std::max(l.priority, e.slot_priority)};
        }
      }
    }
  }

  std::vector<Cell> cells(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) {
    Cell& c = cells[i];
    c.gold = &gold[i];
    c.lemma = &lemmas.at(gold[i].lemma);
    c.priority = c.lemma->priority;
    auto it = rendered.find({gold[i].lemma, gold[i].features.str()});
    if (it != rendered.end()) {
      if (!it->second.first.empty()) c.rule_form = it->second.first;
      c.priority = it->second.second;
    }
    c.entry.id = static_cast<Id>(i + 1);
    c.entry.lemma = c.lemma->id;
    c.entry.features = gold[i].features;
  }

  std::mt19937_64 split_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 select_rng(config.seed);
  std::vector<size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<size_t> held_out;
  if (config.eval_size > 0) {
    std::vector<size_t> shuffled = order;
    Shuffle(shuffled, split_rng);
    const size_t n = std::min<size_t>(static_cast<size_t>(config.eval_size), shuffled.size());
    held_out.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(held_out.begin(), held_out.end());
  }
  std::vector<size_t> pool;
  {
    std::set<size_t> excluded(held_out.begin(), held_out.end());
    for (size_t i : order) {
      if (!excluded.count(i)) pool.push_back(i);
    }
  }

  std::unique_ptr<LlmSuggester> llm;
  if (config.sources.llm && provider) {
    llm = std::make_unique<LlmSuggester>(
        std::shared_ptr<CompletionProvider>(provider, [](CompletionProvider*) {}), config.llm);
  }
  Variety variety;
  variety.name = materials ? materials->variety.name : std::string("YYY");

  std::vector<size_t> annotated;
  std::shared_ptr<InflectorModel> model;
  int trained_on = 0;
  auto retrain = [&] {
    std::vector<TrainingExample> examples;
    for (size_t i : annotated) examples.push_back(MakeExample(*cells[i].lemma, cells[i].entry));
    TrainConfig train = config.train;
    train.seed = config.seed;
    model = std::make_shared<InflectorModel>(Train(examples, train, config.model).model);
    trained_on = static_cast<int>(annotated.size());
    ++result.training_runs;
  };

  for (int round = 1; result.annotated < config.budget && !pool.empty(); ++round) {
    const size_t n = std::min<size_t>(static_cast<size_t>(config.round_size),
                                      std::min<size_t>(static_cast<size_t>(config.budget - result.annotated),
                                                       pool.size()));
    std::vector<Prediction> pool_predictions;
    if (model) {
      std::vector<TokenSequence> inputs;
      for (size_t i : pool) inputs.push_back(Encode(*cells[i].lemma, cells[i].gold->features));
      pool_predictions = model->PredictBatch(inputs);
    }

    // Positions within `pool` chosen this round.
    std::vector<size_t> picks;
    const bool ranked = config.policy == SelectionPolicy::kUncertaintyRanked && model;
    if (config.policy == SelectionPolicy::kPriorityOnly) {
      std::vector<size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return cells[pool[a]].priority > cells[pool[b]].priority;
      });
      picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    } else if (ranked) {
      std::vector<size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return pool_predictions[a].uncertainty > pool_predictions[b].uncertainty;
      });
      picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
      // Random, and the cold-start fallback of the uncertainty policy.
      std::vector<size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      Shuffle(idx, select_rng);
      picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    }

    // Fresh suggestions for the selected cells, before annotation.
    std::vector<HypRef> rule_pairs, neural_pairs, llm_pairs;
    std::vector<VerifiedCell> verified_pool;
    if (llm) {
      for (size_t i : annotated) verified_pool.push_back({&cells[i].entry, cells[i].lemma});
    }
    for (size_t p : picks) {
      const Cell& c = cells[pool[p]];
      if (config.sources.rule && c.rule_form) rule_pairs.push_back({*c.rule_form, c.gold->form});
      if (config.sources.neural && model) neural_pairs.push_back({pool_predictions[p].form, c.gold->form});
      if (llm) {
        if (auto prompt = llm->PromptFor(variety, *c.lemma, c.entry, verified_pool)) {
          if (auto answer = llm->Suggest(*prompt)) llm_pairs.push_back({*answer, c.gold->form});
        }
      }
    }
    if (!rule_pairs.empty()) result.rows.push_back(Score(round, "RULE", rule_pairs));
    if (!neural_pairs.empty()) result.rows.push_back(Score(round, "NEURAL", neural_pairs));
    if (!llm_pairs.empty()) result.rows.push_back(Score(round, "LLM", llm_pairs));

    // The annotator supplies the gold form.
    std::vector<bool> taken(pool.size(), false);
    for (size_t p : picks) {
      taken[p] = true;
      Cell& c = cells[pool[p]];
      c.entry.form = c.gold->form;
      c.entry.status = EntryStatus::kVerified;
      c.entry.source = Source::kHuman;
      c.entry.verified_at_ms = round;
      annotated.push_back(pool[p]);
    }
    std::vector<size_t> rest;
    for (size_t p = 0; p < pool.size(); ++p) {
      if (!taken[p]) rest.push_back(pool[p]);
    }
    pool.swap(rest);
    result.annotated += static_cast<int>(n);

    const int count = static_cast<int>(annotated.size());
    if (config.sources.neural && count >= config.n_train && count >= 2 &&
        (!model || count - trained_on >= config.delta_n)) {
      retrain();
    }
    if (model && !held_out.empty()) {
      std::vector<TokenSequence> inputs;
      for (size_t i : held_out) inputs.push_back(Encode(*cells[i].lemma, cells[i].gold->features));
      std::vector<Prediction> preds = model->PredictBatch(inputs);
      std::vector<HypRef> pairs;
      for (size_t j = 0; j < held_out.size(); ++j) pairs.push_back({preds[j].form, cells[held_out[j]].gold->form});
      result.rows.push_back(Score(round, "NEURAL_HELDOUT", pairs));
    }
  }
  return result;
}

std::string RoundTableTsv(std::span<const RoundRow> rows) {
  std::string out = "round\tsource\tn_cells\tcer_percent\n";
  for (const RoundRow& r : rows) {
    out += std::to_string(r.round) + "\t" + r.source + "\t" + std::to_string(r.n_cells) + "\t" +
           FormatPercent(r.cer_percent) + "\n";
  }
  return out;
}

}  // namespace morph
