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

#include <benchmark/benchmark.h>

#include <vector>

#include "morph/pattern.h"

namespace {

// Vowel-harmony cascade of the kind a linguist writes for Turkish nouns.
std::vector<morph::MorphophonRule> HarmonyRules() {
  const std::string c = "[^aeıioöuüAI]*";
  std::vector<std::pair<std::string, std::string>> rr = {
      {"([aıou]" + c + ")A", "$1a"}, {"([aıou]" + c + ")A", "$1a"}, {"A", "e"},
      {"([aı]" + c + ")I", "$1ı"},   {"([ou]" + c + ")I", "$1u"},   {"([öü]" + c + ")I", "$1ü"},
      {"I", "i"},                    {"([çfhkpsşt])d", "$1t"}};
  std::vector<morph::MorphophonRule> rules;
  for (size_t i = 0; i < rr.size(); ++i) {
    rules.push_back({static_cast<morph::Id>(i + 1), 1, rr[i].first, rr[i].second, static_cast<int>(i), {}});
  }
  return rules;
}

void BM_RewriteCascade(benchmark::State& state) {
  auto rules = HarmonyRules();
  morph::RewriteCascade cascade(rules);
  for (auto _ : state) benchmark::DoNotOptimize(cascade.Apply("kitaplArdAn"));
}
BENCHMARK(BM_RewriteCascade);

void BM_RenderTemplate(benchmark::State& state) {
  morph::PatternTemplate tpl = morph::ParseTemplate("de{stem2}{layer}");
  morph::Lemma lemma;
  lemma.citation_form = "hênan";
  lemma.stems = {"hêna", "hên"};
  morph::ReusableMorpheme m{"im", morph::TagBundle::Parse("1;SG")};
  for (auto _ : state) benchmark::DoNotOptimize(morph::Render(tpl, lemma, &m));
}
BENCHMARK(BM_RenderTemplate);

}  // namespace
