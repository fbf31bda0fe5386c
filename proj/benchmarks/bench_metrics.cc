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

#include <random>
#include <string>
#include <vector>

#include "morph/metrics.h"

namespace {

std::string RandomWord(std::mt19937& rng, int len) {
  static const char* kAlphabet[] = {"a", "e", "i", "ş", "ç", "ğ", "ü", "k", "t", "r", "ê", "û"};
  std::string out;
  for (int i = 0; i < len; ++i) out += kAlphabet[rng() % 12];
  return out;
}

void BM_EditDistance(benchmark::State& state) {
  std::mt19937 rng(1);
  const int len = static_cast<int>(state.range(0));
  std::string a = RandomWord(rng, len), b = RandomWord(rng, len);
  for (auto _ : state) benchmark::DoNotOptimize(morph::EditDistance(a, b));
  state.SetComplexityN(len);
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

void BM_ComputeCer(benchmark::State& state) {
  std::mt19937 rng(2);
  std::vector<morph::HypRef> pairs;
  for (int i = 0; i < 1000; ++i) pairs.push_back({RandomWord(rng, 8), RandomWord(rng, 9)});
  for (auto _ : state) benchmark::DoNotOptimize(morph::ComputeCer(pairs).cer());
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ComputeCer);

}  // namespace
