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
#include <vector>

#include "morph/inflector.h"
#include "morph/seq2seq.h"

namespace {

std::vector<morph::TrainingExample> Examples(int n) {
  std::mt19937 rng(3);
  const char* cons = "ptkbdgmnslr";
  const char* vow = "aeiou";
  const char* suffix[] = {"", "di", "ra"};
  const char* tense[] = {"PRS", "PST", "FUT"};
  std::vector<morph::TrainingExample> out;
  for (int i = 0; i < n; ++i) {
    std::string stem;
    int len = static_cast<int>(rng() % 4 + 3);
    for (int k = 0; k < len; ++k) stem += (k % 2 == 0) ? cons[rng() % 11] : vow[rng() % 5];
    int t = static_cast<int>(rng() % 3);
    morph::Lemma lemma;
    lemma.citation_form = stem;
    lemma.stems = {stem};
    std::vector<std::string> tags = {"V", tense[t]};
    morph::TrainingExample ex;
    ex.input = morph::Encode(lemma, morph::FeatureSet::Canonicalize(tags));
    ex.target = morph::Characters(stem + suffix[t]);
    out.push_back(std::move(ex));
  }
  return out;
}

void BM_TrainEpoch(benchmark::State& state) {
  auto examples = Examples(64);
  morph::TrainConfig train;
  train.epochs = 1;
  morph::ModelConfig model;
  model.embedding = model.hidden = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(morph::Train(examples, train, model).loss_curve);
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainEpoch)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  auto examples = Examples(64);
  morph::TrainConfig train;
  train.epochs = 1;
  morph::InflectorModel model = morph::Train(examples, train).model;
  std::vector<morph::TokenSequence> inputs;
  for (const auto& ex : examples) inputs.push_back(ex.input);
  for (auto _ : state) benchmark::DoNotOptimize(model.PredictBatch(inputs));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_PredictBatch)->Unit(benchmark::kMillisecond);

void BM_LossAndGradient(benchmark::State& state) {
  morph::nn::Dims dims{30, 128, 128, 2};
  morph::nn::Seq2Seq<float> net(dims, 1, 2);
  std::vector<float> params(net.ParamCount()), grad(net.ParamCount());
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  for (float& p : params) p = u(rng);
  morph::nn::Batch batch;
  for (int b = 0; b < 8; ++b) {
    batch.source.push_back({4, 5, 6, 7, 8, 9, 10, 11});
    batch.target.push_back({12, 13, 14, 15, 16});
  }
  for (auto _ : state) benchmark::DoNotOptimize(net.Loss(params, batch, grad));
}
BENCHMARK(BM_LossAndGradient)->Unit(benchmark::kMillisecond);

}  // namespace
