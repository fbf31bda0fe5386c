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

#include <cmath>
#include <random>
#include <sstream>

#include "expect_error.h"
#include "gradcheck.h"
#include "morph/inflector.h"
#include "synthetic.h"

namespace morph {
namespace {

Lemma Single(std::string stem) {
  Lemma l;
  l.citation_form = stem;
  l.stems = {stem};
  return l;
}

TEST(Encode, TagsSeparatorPaddedStem) {
  TokenSequence seq = Encode(Single("walk"), FeatureSet::Parse("V;PST"));
  ASSERT_EQ(seq.size(), 2u + 1u + 20u);
  EXPECT_EQ(seq[0], Token::Tag("V"));
  EXPECT_EQ(seq[1], Token::Tag("PST"));
  EXPECT_EQ(seq[2], Token::Sep());
  EXPECT_EQ(seq[3], Token::Char("w"));
  EXPECT_EQ(seq[6], Token::Char("k"));
  for (size_t i = 7; i < seq.size(); ++i) EXPECT_EQ(seq[i], Token::Pad());
}

TEST(Encode, TruncatesLongStem) {
  std::string stem(25, 'a');
  TokenSequence seq = Encode(Single(stem), FeatureSet::Parse("V;PST"));
  EXPECT_EQ(seq.size(), 2u + 1u + 20u);
  EXPECT_EQ(seq.back(), Token::Char("a"));
}

TEST(Encode, TwoStems) {
  Lemma l;
  l.citation_form = "girtin";
  l.stems = {"girt", "gir"};
  TokenSequence seq = Encode(l, FeatureSet::Parse("V;PRS;1;SG"));
  ASSERT_EQ(seq.size(), 4u + 1u + 20u + 1u + 20u);
  EXPECT_EQ(seq[4], Token::Sep());
  EXPECT_EQ(seq[25], Token::Sep2());
  EXPECT_EQ(seq[26], Token::Char("g"));
  EXPECT_EQ(seq[28], Token::Char("r"));
}

TEST(Encode, CitationFormWhenNoStems) {
  Lemma l;
  l.citation_form = "ê";
  TokenSequence seq = Encode(l, FeatureSet::Parse("N;SG"));
  EXPECT_EQ(seq[3], Token::Char("ê"));
}

TEST(MakeExample, OnlyVerified) {
  WordformEntry e;
  e.features = FeatureSet::Parse("V;PST");
  e.form = "walked";
  e.status = EntryStatus::kSubmitted;
  EXPECT_MORPH_ERROR(MakeExample(Single("walk"), e), ErrorCode::kInvalidState);
  e.status = EntryStatus::kVerified;
  EXPECT_EQ(MakeExample(Single("walk"), e).target.size(), 6u);
}

TEST(Gradients, MatchFiniteDifferences) {
  synth::GradCheckResult r = synth::CheckGradients(1);
  EXPECT_GT(r.parameters, 300);
  EXPECT_EQ(r.within_tolerance, r.parameters) << "max relative error " << r.max_relative_error;
}

std::vector<TrainingExample> Suffixation(int lemmas, int n, std::uint64_t seed) {
  synth::SuffixationLanguage lang(lemmas, seed);
  std::mt19937_64 rng(seed);
  std::set<std::pair<int, int>> used;
  std::vector<TrainingExample> out;
  for (const GoldItem& g : lang.Draw(n, rng, used)) {
    out.push_back({Encode(lang.LemmaOf(g.lemma), g.features), Characters(g.form)});
  }
  return out;
}

TEST(Train, InsufficientData) {
  auto one = Suffixation(5, 1, 1);
  EXPECT_MORPH_ERROR(Train(one), ErrorCode::kInsufficientData);
}

TEST(Train, DeterministicAndLossFalls) {
  auto data = Suffixation(10, 60, 2);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 9;
  ModelConfig small{16, 16, 2};
  TrainResult a = Train(data, cfg, small);
  TrainResult b = Train(data, cfg, small);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.loss_curve.size(), 4u);
  for (double l : a.loss_curve) EXPECT_TRUE(std::isfinite(l));
  EXPECT_LT(a.loss_curve.back(), a.loss_curve.front());
  cfg.seed = 10;
  EXPECT_NE(Train(data, cfg, small).model, a.model);
}

TEST(Predict, UntrainedModel) {
  InflectorModel empty;
  EXPECT_MORPH_ERROR(empty.Predict(Single("abc"), FeatureSet::Parse("V;PST")), ErrorCode::kUntrainedModel);
  std::vector<InflectionCandidate> none;
  EXPECT_MORPH_ERROR(RankByUncertainty(empty, none), ErrorCode::kUntrainedModel);
}

// Copy task: the form equals the stem. The model must learn it to at least
// 95% exact match on unseen stems before the "abc" expectation means much.
TEST(Predict, CopyModel) {
  std::mt19937_64 rng(4);
  const std::string alphabet = "abcdefgh";
  auto word = [&] {
    std::string w;
    int len = static_cast<int>(rng() % 3) + 3;
    for (int i = 0; i < len; ++i) w += alphabet[rng() % alphabet.size()];
    return w;
  };
  FeatureSet fs = FeatureSet::Parse("V;NFIN");
  std::vector<TrainingExample> train;
  for (int i = 0; i < 600; ++i) {
    std::string w = word();
    if (w == "abc") continue;
    train.push_back({Encode(Single(w), fs), Characters(w)});
  }
  TrainConfig cfg;
  cfg.seed = 3;
  InflectorModel model = Train(train, cfg).model;
  int correct = 0;
  for (int i = 0; i < 100; ++i) {
    std::string w = word();
    correct += model.Predict(Single(w), fs).form == w;
  }
  ASSERT_GE(correct, 95);
  Prediction p = model.Predict(Single("abc"), fs);
  EXPECT_EQ(p.form, "abc");
  EXPECT_GE(p.uncertainty, 0.0);
  EXPECT_LE(p.uncertainty, 1.0);
}

struct SmallModel : ::testing::Test {
  static InflectorModel* model;
  static void SetUpTestSuite() {
    TrainConfig cfg;
    cfg.epochs = 3;
    model = new InflectorModel(Train(Suffixation(10, 80, 5), cfg, ModelConfig{16, 16, 2}).model);
  }
  static void TearDownTestSuite() { delete model; }
};
InflectorModel* SmallModel::model = nullptr;

TEST_F(SmallModel, UncertaintyInRangeAndPure) {
  synth::SuffixationLanguage lang(10, 5);
  for (int c = 0; c < synth::SuffixationLanguage::kCells; ++c) {
    Lemma l = lang.LemmaOf(lang.stems()[0]);
    Prediction a = model->Predict(l, lang.Features(c));
    Prediction b = model->Predict(l, lang.Features(c));
    EXPECT_EQ(a.form, b.form);
    EXPECT_EQ(a.uncertainty, b.uncertainty);
    EXPECT_GE(a.uncertainty, 0.0);
    EXPECT_LE(a.uncertainty, 1.0);
  }
}

TEST_F(SmallModel, BatchMatchesSingle) {
  synth::SuffixationLanguage lang(10, 5);
  std::vector<TokenSequence> inputs;
  std::vector<Prediction> singles;
  for (int c = 0; c < 6; ++c) {
    Lemma l = lang.LemmaOf(lang.stems()[c % 3]);
    inputs.push_back(Encode(l, lang.Features(c)));
    singles.push_back(model->Predict(l, lang.Features(c)));
  }
  auto batch = model->PredictBatch(inputs);
  for (size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(batch[i].form, singles[i].form);
    EXPECT_NEAR(batch[i].uncertainty, singles[i].uncertainty, 1e-5);
  }
}

TEST_F(SmallModel, SaveLoadRoundTrip) {
  std::stringstream buf;
  model->Save(buf);
  EXPECT_EQ(buf.str().substr(0, 4), "CMNN");
  InflectorModel back = InflectorModel::Load(buf);
  EXPECT_EQ(back, *model);
  std::stringstream bad("XXXX");
  EXPECT_MORPH_ERROR(InflectorModel::Load(bad), ErrorCode::kModelFormat);
}

TEST_F(SmallModel, RankingOrder) {
  synth::SuffixationLanguage lang(10, 5);
  std::vector<Lemma> lemmas;
  for (int i = 0; i < 10; ++i) lemmas.push_back(lang.LemmaOf(lang.stems()[i]));
  std::vector<InflectionCandidate> cands;
  for (int i = 0; i < 10; ++i) {
    cands.push_back({100 - i, &lemmas[i], lang.Features(i)});
    // Same input twice: equal uncertainty, so id order decides.
    cands.push_back({200 + i, &lemmas[i], lang.Features(i)});
  }
  auto ranked = RankByUncertainty(*model, cands);
  ASSERT_EQ(ranked.size(), cands.size());
  for (size_t i = 1; i < ranked.size(); ++i) {
    const auto& a = ranked[i - 1];
    const auto& b = ranked[i];
    EXPECT_TRUE(a.prediction.uncertainty > b.prediction.uncertainty ||
                (a.prediction.uncertainty == b.prediction.uncertainty && a.entry < b.entry));
  }
  EXPECT_TRUE(RankByUncertainty(*model, std::vector<InflectionCandidate>{}).empty());
}

}  // namespace
}  // namespace morph
