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

#include "morph/inflector.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "morph/error.h"
#include "morph/seq2seq.h"
#include "morph/text.h"

namespace morph {
namespace {

using Net = nn::Seq2Seq<float>;

// Eigen picks its vectorized/peeled split from the buffer address, which
// changes float rounding. Fixed alignment keeps results reproducible.
using AlignedFloats = std::vector<float, Eigen::aligned_allocator<float>>;

nn::Dims DimsFor(const ModelConfig& config, int vocab) {
  return nn::Dims{vocab, config.embedding, config.hidden, config.layers};
}

void AppendStem(TokenSequence& seq, std::string_view stem) {
  std::vector<std::string> chars = Characters(stem);
  for (int k = 0; k < kMaxLen; ++k) {
    seq.push_back(k < static_cast<int>(chars.size()) ? Token::Char(chars[k]) : Token::Pad());
  }
}

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void Shuffle(std::vector<size_t>& order, std::mt19937_64& rng) {
  for (size_t i = order.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(Uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[j]);
  }
}

template <typename U>
void WriteLe(std::ostream& out, U value) {
  for (size_t k = 0; k < sizeof(U); ++k) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * k)) & 0xff));
  }
}

template <typename U>
U ReadLe(std::istream& in) {
  std::uint64_t value = 0;
  for (size_t k = 0; k < sizeof(U); ++k) {
    int byte = in.get();
    if (byte == std::char_traits<char>::eof()) {
      throw Error(ErrorCode::kModelFormat, "truncated model file");
    }
    value |= static_cast<std::uint64_t>(byte & 0xff) << (8 * k);
  }
  return static_cast<U>(value);
}

std::vector<bool> OutputMask(const Vocabulary& vocab) {
  std::vector<bool> allowed(vocab.size(), false);
  for (int id = 0; id < vocab.size(); ++id) {
    Token::Kind kind = vocab.At(id).kind;
    allowed[id] = kind == Token::Kind::kChar || kind == Token::Kind::kEos;
  }
  return allowed;
}

}  // namespace

std::vector<std::string> Characters(std::string_view word) {
  std::vector<std::string> out;
  for (char32_t c : text::ToCodePoints(word)) {
    out.push_back(text::FromCodePoints(std::u32string_view(&c, 1)));
  }
  return out;
}

TokenSequence Encode(const Lemma& lemma, const FeatureSet& features) {
  TokenSequence seq;
  for (const std::string& tag : features.tags()) seq.push_back(Token::Tag(tag));
  seq.push_back(Token::Sep());
  AppendStem(seq, lemma.stems.empty() ? lemma.citation_form : lemma.stems[0]);
  if (lemma.stems.size() >= 2) {
    seq.push_back(Token::Sep2());
    AppendStem(seq, lemma.stems[1]);
  }
  return seq;
}

TrainingExample MakeExample(const Lemma& lemma, const WordformEntry& entry) {
  if (entry.status != EntryStatus::kVerified || !entry.form) {
    throw Error(ErrorCode::kInvalidState, "training examples come from verified entries only");
  }
  TrainingExample example;
  example.input = Encode(lemma, entry.features);
  example.target = Characters(*entry.form);
  if (example.target.size() > static_cast<size_t>(kMaxLen)) example.target.resize(kMaxLen);
  return example;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  Add(Token::Pad());
  Add(Token{Token::Kind::kBos, {}});
  Add(Token{Token::Kind::kEos, {}});
  Add(Token{Token::Kind::kUnk, {}});
  Add(Token::Sep());
  Add(Token::Sep2());
}

int Vocabulary::Add(const Token& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::Find(const Token& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk() : it->second;
}

bool Vocabulary::HasContent() const { return tokens_.size() > 6; }

// ---------------------------------------------------------------------------

InflectorModel::InflectorModel(Vocabulary vocab, ModelConfig config,
                               std::vector<float> parameters)
    : vocab_(std::move(vocab)), config_(config), parameters_(std::move(parameters)) {
  Net net(DimsFor(config_, vocab_.size()), vocab_.bos(), vocab_.eos());
  if (static_cast<std::int64_t>(parameters_.size()) != net.ParamCount()) {
    throw Error(ErrorCode::kModelFormat, "parameter count does not match dimensions");
  }
}

std::vector<int> InflectorModel::SourceIds(const TokenSequence& input) const {
  std::vector<int> ids;
  ids.reserve(input.size());
  for (auto it = input.rbegin(); it != input.rend(); ++it) {
    if (it->kind == Token::Kind::kPad) continue;
    ids.push_back(vocab_.Find(*it));
  }
  return ids;
}

std::vector<Prediction> InflectorModel::PredictBatch(std::span<const TokenSequence> inputs) const {
  if (!trained()) throw Error(ErrorCode::kUntrainedModel, "model has not been trained");
  Net net(DimsFor(config_, vocab_.size()), vocab_.bos(), vocab_.eos());
  const std::vector<bool> allowed = OutputMask(vocab_);
  const AlignedFloats params(parameters_.begin(), parameters_.end());
  std::vector<Prediction> out;
  out.reserve(inputs.size());
  constexpr size_t kChunk = 64;
  for (size_t start = 0; start < inputs.size(); start += kChunk) {
    const size_t end = std::min(inputs.size(), start + kChunk);
    std::vector<std::vector<int>> sources;
    for (size_t k = start; k < end; ++k) sources.push_back(SourceIds(inputs[k]));
    auto decoded = net.Greedy(params, sources, allowed, kMaxLen);
    for (auto& d : decoded) {
      Prediction p;
      for (int id : d.tokens) p.form += vocab_.At(id).text;
      double mean = 0.0;
      for (float lp : d.log_probs) mean += lp;
      mean /= static_cast<double>(std::max<size_t>(1, d.log_probs.size()));
      p.uncertainty = std::clamp(1.0 - std::exp(mean), 0.0, 1.0);
      out.push_back(std::move(p));
    }
  }
  return out;
}

Prediction InflectorModel::Predict(const Lemma& lemma, const FeatureSet& features) const {
  TokenSequence input = Encode(lemma, features);
  return PredictBatch(std::span<const TokenSequence>(&input, 1)).front();
}

void InflectorModel::Save(std::ostream& out) const {
  out.write("CMNN", 4);
  WriteLe<std::uint32_t>(out, kModelFormatVersion);
  WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(config_.embedding));
  WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(config_.hidden));
  WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(config_.layers));
  WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_.size()));
  for (const Token& token : vocab_.tokens()) {
    WriteLe<std::uint8_t>(out, static_cast<std::uint8_t>(token.kind));
    WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(token.text.size()));
    out.write(token.text.data(), static_cast<std::streamsize>(token.text.size()));
  }
  WriteLe<std::uint64_t>(out, parameters_.size());
  for (float p : parameters_) WriteLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(p));
  if (!out) throw Error(ErrorCode::kModelFormat, "failed to write model");
}

InflectorModel InflectorModel::Load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CMNN", 4) != 0) {
    throw Error(ErrorCode::kModelFormat, "bad magic bytes");
  }
  auto version = ReadLe<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kModelFormat, "unsupported model format version " +
                                             std::to_string(version));
  }
  ModelConfig config;
  config.embedding = static_cast<int>(ReadLe<std::uint32_t>(in));
  config.hidden = static_cast<int>(ReadLe<std::uint32_t>(in));
  config.layers = static_cast<int>(ReadLe<std::uint32_t>(in));
  auto vocab_size = ReadLe<std::uint32_t>(in);
  Vocabulary vocab;
  for (std::uint32_t k = 0; k < vocab_size; ++k) {
    auto kind = ReadLe<std::uint8_t>(in);
    if (kind > static_cast<std::uint8_t>(Token::Kind::kUnk)) {
      throw Error(ErrorCode::kModelFormat, "bad token kind");
    }
    auto length = ReadLe<std::uint32_t>(in);
    std::string textv(length, '\0');
    if (length > 0 && !in.read(textv.data(), length)) {
      throw Error(ErrorCode::kModelFormat, "truncated vocabulary");
    }
    int id = vocab.Add(Token{static_cast<Token::Kind>(kind), std::move(textv)});
    if (id != static_cast<int>(k)) throw Error(ErrorCode::kModelFormat, "vocabulary out of order");
  }
  auto count = ReadLe<std::uint64_t>(in);
  std::vector<float> params(count);
  for (auto& p : params) p = std::bit_cast<float>(ReadLe<std::uint32_t>(in));
  return InflectorModel(std::move(vocab), config, std::move(params));
}

void InflectorModel::SaveFile(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kModelFormat, "cannot open " + path);
  Save(out);
}

InflectorModel InflectorModel::LoadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  return Load(in);
}

// ---------------------------------------------------------------------------

TrainResult Train(std::span<const TrainingExample> examples, const TrainConfig& train,
                  const ModelConfig& model_config) {
  if (examples.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "need at least 2 training examples");
  }
  Vocabulary vocab;
  for (const TrainingExample& ex : examples) {
    for (const Token& token : ex.input) {
      if (token.kind != Token::Kind::kPad) vocab.Add(token);
    }
    for (const std::string& c : ex.target) vocab.Add(Token::Char(c));
  }

  Net net(DimsFor(model_config, vocab.size()), vocab.bos(), vocab.eos());
  const auto n_params = static_cast<size_t>(net.ParamCount());
  AlignedFloats params(n_params);
  std::mt19937_64 rng(train.seed);
  for (float& p : params) {
    p = static_cast<float>((2.0 * Uniform01(rng) - 1.0) * train.init_scale);
  }
  for (std::int64_t offset : net.ForgetBiasOffsets()) {
    std::fill_n(params.begin() + offset, model_config.hidden, 1.0f);
  }

  // Integer-coded data; the model instance supplies the source coding.
  InflectorModel coder(vocab, model_config, std::vector<float>(params.begin(), params.end()));
  std::vector<std::vector<int>> sources, targets;
  for (const TrainingExample& ex : examples) {
    sources.push_back(coder.SourceIds(ex.input));
    std::vector<int> y;
    for (const std::string& c : ex.target) y.push_back(vocab.Find(Token::Char(c)));
    targets.push_back(std::move(y));
  }

  AlignedFloats grad(n_params), m1, m2;
  if (train.optimizer == Optimizer::kAdam) {
    m1.assign(n_params, 0.0f);
    m2.assign(n_params, 0.0f);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::int64_t step = 0;

  TrainResult result;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t batch_size = static_cast<size_t>(std::max(1, train.batch_size));
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    Shuffle(order, rng);
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      nn::Batch batch;
      for (size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
        batch.source.push_back(sources[order[k]]);
        batch.target.push_back(targets[order[k]]);
      }
      float loss = net.Loss(params, batch, grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kInsufficientData, "training diverged (non-finite loss)");
      }
      epoch_loss += loss;
      ++batches;

      double norm_sq = 0.0;
      for (float g : grad) norm_sq += static_cast<double>(g) * g;
      const double norm = std::sqrt(norm_sq);
      const float clip = norm > train.clip_norm ? static_cast<float>(train.clip_norm / norm) : 1.0f;

      ++step;
      if (train.optimizer == Optimizer::kSgd) {
        const float lr = static_cast<float>(train.learning_rate);
        for (size_t k = 0; k < n_params; ++k) params[k] -= lr * clip * grad[k];
      } else {
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        const float lr = static_cast<float>(train.learning_rate * std::sqrt(bc2) / bc1);
        for (size_t k = 0; k < n_params; ++k) {
          const float g = clip * grad[k];
          m1[k] = static_cast<float>(kBeta1) * m1[k] + static_cast<float>(1 - kBeta1) * g;
          m2[k] = static_cast<float>(kBeta2) * m2[k] + static_cast<float>(1 - kBeta2) * g * g;
          params[k] -= lr * m1[k] / (std::sqrt(m2[k]) + static_cast<float>(kEps));
        }
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(std::max<size_t>(1, batches)));
  }
  result.model = InflectorModel(std::move(vocab), model_config, std::vector<float>(params.begin(), params.end()));
  return result;
}

std::vector<RankedCandidate> RankByUncertainty(const InflectorModel& model,
                                               std::span<const InflectionCandidate> candidates) {
  if (!model.trained()) throw Error(ErrorCode::kUntrainedModel, "model has not been trained");
  std::vector<TokenSequence> inputs;
  inputs.reserve(candidates.size());
  for (const auto& c : candidates) inputs.push_back(Encode(*c.lemma, c.features));
  std::vector<Prediction> predictions = model.PredictBatch(inputs);
  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) {
    ranked.push_back(RankedCandidate{candidates[k].entry, std::move(predictions[k])});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.prediction.uncertainty != b.prediction.uncertainty) {
      return a.prediction.uncertainty > b.prediction.uncertainty;
    }
    return a.entry < b.entry;
  });
  return ranked;
}

}  // namespace morph
