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

#ifndef MORPH_INFLECTOR_H_
#define MORPH_INFLECTOR_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morph/domain.h"

namespace morph {

// Stem segments are padded or truncated to this many characters, and
// decoding stops after this many output characters.
inline constexpr int kMaxLen = 20;

struct Token {
  enum class Kind : std::uint8_t { kPad, kSep, kSep2, kTag, kChar, kBos, kEos, kUnk };
  Kind kind = Kind::kPad;
  std::string text;  // tag name or one UTF-8 character

  static Token Pad() { return {Kind::kPad, {}}; }
  static Token Sep() { return {Kind::kSep, {}}; }
  static Token Sep2() { return {Kind::kSep2, {}}; }
  static Token Tag(std::string t) { return {Kind::kTag, std::move(t)}; }
  static Token Char(std::string c) { return {Kind::kChar, std::move(c)}; }

  friend bool operator==(const Token&, const Token&) = default;
  friend auto operator<=>(const Token&, const Token&) = default;
};

using TokenSequence = std::vector<Token>;

// [feature tags] SEP [stem1 chars, padded to kMaxLen] (SEP2 [stem2 chars,
// padded] when the lemma has a second stem). Lemmas without stems use the
// citation form as stem1.
TokenSequence Encode(const Lemma& lemma, const FeatureSet& features);

// Splits a UTF-8 string into one-character tokens.
std::vector<std::string> Characters(std::string_view word);

struct TrainingExample {
  TokenSequence input;
  std::vector<std::string> target;  // characters of the verified form
};

// Throws kInvalidState unless the entry is Verified.
TrainingExample MakeExample(const Lemma& lemma, const WordformEntry& entry);

class Vocabulary {
 public:
  Vocabulary();  // holds the special tokens only

  int Add(const Token& token);
  // Unknown tokens map to the UNK id.
  int Find(const Token& token) const;
  const Token& At(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  // True once anything beyond the special tokens was added.
  bool HasContent() const;

  int pad() const { return 0; }
  int bos() const { return 1; }
  int eos() const { return 2; }
  int unk() const { return 3; }

  const std::vector<Token>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<Token> tokens_;
  std::map<Token, int> index_;
};

struct ModelConfig {
  int embedding = 128;
  int hidden = 128;
  int layers = 2;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  int epochs = 15;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 0.003;
  int batch_size = 8;
  double clip_norm = 5.0;
  double init_scale = 0.1;
};

struct Prediction {
  std::string form;
  // 1 - geometric-mean probability of the chosen tokens, in [0, 1].
  double uncertainty = 1.0;
};

// Immutable snapshot of a trained network. Copies are cheap to share via
// std::shared_ptr<const InflectorModel>.
class InflectorModel {
 public:
  InflectorModel() = default;
  InflectorModel(Vocabulary vocab, ModelConfig config, std::vector<float> parameters);

  bool trained() const { return vocab_.HasContent() && !parameters_.empty(); }
  const Vocabulary& vocabulary() const { return vocab_; }
  const ModelConfig& config() const { return config_; }
  std::span<const float> parameters() const { return parameters_; }

  // Throws kUntrainedModel.
  Prediction Predict(const Lemma& lemma, const FeatureSet& features) const;
  std::vector<Prediction> PredictBatch(std::span<const TokenSequence> inputs) const;

  // Binary format: "CMNN", u32 version, u32 embedding/hidden/layers, u32 token
  // count, per token (u8 kind, u32 length, bytes), u64 parameter count, then
  // little-endian IEEE-754 float32 parameters.
  void Save(std::ostream& out) const;
  static InflectorModel Load(std::istream& in);
  void SaveFile(const std::string& path) const;
  static InflectorModel LoadFile(const std::string& path);

  // Encoder-side integer coding: PAD dropped, order reversed.
  std::vector<int> SourceIds(const TokenSequence& input) const;

  friend bool operator==(const InflectorModel&, const InflectorModel&) = default;

 private:
  Vocabulary vocab_;
  ModelConfig config_;
  std::vector<float> parameters_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct TrainResult {
  InflectorModel model;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

// Teacher-forced cross-entropy training. Same examples and seed produce
// identical parameters. Throws kInsufficientData for fewer than 2 examples.
TrainResult Train(std::span<const TrainingExample> examples, const TrainConfig& train = {},
                  const ModelConfig& model = {});

struct InflectionCandidate {
  Id entry = 0;
  const Lemma* lemma = nullptr;
  FeatureSet features;
};

struct RankedCandidate {
  Id entry = 0;
  Prediction prediction;
};

// Descending uncertainty, ties by entry id ascending.
std::vector<RankedCandidate> RankByUncertainty(const InflectorModel& model,
                                               std::span<const InflectionCandidate> candidates);

}  // namespace morph

#endif  // MORPH_INFLECTOR_H_
