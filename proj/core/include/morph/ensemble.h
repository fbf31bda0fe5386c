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

#ifndef MORPH_ENSEMBLE_H_
#define MORPH_ENSEMBLE_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morph/domain.h"

namespace morph {

struct Suggestion {
  std::string form;
  Source source = Source::kRule;
  // Model confidence when the source provides one (neural: 1 - uncertainty).
  std::optional<double> confidence;
};

struct PresentationOption {
  std::string form;             // NFC, trimmed
  std::vector<Source> sources;  // Rule, Neural, Llm order
  double score = 0.0;           // agreeing sources
};

// Unanimous when every contributing source agreed on one form; otherwise a
// choice list. An empty choice list means manual elicitation.
struct Presentation {
  bool unanimous = false;
  std::vector<PresentationOption> options;

  // "High" for unanimous presentations, "None" otherwise.
  std::string_view confidence() const { return unanimous ? "High" : "None"; }
};

// Throws kDuplicateSource when two suggestions share a source.
Presentation Aggregate(std::span<const Suggestion> suggestions);

struct DisplayRecord {
  std::string form;
  std::vector<std::string> labels;  // RULE / NEURAL / LLM
};

std::vector<DisplayRecord> TagSources(const Presentation& presentation);

}  // namespace morph

#endif  // MORPH_ENSEMBLE_H_
