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

#include "morph/ensemble.h"

#include <algorithm>
#include <map>

#include "morph/error.h"
#include "morph/text.h"

namespace morph {
namespace {

int SourceRank(Source s) {
  switch (s) {
    case Source::kRule: return 0;
    case Source::kNeural: return 1;
    case Source::kLlm: return 2;
    case Source::kHuman: return 3;
    case Source::kNone: return 4;
  }
  return 5;
}

struct Group {
  PresentationOption option;
  double neural_confidence = -1.0;
  int best_rank = 99;
};

}  // namespace

Presentation Aggregate(std::span<const Suggestion> suggestions) {
  std::vector<Source> seen;
  for (const Suggestion& s : suggestions) {
    if (std::find(seen.begin(), seen.end(), s.source) != seen.end()) {
      throw Error(ErrorCode::kDuplicateSource,
                  "two suggestions from source " + std::string(ToString(s.source)));
    }
    seen.push_back(s.source);
  }

  std::map<std::string, Group> groups;
  for (const Suggestion& s : suggestions) {
    std::string form = text::Trim(text::Nfc(s.form));
    if (form.empty()) continue;
    Group& g = groups[form];
    g.option.form = form;
    g.option.sources.push_back(s.source);
    g.best_rank = std::min(g.best_rank, SourceRank(s.source));
    if (s.source == Source::kNeural) g.neural_confidence = s.confidence.value_or(0.0);
  }

  std::vector<Group> ordered;
  for (auto& [form, g] : groups) {
    std::sort(g.option.sources.begin(), g.option.sources.end(),
              [](Source a, Source b) { return SourceRank(a) < SourceRank(b); });
    g.option.score = static_cast<double>(g.option.sources.size());
    ordered.push_back(std::move(g));
  }
  std::sort(ordered.begin(), ordered.end(), [](const Group& a, const Group& b) {
    if (a.option.sources.size() != b.option.sources.size()) {
      return a.option.sources.size() > b.option.sources.size();
    }
    if (a.neural_confidence != b.neural_confidence) {
      return a.neural_confidence > b.neural_confidence;
    }
    if (a.best_rank != b.best_rank) return a.best_rank < b.best_rank;
    return a.option.form < b.option.form;
  });

  Presentation p;
  for (Group& g : ordered) p.options.push_back(std::move(g.option));
  p.unanimous = p.options.size() == 1;
  return p;
}

std::vector<DisplayRecord> TagSources(const Presentation& presentation) {
  std::vector<DisplayRecord> out;
  for (const PresentationOption& o : presentation.options) {
    DisplayRecord r{o.form, {}};
    for (Source s : o.sources) r.labels.emplace_back(SourceLabel(s));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace morph
