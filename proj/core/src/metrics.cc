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

#include "morph/metrics.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "morph/error.h"
#include "morph/text.h"

namespace morph {

size_t EditDistance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Two rows over the shorter string.
  std::vector<size_t> prev(b.size() + 1);
  std::vector<size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), size_t{0});
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t substitute = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

size_t EditDistance(std::string_view a, std::string_view b) {
  return EditDistance(text::ToCodePoints(a), text::ToCodePoints(b));
}

double CerReport::cer() const {
  if (total_reference_chars == 0) return 0.0;
  return static_cast<double>(total_edits) / static_cast<double>(total_reference_chars);
}

CerReport ComputeCer(std::span<const HypRef> pairs) {
  CerReport report;
  report.distances.reserve(pairs.size());
  for (const HypRef& pair : pairs) {
    std::u32string ref = text::ToCodePoints(pair.reference);
    if (ref.empty()) {
      throw Error(ErrorCode::kEmptyReference, "empty reference",
                  "item " + std::to_string(report.items));
    }
    size_t d = EditDistance(text::ToCodePoints(pair.hypothesis), ref);
    report.distances.push_back(d);
    report.total_edits += d;
    report.total_reference_chars += ref.size();
    ++report.items;
  }
  return report;
}

std::string FormatPercent(double percent) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", percent);
  return buf;
}

}  // namespace morph
