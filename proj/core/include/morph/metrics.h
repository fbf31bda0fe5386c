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

#ifndef MORPH_METRICS_H_
#define MORPH_METRICS_H_

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace morph {

// Levenshtein distance over Unicode scalar values (unit costs).
size_t EditDistance(std::string_view a, std::string_view b);
size_t EditDistance(std::u32string_view a, std::u32string_view b);

struct CerReport {
  std::vector<size_t> distances;
  size_t total_edits = 0;
  size_t total_reference_chars = 0;
  size_t items = 0;

  // Micro-averaged: total edits / total reference characters.
  double cer() const;
  double percent() const { return 100.0 * cer(); }
};

struct HypRef {
  std::string hypothesis;
  std::string reference;
};

// Throws kEmptyReference if any reference is empty.
CerReport ComputeCer(std::span<const HypRef> pairs);

// "14.29" style, two decimals.
std::string FormatPercent(double percent);

}  // namespace morph

#endif  // MORPH_METRICS_H_
