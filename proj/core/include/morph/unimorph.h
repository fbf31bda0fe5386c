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

#ifndef MORPH_UNIMORPH_H_
#define MORPH_UNIMORPH_H_

#include <optional>
#include <string>
#include <string_view>

namespace morph::unimorph {

// A tag's verbose reading, e.g. PST -> {"Tense", "Past"}.
struct TagInfo {
  std::string_view dimension;
  std::string_view value;
};

// True for the fixed allowlist of UniMorph part-of-speech tags.
bool IsPosTag(std::string_view tag);

// Looks a tag up in the bundled schema table. Language-specific tags of the
// form LGSPEC<n> are accepted with value equal to the tag itself.
std::optional<TagInfo> Lookup(std::string_view tag);

// "Dimension=Value" for a known tag; throws Error(kUnknownTag) otherwise.
std::string Verbose(std::string_view tag);

}  // namespace morph::unimorph

#endif  // MORPH_UNIMORPH_H_
