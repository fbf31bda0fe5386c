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

#ifndef MORPH_TEXT_H_
#define MORPH_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace morph::text {

// Decodes UTF-8 into Unicode scalar values. Throws Error(kEncodingError) on
// ill-formed input.
std::u32string ToCodePoints(std::string_view utf8);
std::string FromCodePoints(std::u32string_view code_points);

bool IsValidUtf8(std::string_view bytes);

// Number of Unicode scalar values.
size_t Length(std::string_view utf8);

// Unicode canonical composition (NFC).
std::string Nfc(std::string_view utf8);

// Strips Unicode white space from both ends.
std::string Trim(std::string_view utf8);

bool ContainsWhitespace(std::string_view utf8);

std::vector<std::string> Split(std::string_view s, char sep);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace morph::text

#endif  // MORPH_TEXT_H_
