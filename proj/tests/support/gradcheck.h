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

#ifndef MORPH_TESTS_SUPPORT_GRADCHECK_H_
#define MORPH_TESTS_SUPPORT_GRADCHECK_H_

#include <cstdint>

namespace morph::synth {

struct GradCheckResult {
  std::int64_t parameters = 0;
  std::int64_t within_tolerance = 0;
  double max_relative_error = 0.0;
};

// Double-precision network with embedding = hidden = 4, two layers, source
// and target sequences of length 3. Compares backprop with central
// differences for every parameter.
//   rel = |a - n| / max(|a|, |n|, floor)
GradCheckResult CheckGradients(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace morph::synth

#endif  // MORPH_TESTS_SUPPORT_GRADCHECK_H_
