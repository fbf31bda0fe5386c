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

#ifndef MORPHCTL_CLI_H_
#define MORPHCTL_CLI_H_

#include <iosfwd>

namespace morphctl {

// Exit codes: 0 success, 1 module error, 2 usage error.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace morphctl

#endif  // MORPHCTL_CLI_H_
