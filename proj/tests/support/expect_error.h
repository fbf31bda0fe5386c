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

#ifndef MORPH_TESTS_SUPPORT_EXPECT_ERROR_H_
#define MORPH_TESTS_SUPPORT_EXPECT_ERROR_H_

#include <gtest/gtest.h>

#include "morph/error.h"

// Asserts that `stmt` throws morph::Error with the given code.
#define EXPECT_MORPH_ERROR(stmt, expected_code)                                      \
  do {                                                                               \
    try {                                                                            \
      stmt;                                                                          \
      ADD_FAILURE() << "expected " << ::morph::ErrorCodeName(expected_code);         \
    } catch (const ::morph::Error& morph_error_) {                                   \
      EXPECT_EQ(::morph::ErrorCodeName(morph_error_.code()),                         \
                ::morph::ErrorCodeName(expected_code))                               \
          << morph_error_.what();                                                    \
    }                                                                                \
  } while (0)

#endif  // MORPH_TESTS_SUPPORT_EXPECT_ERROR_H_
