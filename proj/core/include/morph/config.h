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

#ifndef MORPH_CONFIG_H_
#define MORPH_CONFIG_H_

#include <string>
#include <string_view>
#include <vector>

#include "morph/domain.h"
#include "morph/llm.h"
#include "morph/workflow.h"

namespace morph {

struct UserSpec {
  std::string name;
  std::string token;  // static pre-provisioned credential
  Role role = Role::kSpeaker;
  Expertise expertise = Expertise::kNonExpert;
  bool designated_expert = false;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string database = "morphdesk.db";
  int session_ttl_seconds = 8 * 3600;
  WorkflowConfig workflow;
  LlmConfig llm;
  std::string provider = "none";  // none | mock | http
  HttpProviderConfig http;
  std::vector<UserSpec> users;
};

// Environment variable that overrides [provider] api_key.
inline constexpr const char* kProviderKeyEnv = "MORPHDESK_PROVIDER_KEY";

// INI-style file:
//
//   [server]    host, port, database, session_ttl_seconds
//   [workflow]  n_train, delta_n, quorum, auto_retrain, model_dir, epochs
//   [llm]       k, k_min, max_in_flight
//   [provider]  kind (none|mock|http), endpoint, model, api_key, timeout_seconds
//   [user.NAME] token, role, expertise, designated_expert
//
// Values may be double-quoted. Throws kConfigError.
ServiceConfig ParseConfig(std::string_view text);
ServiceConfig LoadConfig(const std::string& path);

}  // namespace morph

#endif  // MORPH_CONFIG_H_
