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

#ifndef MORPH_API_H_
#define MORPH_API_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "morph/config.h"
#include "morph/error.h"
#include "morph/llm.h"
#include "morph/storage.h"
#include "morph/workflow.h"

namespace morph {

// Exactly one HTTP status per error code.
int HttpStatusFor(ErrorCode code);

// Maps a presented credential to a user. Swap in a real implementation for
// deployments beyond a single desk.
class Authenticator {
 public:
  virtual ~Authenticator() = default;
  virtual std::optional<User> Authenticate(const std::string& credential) = 0;
};

// Pre-provisioned tokens from the config. Users missing from the repository
// are created on construction.
class StaticTokenAuthenticator : public Authenticator {
 public:
  StaticTokenAuthenticator(Repository& repo, const std::vector<UserSpec>& users);
  std::optional<User> Authenticate(const std::string& credential) override;

 private:
  std::map<std::string, User> by_token_;
};

struct ApiOptions {
  int session_ttl_seconds = 8 * 3600;
  // Milliseconds since the epoch; defaults to the system clock.
  std::function<std::int64_t()> clock;
  // One JSON object per request. Defaults to stderr.
  std::function<void(const std::string&)> log;
  // Used for question-template generation; may be null.
  std::shared_ptr<CompletionProvider> provider;
};

// JSON-over-HTTP front of the workflow. Every mutation needs either a
// "version" member in the body or an Idempotency-Key header; replaying a key
// returns the first response.
class ApiServer {
 public:
  ApiServer(Repository& repo, Workflow& workflow, Authenticator& auth, ApiOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Port 0 picks a free port. Returns the bound port. Throws
  // kPortUnavailable.
  int Bind(const std::string& host, int port);
  // Serves on the calling thread until Stop().
  void Run();
  // Serves on a background thread.
  void Start();
  void Stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::shared_ptr<CompletionProvider> MakeProvider(const ServiceConfig& config);

// Everything `serve` needs, owned together: database, model registry,
// suggester, workflow, authenticator and server.
class Service {
 public:
  // A null provider is built from the config. A null log writes request
  // lines to stderr.
  explicit Service(ServiceConfig config, std::shared_ptr<CompletionProvider> provider = nullptr,
                   std::function<void(const std::string&)> log = nullptr);
  ~Service();

  // Binds config.host:config.port and serves in the background.
  int Start();
  void Run();
  void Stop();

  Repository& repository();
  Workflow& workflow();

 private:
  struct Parts;
  std::unique_ptr<Parts> parts_;
};

}  // namespace morph

#endif  // MORPH_API_H_
