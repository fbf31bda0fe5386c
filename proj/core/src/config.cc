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

#include "morph/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "morph/error.h"

namespace morph {
namespace {

namespace pt = boost::property_tree;

std::string Unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::string Str(const char* key, std::string fallback) const {
    if (!tree_) return fallback;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    return v ? Unquote(*v) : fallback;
  }
  int Int(const char* key, int fallback) const {
    std::string s = Str(key, "");
    if (s.empty()) return fallback;
    try {
      size_t used = 0;
      int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, "expected an integer, got " + s, name_ + "." + key);
    }
  }
  bool Bool(const char* key, bool fallback) const {
    std::string s = Str(key, "");
    if (s.empty()) return fallback;
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Error(ErrorCode::kConfigError, "expected a boolean, got " + s, name_ + "." + key);
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

Section Get(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  return Section(it == root.not_found() ? nullptr : &it->second, name);
}

}  // namespace

ServiceConfig ParseConfig(std::string_view text) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what(),
                "line " + std::to_string(e.line()));
  }

  ServiceConfig c;
  Section server = Get(root, "server");
  c.host = server.Str("host", c.host);
  c.port = server.Int("port", c.port);
  c.database = server.Str("database", c.database);
  c.session_ttl_seconds = server.Int("session_ttl_seconds", c.session_ttl_seconds);
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kConfigError, "port out of range", "server.port");

  Section wf = Get(root, "workflow");
  c.workflow.n_train = wf.Int("n_train", c.workflow.n_train);
  c.workflow.delta_n = wf.Int("delta_n", c.workflow.delta_n);
  c.workflow.quorum = wf.Int("quorum", c.workflow.quorum);
  c.workflow.auto_retrain = wf.Bool("auto_retrain", c.workflow.auto_retrain);
  c.workflow.model_dir = wf.Str("model_dir", c.workflow.model_dir);
  c.workflow.train.epochs = wf.Int("epochs", c.workflow.train.epochs);
  if (c.workflow.n_train < 2 || c.workflow.delta_n < 1 || c.workflow.quorum < 1) {
    throw Error(ErrorCode::kConfigError, "n_train >= 2, delta_n >= 1 and quorum >= 1 required", "workflow");
  }

  Section llm = Get(root, "llm");
  c.llm.k = llm.Int("k", c.llm.k);
  c.llm.k_min = llm.Int("k_min", c.llm.k_min);
  c.llm.max_in_flight = llm.Int("max_in_flight", c.llm.max_in_flight);
  if (c.llm.k < 1 || c.llm.k > 3) throw Error(ErrorCode::kConfigError, "k must be within 1..3", "llm.k");
  if (c.llm.k_min < 1 || c.llm.k_min > c.llm.k) {
    throw Error(ErrorCode::kConfigError, "k_min must be within 1..k", "llm.k_min");
  }

  Section provider = Get(root, "provider");
  c.provider = provider.Str("kind", c.provider);
  if (c.provider != "none" && c.provider != "mock" && c.provider != "http") {
    throw Error(ErrorCode::kConfigError, "unknown provider kind " + c.provider, "provider.kind");
  }
  c.http.endpoint = provider.Str("endpoint", "");
  c.http.model = provider.Str("model", "");
  c.http.api_key = provider.Str("api_key", "");
  c.http.timeout_seconds = provider.Int("timeout_seconds", c.http.timeout_seconds);
  if (const char* env = std::getenv(kProviderKeyEnv); env && *env) c.http.api_key = env;
  if (c.provider == "http" && c.http.endpoint.empty()) {
    throw Error(ErrorCode::kConfigError, "http provider needs an endpoint", "provider.endpoint");
  }

  for (const auto& [name, tree] : root) {
    if (name.rfind("user.", 0) != 0) continue;
    Section s(&tree, name);
    UserSpec u;
    u.name = name.substr(5);
    u.token = s.Str("token", "");
    if (u.name.empty() || u.token.empty()) {
      throw Error(ErrorCode::kConfigError, "user sections need a name and a token", name);
    }
    try {
      u.role = ParseRole(s.Str("role", "Speaker"));
      u.expertise = ParseExpertise(s.Str("expertise", "NonExpert"));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, e.what(), name);
    }
    u.designated_expert = s.Bool("designated_expert", false);
    if (u.designated_expert && u.expertise != Expertise::kExpert) {
      throw Error(ErrorCode::kConfigError, "designated experts need Expert expertise", name);
    }
    c.users.push_back(u);
  }
  return c;
}

ServiceConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace morph
