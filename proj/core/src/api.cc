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

#include "morph/api.h"

#include "httplib.h"
#include "json.hpp"

#include <openssl/rand.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include "morph/io_formats.h"
#include "morph/pattern.h"

namespace morph {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadRequest:
    case ErrorCode::kPageTooLarge:
    case ErrorCode::kUsageError:
    case ErrorCode::kMalformedGold:
    case ErrorCode::kMissingHeader:
    case ErrorCode::kEncodingError:
      return 400;
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kForbidden:
    case ErrorCode::kNotASpeaker:
      return 403;
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownVariety:
      return 404;
    case ErrorCode::kStaleVersion:
    case ErrorCode::kInvalidState:
    case ErrorCode::kSelfVerification:
    case ErrorCode::kNotFlagged:
    case ErrorCode::kReferentialIntegrity:
      return 409;
    case ErrorCode::kMissingIdempotencyKey: return 428;
    case ErrorCode::kEmptyInput:
    case ErrorCode::kNoPosTag:
    case ErrorCode::kValidation:
    case ErrorCode::kUnbalancedBrace:
    case ErrorCode::kUnknownPlaceholder:
    case ErrorCode::kZeroStemIndex:
    case ErrorCode::kMissingStem:
    case ErrorCode::kMissingLayerMorpheme:
    case ErrorCode::kRegexCompileError:
    case ErrorCode::kDuplicateFeatureSet:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kNoExemplars:
    case ErrorCode::kUnknownTag:
    case ErrorCode::kEmptyForm:
    case ErrorCode::kEmptyReference:
    case ErrorCode::kFieldContainsSeparator:
      return 422;
    case ErrorCode::kUntrainedModel: return 503;
    case ErrorCode::kEmptyReply:
    case ErrorCode::kProviderError:
      return 502;
    case ErrorCode::kModelFormat:
    case ErrorCode::kDuplicateSource:
    case ErrorCode::kStorage:
    case ErrorCode::kConfigError:
    case ErrorCode::kPortUnavailable:
      return 500;
  }
  return 500;
}

StaticTokenAuthenticator::StaticTokenAuthenticator(Repository& repo,
                                                   const std::vector<UserSpec>& users) {
  for (const UserSpec& spec : users) {
    User u{0, spec.name, spec.role, spec.expertise, spec.designated_expert};
    if (auto existing = repo.FindUser(spec.name)) {
      u = *existing;
    } else {
      u.id = repo.Create(u);
    }
    if (!by_token_.emplace(spec.token, u).second) {
      throw Error(ErrorCode::kConfigError, "duplicate token for user " + spec.name, spec.name);
    }
  }
}

std::optional<User> StaticTokenAuthenticator::Authenticate(const std::string& credential) {
  auto it = by_token_.find(credential);
  if (it == by_token_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

json OptId(const std::optional<Id>& v) { return v ? json(*v) : json(nullptr); }
json OptStr(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

json ToJson(const User& u) {
  return {{"id", u.id},
          {"name", u.name},
          {"role", ToString(u.role)},
          {"expertise", ToString(u.expertise)},
          {"designated_expert", u.designated_expert}};
}

json ToJson(const Variety& v) {
  return {{"id", v.id},
          {"name", v.name},
          {"meta_language", v.meta_language},
          {"parent_variety", OptId(v.parent_variety)},
          {"tag_aliases", v.tag_aliases}};
}

json ToJson(const InflectionClass& c) {
  return {{"id", c.id}, {"variety", c.variety}, {"name", c.name}, {"pos", c.pos}};
}

json ToJson(const ParadigmStructure& s) {
  json slots = json::array();
  for (const Slot& slot : s.slots) {
    slots.push_back({{"features", slot.features.str()},
                     {"pattern", OptStr(slot.pattern)},
                     {"layer", OptId(slot.layer)},
                     {"priority", slot.priority}});
  }
  return {{"id", s.id}, {"inflection_class", s.inflection_class}, {"name", s.name}, {"slots", slots}};
}

json ToJson(const ReusableLayer& l) {
  json morphemes = json::array();
  for (const auto& m : l.morphemes) {
    morphemes.push_back({{"fragment", m.fragment}, {"features", m.features.str()}});
  }
  return {{"id", l.id}, {"variety", l.variety}, {"name", l.name}, {"morphemes", morphemes}};
}

json ToJson(const MorphophonRule& r) {
  return {{"id", r.id},           {"variety", r.variety}, {"pattern", r.pattern},
          {"replacement", r.replacement}, {"order", r.order}, {"scope", OptId(r.scope)}};
}

json ToJson(const Lemma& l) {
  return {{"id", l.id},
          {"variety", l.variety},
          {"citation_form", l.citation_form},
          {"gloss", l.gloss},
          {"inflection_class", l.inflection_class},
          {"stems", l.stems},
          {"priority", l.priority}};
}

json ToJson(const QuestionTemplate& q) {
  return {{"id", q.id},
          {"variety", q.variety},
          {"features", q.features.str()},
          {"text", q.text},
          {"draft", q.draft}};
}

json ToJson(const WordformEntry& e) {
  json votes = json::array();
  for (const Vote& v : e.votes) votes.push_back({{"user", v.user}, {"form", v.form}});
  json history = json::array();
  for (const HistoryRecord& h : e.history) {
    history.push_back({{"form", OptStr(h.form)},
                       {"status", ToString(h.status)},
                       {"source", SourceLabel(h.source)},
                       {"actor", OptId(h.actor)},
                       {"timestamp_ms", h.timestamp_ms}});
  }
  return {{"id", e.id},
          {"lemma", e.lemma},
          {"features", e.features.str()},
          {"form", OptStr(e.form)},
          {"status", ToString(e.status)},
          {"source", SourceLabel(e.source)},
          {"votes", votes},
          {"version", e.version},
          {"submitter", OptId(e.submitter)},
          {"slot_priority", e.slot_priority},
          {"escalated", e.escalated},
          {"history", history}};
}

json ToJson(const Presentation& p) {
  json options = json::array();
  for (const DisplayRecord& r : TagSources(p)) {
    options.push_back({{"form", r.form}, {"sources", r.labels}});
  }
  for (std::size_t i = 0; i < p.options.size(); ++i) options[i]["score"] = p.options[i].score;
  return {{"unanimous", p.unanimous}, {"confidence", p.confidence()}, {"options", options}};
}

json ToJson(const TaskQueueItem& t) {
  return {{"entry", t.entry},
          {"lemma", t.lemma},
          {"citation_form", t.citation_form},
          {"features", t.features.str()},
          {"status", ToString(t.status)},
          {"version", t.version},
          {"priority", t.priority},
          {"uncertainty", t.uncertainty},
          {"mode", ToString(t.mode)},
          {"presentation", ToJson(t.presentation)},
          {"question", OptStr(t.question)},
          {"voted_forms", t.voted_forms}};
}

json ToJson(const ImportResult& r) {
  json errors = json::array();
  for (const RowError& e : r.errors) {
    errors.push_back({{"line", e.line}, {"reason", e.reason}, {"detail", e.detail}});
  }
  return {{"count", r.count}, {"errors", errors}};
}

[[noreturn]] void BadField(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kBadRequest, field + ": " + what, field);
}

const json& Need(const json& body, const char* field) {
  if (!body.is_object() || !body.contains(field)) BadField(field, "required");
  return body.at(field);
}

std::string NeedString(const json& body, const char* field) {
  const json& v = Need(body, field);
  if (!v.is_string()) BadField(field, "expected a string");
  return v.get<std::string>();
}

std::string StringOr(const json& body, const char* field, std::string fallback) {
  if (!body.contains(field) || body.at(field).is_null()) return fallback;
  if (!body.at(field).is_string()) BadField(field, "expected a string");
  return body.at(field).get<std::string>();
}

std::int64_t IntOr(const json& body, const char* field, std::int64_t fallback) {
  if (!body.contains(field) || body.at(field).is_null()) return fallback;
  if (!body.at(field).is_number_integer()) BadField(field, "expected an integer");
  return body.at(field).get<std::int64_t>();
}

std::int64_t NeedInt(const json& body, const char* field) {
  const json& v = Need(body, field);
  if (!v.is_number_integer()) BadField(field, "expected an integer");
  return v.get<std::int64_t>();
}

std::optional<Id> OptIdField(const json& body, const char* field) {
  if (!body.contains(field) || body.at(field).is_null()) return std::nullopt;
  if (!body.at(field).is_number_integer()) BadField(field, "expected an integer or null");
  return body.at(field).get<Id>();
}

std::optional<std::string> OptStrField(const json& body, const char* field) {
  if (!body.contains(field) || body.at(field).is_null()) return std::nullopt;
  if (!body.at(field).is_string()) BadField(field, "expected a string or null");
  return body.at(field).get<std::string>();
}

bool BoolOr(const json& body, const char* field, bool fallback) {
  if (!body.contains(field) || body.at(field).is_null()) return fallback;
  if (!body.at(field).is_boolean()) BadField(field, "expected a boolean");
  return body.at(field).get<bool>();
}

void FromJson(const json& b, Variety& v) {
  v.name = StringOr(b, "name", v.name);
  v.meta_language = StringOr(b, "meta_language", v.meta_language);
  if (b.contains("parent_variety")) v.parent_variety = OptIdField(b, "parent_variety");
  if (b.contains("tag_aliases")) {
    const json& a = b.at("tag_aliases");
    if (!a.is_object()) BadField("tag_aliases", "expected an object");
    v.tag_aliases.clear();
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!it.value().is_string()) BadField("tag_aliases." + it.key(), "expected a string");
      v.tag_aliases[it.key()] = it.value().get<std::string>();
    }
  }
}

void FromJson(const json& b, InflectionClass& c) {
  c.name = StringOr(b, "name", c.name);
  c.pos = StringOr(b, "pos", c.pos);
}

void FromJson(const json& b, ParadigmStructure& s) {
  s.name = StringOr(b, "name", s.name);
  s.inflection_class = IntOr(b, "inflection_class", s.inflection_class);
  if (b.contains("slots")) {
    const json& slots = b.at("slots");
    if (!slots.is_array()) BadField("slots", "expected an array");
    s.slots.clear();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const json& j = slots[i];
      Slot slot;
      try {
        slot.features = FeatureSet::Parse(NeedString(j, "features"));
      } catch (const Error& e) {
        throw Error(e.code(), e.what(), "slots[" + std::to_string(i) + "].features");
      }
      slot.pattern = OptStrField(j, "pattern");
      slot.layer = OptIdField(j, "layer");
      slot.priority = static_cast<int>(IntOr(j, "priority", 0));
      s.slots.push_back(std::move(slot));
    }
  }
}

void FromJson(const json& b, ReusableLayer& l) {
  l.name = StringOr(b, "name", l.name);
  if (b.contains("morphemes")) {
    const json& ms = b.at("morphemes");
    if (!ms.is_array()) BadField("morphemes", "expected an array");
    l.morphemes.clear();
    for (const json& j : ms) {
      l.morphemes.push_back({NeedString(j, "fragment"), TagBundle::Parse(NeedString(j, "features"))});
    }
  }
}

void FromJson(const json& b, MorphophonRule& r) {
  r.pattern = StringOr(b, "pattern", r.pattern);
  r.replacement = StringOr(b, "replacement", r.replacement);
  r.order = static_cast<int>(IntOr(b, "order", r.order));
  if (b.contains("scope")) r.scope = OptIdField(b, "scope");
}

void FromJson(const json& b, Lemma& l) {
  l.citation_form = StringOr(b, "citation_form", l.citation_form);
  l.gloss = StringOr(b, "gloss", l.gloss);
  l.inflection_class = IntOr(b, "inflection_class", l.inflection_class);
  l.priority = static_cast<int>(IntOr(b, "priority", l.priority));
  if (b.contains("stems")) {
    const json& stems = b.at("stems");
    if (!stems.is_array()) BadField("stems", "expected an array");
    l.stems.clear();
    for (const json& s : stems) {
      if (!s.is_string()) BadField("stems", "expected strings");
      l.stems.push_back(s.get<std::string>());
    }
  }
}

void FromJson(const json& b, QuestionTemplate& q) {
  if (b.contains("features")) q.features = FeatureSet::Parse(NeedString(b, "features"));
  q.text = StringOr(b, "text", q.text);
  q.draft = BoolOr(b, "draft", q.draft);
}

std::string RandomToken() {
  unsigned char bytes[24];
  if (RAND_bytes(bytes, sizeof bytes) != 1) throw Error(ErrorCode::kStorage, "no randomness available");
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : bytes) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

std::int64_t SystemNowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

enum class Access { kPublic, kAny, kLinguist, kSpeaker, kResolver };

struct Session {
  User user;
  std::int64_t expires_at_ms = 0;
};

struct CachedResponse {
  int status = 200;
  std::string body;
  std::string content_type;
};

}  // namespace

// ---------------------------------------------------------------------------

struct ApiServer::Impl {
  Repository& repo;
  Workflow& workflow;
  Authenticator& auth;
  ApiOptions options;
  httplib::Server server;
  int port = -1;
  std::thread thread;

  std::mutex mu;
  std::map<std::string, Session> sessions;
  std::map<std::string, CachedResponse> replay;

  Impl(Repository& r, Workflow& w, Authenticator& a, ApiOptions o)
      : repo(r), workflow(w), auth(a), options(std::move(o)) {
    if (!options.clock) options.clock = SystemNowMs;
    if (!options.log) options.log = [](const std::string& line) { std::cerr << line << '\n'; };
    Routes();
  }

  struct Ctx {
    const httplib::Request& req;
    httplib::Response& res;
    std::optional<User> user;
    json body;
    bool raw = false;  // handler already filled res

    Id PathId(int index) const { return std::stoll(req.matches[index].str()); }
    std::string PathStr(int index) const { return req.matches[index].str(); }
    std::optional<std::string> Query(const char* name) const {
      if (!req.has_param(name)) return std::nullopt;
      return req.get_param_value(name);
    }
    int QueryInt(const char* name, int fallback) const {
      auto v = Query(name);
      if (!v) return fallback;
      try {
        std::size_t used = 0;
        int n = std::stoi(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return n;
      } catch (const std::exception&) {
        BadField(name, "expected an integer");
      }
    }
    const User& me() const { return *user; }
  };

  using Handler = std::function<json(Ctx&)>;

  User Authorize(const httplib::Request& req) {
    std::string header = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (header.rfind(prefix, 0) != 0) throw Error(ErrorCode::kUnauthorized, "missing bearer token");
    std::string token = header.substr(prefix.size());
    std::lock_guard lock(mu);
    auto it = sessions.find(token);
    if (it == sessions.end()) throw Error(ErrorCode::kUnauthorized, "unknown session");
    if (options.clock() >= it->second.expires_at_ms) {
      sessions.erase(it);
      throw Error(ErrorCode::kUnauthorized, "session expired");
    }
    // Re-read so role changes in storage take effect.
    if (auto fresh = repo.GetUser(it->second.user.id)) it->second.user = *fresh;
    return it->second.user;
  }

  static void CheckAccess(Access access, const User& user) {
    switch (access) {
      case Access::kPublic:
      case Access::kAny:
        return;
      case Access::kLinguist:
        if (user.role != Role::kLinguist) throw Error(ErrorCode::kForbidden, "linguists only");
        return;
      case Access::kSpeaker:
        if (user.role != Role::kSpeaker) throw Error(ErrorCode::kForbidden, "speakers only");
        return;
      case Access::kResolver:
        if (user.role != Role::kLinguist && !user.designated_expert) {
          throw Error(ErrorCode::kForbidden, "linguists and designated experts only");
        }
        return;
    }
  }

  static void SendError(httplib::Response& res, ErrorCode code, const std::string& message,
                        const std::string& field) {
    json err = {{"code", ErrorCodeName(code)}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    res.status = HttpStatusFor(code);
    res.set_content(json{{"error", err}}.dump(), "application/json");
  }

  void Log(const httplib::Request& req, const httplib::Response& res, const std::optional<User>& user,
           std::int64_t started_ms) {
    json line = {{"ts_ms", started_ms},
                 {"method", req.method},
                 {"path", req.path},
                 {"status", res.status},
                 {"duration_ms", SystemNowMs() - started_ms},
                 {"user", user ? json(user->name) : json(nullptr)}};
    options.log(line.dump());
  }

  void Handle(const httplib::Request& req, httplib::Response& res, Access access, bool mutation,
              const Handler& fn) {
    std::int64_t started = SystemNowMs();
    Ctx ctx{req, res, std::nullopt, json()};
    std::string replay_key;
    try {
      if (access != Access::kPublic) {
        ctx.user = Authorize(req);
        CheckAccess(access, *ctx.user);
      }
      bool is_json = req.get_header_value("Content-Type").find("json") != std::string::npos;
      if (!req.body.empty() && (is_json || req.body.front() == '{')) {
        ctx.body = json::parse(req.body, nullptr, false);
        if (ctx.body.is_discarded()) throw Error(ErrorCode::kBadRequest, "body is not valid JSON");
      }
      if (mutation) {
        std::string key = req.get_header_value("Idempotency-Key");
        if (!key.empty()) {
          replay_key = (ctx.user ? std::to_string(ctx.user->id) : std::string("-")) + "\n" +
                       req.method + "\n" + req.path + "\n" + key;
          std::lock_guard lock(mu);
          if (auto it = replay.find(replay_key); it != replay.end()) {
            res.status = it->second.status;
            res.set_content(it->second.body, it->second.content_type);
            res.set_header("Idempotent-Replay", "true");
            Log(req, res, ctx.user, started);
            return;
          }
        } else if (!ctx.body.is_object() || !ctx.body.contains("version")) {
          throw Error(ErrorCode::kMissingIdempotencyKey,
                      "mutations need a body version or an Idempotency-Key header");
        }
      }
      json out = fn(ctx);
      if (!ctx.raw) res.set_content(out.dump(), "application/json");
      if (res.status == -1) res.status = 200;
    } catch (const Error& e) {
      SendError(res, e.code(), e.what(), e.field());
    } catch (const json::exception& e) {
      SendError(res, ErrorCode::kBadRequest, e.what(), "");
    } catch (const std::exception& e) {
      SendError(res, ErrorCode::kStorage, e.what(), "");
    }
    if (!replay_key.empty() && res.status < 500) {
      std::lock_guard lock(mu);
      replay[replay_key] = {res.status, res.body, res.get_header_value("Content-Type")};
    }
    Log(req, res, ctx.user, started);
  }

  void Get(const std::string& pattern, Access access, Handler fn) {
    server.Get(pattern, [this, access, fn](const httplib::Request& q, httplib::Response& r) {
      Handle(q, r, access, false, fn);
    });
  }
  void Post(const std::string& pattern, Access access, Handler fn, bool mutation = true) {
    server.Post(pattern, [this, access, fn, mutation](const httplib::Request& q, httplib::Response& r) {
      Handle(q, r, access, mutation, fn);
    });
  }
  void Put(const std::string& pattern, Access access, Handler fn) {
    server.Put(pattern, [this, access, fn](const httplib::Request& q, httplib::Response& r) {
      Handle(q, r, access, true, fn);
    });
  }
  void Delete(const std::string& pattern, Access access, Handler fn) {
    server.Delete(pattern, [this, access, fn](const httplib::Request& q, httplib::Response& r) {
      Handle(q, r, access, true, fn);
    });
  }

  Variety NeedVariety(Id id) {
    auto v = repo.GetVariety(id);
    if (!v) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(id), "variety");
    return *v;
  }

  Id VarietyOfClass(Id cls) {
    auto c = repo.GetClass(cls);
    if (!c) throw Error(ErrorCode::kNotFound, "no inflection class " + std::to_string(cls));
    return c->variety;
  }

  WordformEntry NeedEntry(Id id) {
    auto e = repo.GetEntry(id);
    if (!e) throw Error(ErrorCode::kNotFound, "no entry " + std::to_string(id), "entry");
    return *e;
  }

  static void SendText(Ctx& c, const std::string& text, const std::string& file_name) {
    c.raw = true;
    c.res.set_content(text, "text/tab-separated-values; charset=utf-8");
    c.res.set_header("Content-Disposition", "attachment; filename=\"" + file_name + "\"");
  }

  // Material CRUD under /api/varieties/:v/<path>. `variety_of` names the
  // owning variety of a stored entity.
  template <class T>
  void Crud(const std::string& path, std::function<std::vector<T>(Id)> list,
            std::function<std::optional<T>(Id)> get, std::function<void(Id)> del,
            std::function<Id(const T&)> variety_of, std::function<void(T&, Id)> assign_variety) {
    const std::string base = R"(/api/varieties/(\d+)/)" + path;
    auto load = [path, get, variety_of](Id variety, Id id) {
      std::optional<T> found = get(id);
      if (!found || variety_of(*found) != variety) {
        throw Error(ErrorCode::kNotFound, "no " + path + " item " + std::to_string(id), "id");
      }
      return *found;
    };
    Get(base, Access::kAny, [this, list](Ctx& c) {
      Id v = c.PathId(1);
      NeedVariety(v);
      json out = json::array();
      for (const T& item : list(v)) out.push_back(ToJson(item));
      return out;
    });
    Post(base, Access::kLinguist, [this, assign_variety, variety_of, get](Ctx& c) {
      Id v = c.PathId(1);
      NeedVariety(v);
      T item;
      assign_variety(item, v);
      FromJson(c.body, item);
      if (variety_of(item) != v) throw Error(ErrorCode::kReferentialIntegrity, "belongs to another variety");
      item.id = repo.Create(item);
      c.res.status = 201;
      return ToJson(*get(item.id));
    });
    Get(base + R"(/(\d+))", Access::kAny, [load](Ctx& c) { return ToJson(load(c.PathId(1), c.PathId(2))); });
    Put(base + R"(/(\d+))", Access::kLinguist, [this, load, variety_of, get](Ctx& c) {
      Id v = c.PathId(1);
      T item = load(v, c.PathId(2));
      FromJson(c.body, item);
      if (variety_of(item) != v) throw Error(ErrorCode::kReferentialIntegrity, "belongs to another variety");
      repo.Update(item);
      return ToJson(*get(item.id));
    });
    Delete(base + R"(/(\d+))", Access::kLinguist, [load, del](Ctx& c) {
      T item = load(c.PathId(1), c.PathId(2));
      del(item.id);
      return json{{"deleted", item.id}};
    });
  }

  void Routes() {
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        SendError(res, res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kBadRequest,
                  res.status == 404 ? "no such endpoint" : "bad request", "");
      }
    });

    Post("/api/auth/session", Access::kPublic, [this](Ctx& c) {
      std::optional<User> user = auth.Authenticate(NeedString(c.body, "token"));
      if (!user) throw Error(ErrorCode::kUnauthorized, "unknown token", "token");
      Session s{*user, options.clock() + std::int64_t{options.session_ttl_seconds} * 1000};
      std::string token = RandomToken();
      {
        std::lock_guard lock(mu);
        sessions[token] = s;
      }
      c.res.status = 201;
      return json{{"session_token", token}, {"user", ToJson(s.user)}, {"expires_at_ms", s.expires_at_ms}};
    }, /*mutation=*/false);

    Get("/api/me", Access::kAny, [](Ctx& c) { return ToJson(c.me()); });

    // Varieties.
    Get("/api/varieties", Access::kAny, [this](Ctx&) {
      json out = json::array();
      for (const Variety& v : repo.ListVarieties()) out.push_back(ToJson(v));
      return out;
    });
    Post("/api/varieties", Access::kLinguist, [this](Ctx& c) {
      Variety v;
      FromJson(c.body, v);
      v.id = repo.Create(v);
      c.res.status = 201;
      return ToJson(NeedVariety(v.id));
    });
    Get(R"(/api/varieties/(\d+))", Access::kAny, [this](Ctx& c) { return ToJson(NeedVariety(c.PathId(1))); });
    Put(R"(/api/varieties/(\d+))", Access::kLinguist, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      FromJson(c.body, v);
      repo.Update(v);
      return ToJson(NeedVariety(v.id));
    });
    Delete(R"(/api/varieties/(\d+))", Access::kLinguist, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      repo.DeleteVariety(v);
      return json{{"deleted", v}};
    });
    Post(R"(/api/varieties/(\d+)/clone)", Access::kLinguist, [this](Ctx& c) {
      Id id = CloneVariety(repo, c.PathId(1), NeedString(c.body, "name"));
      c.res.status = 201;
      return ToJson(NeedVariety(id));
    });
    Get(R"(/api/varieties/(\d+)/phase)", Access::kAny, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      TrainingState t = repo.GetTrainingState(v);
      return json{{"phase", ToString(workflow.Phase(v))},
                  {"training", workflow.models().Training(v)},
                  {"training_runs", t.runs},
                  {"verified_at_last_train", t.verified_at_last_train}};
    });

    // Materials.
    Crud<InflectionClass>(
        "classes", [this](Id v) { return repo.ListClasses(v); }, [this](Id id) { return repo.GetClass(id); },
        [this](Id id) { repo.DeleteClass(id); }, [](const InflectionClass& c) { return c.variety; },
        [](InflectionClass& c, Id v) { c.variety = v; });
    Crud<ParadigmStructure>(
        "structures", [this](Id v) { return repo.ListStructures(v); },
        [this](Id id) { return repo.GetStructure(id); }, [this](Id id) { repo.DeleteStructure(id); },
        [this](const ParadigmStructure& s) { return s.inflection_class ? VarietyOfClass(s.inflection_class) : 0; },
        [](ParadigmStructure&, Id) {});
    Crud<ReusableLayer>(
        "layers", [this](Id v) { return repo.ListLayers(v); }, [this](Id id) { return repo.GetLayer(id); },
        [this](Id id) { repo.DeleteLayer(id); }, [](const ReusableLayer& l) { return l.variety; },
        [](ReusableLayer& l, Id v) { l.variety = v; });
    Crud<MorphophonRule>(
        "rules", [this](Id v) { return repo.ListRules(v); }, [this](Id id) { return repo.GetRule(id); },
        [this](Id id) { repo.DeleteRule(id); }, [](const MorphophonRule& r) { return r.variety; },
        [](MorphophonRule& r, Id v) { r.variety = v; });
    Crud<Lemma>(
        "lemmas", [this](Id v) { return repo.ListLemmas(v); }, [this](Id id) { return repo.GetLemma(id); },
        [this](Id id) { repo.DeleteLemma(id); }, [](const Lemma& l) { return l.variety; },
        [](Lemma& l, Id v) { l.variety = v; });
    QuestionRoutes();
    Crud<QuestionTemplate>(
        "questions", [this](Id v) { return repo.ListQuestions(v); },
        [this](Id id) { return repo.GetQuestion(id); }, [this](Id id) { repo.DeleteQuestion(id); },
        [](const QuestionTemplate& q) { return q.variety; },
        [](QuestionTemplate& q, Id v) { q.variety = v; });

    Post(R"(/api/varieties/(\d+)/import/([a-z]+))", Access::kLinguist, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      MaterialKind kind = ParseMaterialKind(c.PathStr(2));
      ImportOptions opts;
      opts.all_or_nothing = c.Query("all_or_nothing").value_or("") == "true";
      return ToJson(Import(repo, v, kind, c.req.body, opts));
    });
    Post(R"(/api/varieties/(\d+)/generate)", Access::kLinguist, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      return json{{"created", workflow.GenerateEntries(v)}};
    });
    Post(R"(/api/varieties/(\d+)/train)", Access::kLinguist, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      bool started = workflow.MaybeRetrain(v, /*force=*/true).has_value();
      c.res.status = 202;
      return json{{"started", started}};
    });

    // Speaker loop.
    Get(R"(/api/varieties/(\d+)/tasks/next)", Access::kSpeaker, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      json out = json::array();
      for (const auto& t : workflow.NextTasks(c.me(), v, c.QueryInt("limit", 20))) out.push_back(ToJson(t));
      return out;
    });
    Get(R"(/api/varieties/(\d+)/reviews/next)", Access::kSpeaker, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      json out = json::array();
      for (const auto& t : workflow.NextReviews(c.me(), v, c.QueryInt("limit", 20))) out.push_back(ToJson(t));
      return out;
    });
    Post("/api/forms", Access::kSpeaker, [this](Ctx& c) {
      WordformEntry e = workflow.SubmitForm(c.me(), NeedInt(c.body, "entry"), NeedString(c.body, "form"),
                                            NeedInt(c.body, "version"));
      return ToJson(e);
    });
    Post("/api/verifications", Access::kSpeaker, [this](Ctx& c) {
      const json& agree = Need(c.body, "agree");
      if (!agree.is_boolean()) BadField("agree", "expected a boolean");
      WordformEntry e = workflow.VerifyForm(c.me(), NeedInt(c.body, "entry"), agree.get<bool>(),
                                            OptStrField(c.body, "alternative"), NeedInt(c.body, "version"));
      return ToJson(e);
    });
    Post(R"(/api/entries/(\d+)/resolve)", Access::kResolver, [this](Ctx& c) {
      WordformEntry before = NeedEntry(c.PathId(1));
      if (before.version != NeedInt(c.body, "version")) {
        throw Error(ErrorCode::kStaleVersion, "entry changed since it was read", "version");
      }
      lifecycle::Resolution r = workflow.ResolveFlag(before.id, c.me().id);
      json votes = json::object();
      for (const auto& [form, n] : r.tally.votes) votes[form] = n;
      return json{{"outcome", r.kind == lifecycle::Resolution::Kind::kResolved ? "Resolved" : "Escalated"},
                  {"form", OptStr(r.form)},
                  {"tally", {{"votes", votes}, {"total", r.tally.total}}},
                  {"entry", ToJson(r.entry)}};
    });
    Get(R"(/api/varieties/(\d+)/escalations)", Access::kLinguist, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      json out = json::array();
      for (const WordformEntry& e : workflow.Escalations(v)) out.push_back(ToJson(e));
      return out;
    });
    Post("/api/resolutions", Access::kLinguist, [this](Ctx& c) {
      return ToJson(workflow.Override(c.me(), NeedInt(c.body, "entry"), NeedString(c.body, "form"),
                                      NeedInt(c.body, "version")));
    });

    // Reads.
    Get(R"(/api/entries/(\d+))", Access::kAny, [this](Ctx& c) { return ToJson(NeedEntry(c.PathId(1))); });
    Get(R"(/api/entries/(\d+)/suggestions)", Access::kAny, [this](Ctx& c) {
      WordformEntry e = NeedEntry(c.PathId(1));
      std::vector<Suggestion> s = workflow.SuggestionsFor(e);
      return json{{"entry", e.id}, {"status", ToString(e.status)}, {"presentation", ToJson(Aggregate(s))}};
    });
    Get(R"(/api/varieties/(\d+)/cells)", Access::kAny, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      CellFilter f;
      if (auto s = c.Query("status")) f.status = ParseEntryStatus(*s);
      if (auto s = c.Query("features")) f.features = FeatureSet::Parse(*s);
      if (auto s = c.Query("lemma")) f.lemma = std::stoll(*s);
      if (auto s = c.Query("tag")) f.tag = *s;
      PageRequest page{c.QueryInt("offset", 0), c.QueryInt("limit", 100)};
      json items = json::array();
      for (const WordformEntry& e : repo.QueryCells(v, f, page)) items.push_back(ToJson(e));
      return json{{"total", repo.CountCells(v, f)}, {"offset", page.offset}, {"items", items}};
    });
    Get(R"(/api/varieties/(\d+)/paradigm/(\d+))", Access::kAny, [this](Ctx& c) {
      Id v = NeedVariety(c.PathId(1)).id;
      auto lemma = repo.GetLemma(c.PathId(2));
      if (!lemma || lemma->variety != v) throw Error(ErrorCode::kNotFound, "no such lemma", "lemma");
      CellFilter f;
      f.lemma = lemma->id;
      json cells = json::array();
      for (const WordformEntry& e : repo.QueryCells(v, f, {0, kMaxPageSize})) {
        json cell = ToJson(e);
        cell["presentation"] = ToJson(Aggregate(workflow.SuggestionsFor(e)));
        cells.push_back(cell);
      }
      return json{{"lemma", ToJson(*lemma)}, {"cells", cells}};
    });

    // Exports.
    Get(R"(/api/varieties/(\d+)/exports/materials/([a-z]+))", Access::kAny, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      MaterialKind kind = ParseMaterialKind(c.PathStr(2));
      SendText(c, Export(repo, v.id, kind), MaterialFileName(v.name, kind));
      return json();
    });
    Get(R"(/api/varieties/(\d+)/exports/unimorph)", Access::kAny, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      SendText(c, ExportUniMorph(repo, v.id), UniMorphFileName(v.name));
      return json();
    });
    Get(R"(/api/varieties/(\d+)/exports/blank-tables)", Access::kAny, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      Materials m = LoadMaterials(repo, v.id);
      json files = json::object();
      for (const ParadigmStructure& s : m.structures) {
        files[BlankTableFileName(v.name, s.name)] = BlankTableFor(m, s);
      }
      return json{{"files", files}};
    });
    Get(R"(/api/varieties/(\d+)/exports/blank-tables/(\d+))", Access::kAny, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      Materials m = LoadMaterials(repo, v.id);
      for (const ParadigmStructure& s : m.structures) {
        if (s.id == c.PathId(2)) {
          SendText(c, BlankTableFor(m, s), BlankTableFileName(v.name, s.name));
          return json();
        }
      }
      throw Error(ErrorCode::kNotFound, "no such structure", "structure");
    });
  }

  void QuestionRoutes() {
    Post(R"(/api/varieties/(\d+)/questions/generate)", Access::kLinguist, [this](Ctx& c) {
      Variety v = NeedVariety(c.PathId(1));
      if (!options.provider) throw Error(ErrorCode::kProviderError, "no completion provider configured");
      FeatureSet features = FeatureSet::Parse(NeedString(c.body, "features"));
      std::string reply = options.provider->Complete(BuildQuestionPrompt(features, v.meta_language));
      QuestionTemplate q{0, v.id, features, QuestionTemplateText(reply), /*draft=*/true};
      for (const QuestionTemplate& existing : repo.ListQuestions(v.id)) {
        if (existing.features == features) {
          q.id = existing.id;
          repo.Update(q);
        }
      }
      if (q.id == 0) q.id = repo.Create(q);
      c.res.status = 201;
      return ToJson(*repo.GetQuestion(q.id));
    });
    Post(R"(/api/varieties/(\d+)/questions/(\d+)/approve)", Access::kLinguist, [this](Ctx& c) {
      auto q = repo.GetQuestion(c.PathId(2));
      if (!q || q->variety != c.PathId(1)) throw Error(ErrorCode::kNotFound, "no such question");
      q->draft = false;
      if (c.body.is_object() && c.body.contains("text")) q->text = NeedString(c.body, "text");
      repo.Update(*q);
      return ToJson(*repo.GetQuestion(q->id));
    });
  }
};

ApiServer::ApiServer(Repository& repo, Workflow& workflow, Authenticator& auth, ApiOptions options)
    : impl_(std::make_unique<Impl>(repo, workflow, auth, std::move(options))) {}

ApiServer::~ApiServer() { Stop(); }

int ApiServer::Bind(const std::string& host, int port) {
  // httplib's default adds SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::kPortUnavailable, "cannot listen on " + host + ":" + std::to_string(port),
                "server.port");
  }
  return impl_->port;
}

void ApiServer::Run() { impl_->server.listen_after_bind(); }

void ApiServer::Start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ApiServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const { return impl_->port; }

std::shared_ptr<CompletionProvider> MakeProvider(const ServiceConfig& config) {
  if (config.provider == "http") return std::make_shared<HttpProvider>(config.http);
  if (config.provider == "mock") return std::make_shared<AnalogyMockProvider>();
  return nullptr;
}

struct Service::Parts {
  ServiceConfig config;
  SqliteRepository repo;
  ModelRegistry models;
  std::shared_ptr<CompletionProvider> provider;
  std::unique_ptr<LlmSuggester> llm;
  std::unique_ptr<Workflow> workflow;
  std::unique_ptr<StaticTokenAuthenticator> auth;
  std::unique_ptr<ApiServer> server;

  Parts(ServiceConfig c, std::shared_ptr<CompletionProvider> p, std::function<void(const std::string&)> log)
      : config(std::move(c)), repo(config.database), provider(std::move(p)) {
    if (!provider) provider = MakeProvider(config);
    if (provider) llm = std::make_unique<LlmSuggester>(provider, config.llm);
    workflow = std::make_unique<Workflow>(repo, config.workflow, models, llm.get());
    for (const Variety& v : repo.ListVarieties()) workflow->LoadSavedModel(v.id);
    auth = std::make_unique<StaticTokenAuthenticator>(repo, config.users);
    ApiOptions opts;
    opts.session_ttl_seconds = config.session_ttl_seconds;
    opts.provider = provider;
    opts.log = std::move(log);
    server = std::make_unique<ApiServer>(repo, *workflow, *auth, opts);
  }
};

Service::Service(ServiceConfig config, std::shared_ptr<CompletionProvider> provider,
                 std::function<void(const std::string&)> log)
    : parts_(std::make_unique<Parts>(std::move(config), std::move(provider), std::move(log))) {}

Service::~Service() {
  parts_->server->Stop();
  if (parts_->llm) parts_->llm->WaitIdle();
}

int Service::Start() {
  int port = parts_->server->Bind(parts_->config.host, parts_->config.port);
  parts_->server->Start();
  return port;
}

void Service::Run() {
  parts_->server->Bind(parts_->config.host, parts_->config.port);
  parts_->server->Run();
}

void Service::Stop() { parts_->server->Stop(); }

Repository& Service::repository() { return parts_->repo; }
Workflow& Service::workflow() { return *parts_->workflow; }

}  // namespace morph
