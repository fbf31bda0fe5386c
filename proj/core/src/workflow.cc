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

#include "morph/workflow.h"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include "morph/error.h"
#include "morph/pattern.h"
#include "morph/text.h"

namespace morph {
namespace lifecycle {
namespace {

std::string Normalize(std::string_view form) { return text::Trim(text::Nfc(form)); }

void RequireSpeaker(const User& user) {
  if (user.role != Role::kSpeaker) {
    throw Error(ErrorCode::kNotASpeaker, "user " + user.name + " is not a speaker");
  }
}

[[noreturn]] void Bad(const WordformEntry& e, std::string_view op) {
  throw Error(ErrorCode::kInvalidState, std::string(op) + " is not allowed on a " +
                                            std::string(ToString(e.status)) + " entry");
}

}  // namespace

WordformEntry Submit(const WordformEntry& entry, const User& user, std::string_view form,
                     std::span<const Suggestion> suggestions, std::int64_t now_ms) {
  RequireSpeaker(user);
  if (entry.status != EntryStatus::kEmpty && entry.status != EntryStatus::kSuggested) {
    Bad(entry, "submit");
  }
  std::string normalized = Normalize(form);
  if (normalized.empty()) throw Error(ErrorCode::kEmptyForm, "submitted form is empty", "form");

  Source source = Source::kHuman;
  if (entry.form && Normalize(*entry.form) == normalized && entry.source != Source::kNone) {
    source = entry.source;
  } else {
    std::vector<Suggestion> ordered(suggestions.begin(), suggestions.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const Suggestion& a, const Suggestion& b) {
      return static_cast<int>(a.source) < static_cast<int>(b.source);
    });
    for (const Suggestion& s : ordered) {
      if (Normalize(s.form) == normalized) {
        source = s.source;
        break;
      }
    }
  }

  WordformEntry out = entry;
  out.RecordChange(user.id, now_ms);
  out.form = normalized;
  out.source = source;
  out.status = EntryStatus::kSubmitted;
  out.submitter = user.id;
  out.votes.push_back({user.id, normalized});
  return out;
}

WordformEntry Verify(const WordformEntry& entry, const User& user, bool agree,
                     const std::optional<std::string>& alternative, std::int64_t now_ms) {
  RequireSpeaker(user);
  if (entry.status != EntryStatus::kSubmitted && entry.status != EntryStatus::kFlagged) {
    Bad(entry, "verify");
  }
  if (entry.submitter && *entry.submitter == user.id) {
    throw Error(ErrorCode::kSelfVerification, "the submitter cannot verify their own entry");
  }
  std::string verdict = *entry.form;
  if (!agree) {
    std::string alt = alternative ? Normalize(*alternative) : std::string();
    if (alt.empty()) {
      throw Error(ErrorCode::kEmptyForm, "disagreement needs an alternative form", "alternative");
    }
    verdict = alt;
  }

  WordformEntry out = entry;
  out.RecordChange(user.id, now_ms);
  out.votes.push_back({user.id, verdict});
  if (entry.status == EntryStatus::kSubmitted) {
    if (verdict == *entry.form) {
      out.status = EntryStatus::kVerified;
      out.verified_at_ms = now_ms;
    } else {
      out.status = EntryStatus::kFlagged;
    }
  }
  return out;
}

Tally CountExpertVotes(const WordformEntry& entry, const std::set<Id>& designated_experts) {
  std::map<Id, std::string> latest;
  for (const Vote& v : entry.votes) {
    if (designated_experts.count(v.user)) latest[v.user] = v.form;
  }
  Tally t;
  for (const auto& [user, form] : latest) {
    ++t.votes[form];
    ++t.total;
  }
  return t;
}

Resolution Resolve(const WordformEntry& entry, const std::set<Id>& designated_experts, int quorum,
                   std::optional<Id> actor, std::int64_t now_ms) {
  if (entry.status != EntryStatus::kFlagged) {
    throw Error(ErrorCode::kNotFlagged, "entry " + std::to_string(entry.id) + " is not flagged");
  }
  Resolution r;
  r.tally = CountExpertVotes(entry, designated_experts);
  std::optional<std::string> winner;
  for (const auto& [form, n] : r.tally.votes) {
    if (2 * n > r.tally.total) winner = form;
  }
  if (winner && r.tally.total >= quorum) {
    WordformEntry out = entry;
    out.RecordChange(actor, now_ms);
    out.status = EntryStatus::kResolved;
    if (*winner != entry.form) out.source = Source::kHuman;
    out.form = *winner;
    out.escalated = false;
    out.RecordChange(actor, now_ms);
    out.status = EntryStatus::kVerified;
    out.verified_at_ms = now_ms;
    r.kind = Resolution::Kind::kResolved;
    r.form = winner;
    r.entry = std::move(out);
    return r;
  }
  r.kind = Resolution::Kind::kEscalated;
  r.entry = entry;
  if (!entry.escalated) {
    r.entry.RecordChange(actor, now_ms);
    r.entry.escalated = true;
  }
  return r;
}

WordformEntry Override(const WordformEntry& entry, const User& linguist, std::string_view form,
                       std::int64_t now_ms) {
  if (linguist.role != Role::kLinguist) {
    throw Error(ErrorCode::kForbidden, "only linguists decide escalated entries");
  }
  if (entry.status != EntryStatus::kFlagged) Bad(entry, "override");
  std::string normalized = Normalize(form);
  if (normalized.empty()) throw Error(ErrorCode::kEmptyForm, "decided form is empty", "form");
  WordformEntry out = entry;
  out.RecordChange(linguist.id, now_ms);
  out.form = normalized;
  out.source = Source::kHuman;
  out.status = EntryStatus::kVerified;
  out.verified_at_ms = now_ms;
  out.escalated = false;
  out.votes.clear();
  return out;
}

}  // namespace lifecycle

std::string_view ToString(PipelinePhase phase) {
  return phase == PipelinePhase::kColdStart ? "ColdStart" : "ActiveLearning";
}

std::string_view ToString(TaskMode mode) {
  return mode == TaskMode::kExpertBulk ? "ExpertBulk" : "NonExpertSingle";
}

bool QueueBefore(const TaskQueueItem& a, const TaskQueueItem& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.uncertainty != b.uncertainty) return a.uncertainty > b.uncertainty;
  return a.entry < b.entry;
}

std::shared_ptr<const InflectorModel> ModelRegistry::Get(Id variety) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = models_.find(variety);
  return it == models_.end() ? nullptr : it->second;
}

void ModelRegistry::Put(Id variety, std::shared_ptr<const InflectorModel> model) {
  std::lock_guard<std::mutex> lock(mu_);
  models_[variety] = std::move(model);
}

bool ModelRegistry::TryBeginTraining(Id variety) {
  std::lock_guard<std::mutex> lock(mu_);
  return training_.insert(variety).second;
}

void ModelRegistry::EndTraining(Id variety) {
  std::lock_guard<std::mutex> lock(mu_);
  training_.erase(variety);
}

bool ModelRegistry::Training(Id variety) const {
  std::lock_guard<std::mutex> lock(mu_);
  return training_.count(variety) > 0;
}

Workflow::Workflow(Repository& repo, WorkflowConfig config, ModelRegistry& models, LlmSuggester* llm,
                   Clock clock)
    : repo_(repo), config_(std::move(config)), models_(models), llm_(llm), clock_(std::move(clock)) {}

Workflow::~Workflow() {
  std::lock_guard<std::mutex> lock(jobs_mu_);
  for (auto& job : jobs_) job.wait();
}

std::int64_t Workflow::Now() {
  if (clock_) return clock_();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

PipelinePhase Workflow::Phase(Id variety) {
  CellFilter verified;
  verified.status = EntryStatus::kVerified;
  return repo_.CountCells(variety, verified) < config_.n_train ? PipelinePhase::kColdStart
                                                               : PipelinePhase::kActiveLearning;
}

std::vector<WordformEntry> Workflow::AllCells(Id variety, const CellFilter& filter) {
  std::vector<WordformEntry> out;
  for (std::int64_t offset = 0;; offset += kMaxPageSize) {
    std::vector<WordformEntry> page = repo_.QueryCells(variety, filter, {offset, kMaxPageSize});
    out.insert(out.end(), std::make_move_iterator(page.begin()), std::make_move_iterator(page.end()));
    if (page.size() < static_cast<size_t>(kMaxPageSize)) break;
  }
  return out;
}

int Workflow::GenerateEntries(Id variety) {
  int created = 0;
  repo_.Transaction([&] {
    Materials m = LoadMaterials(repo_, variety);
    std::map<Id, std::set<FeatureSet>> existing;
    for (const WordformEntry& e : AllCells(variety, {})) existing[e.lemma].insert(e.features);
    for (const ParadigmStructure& s : m.structures) {
      RewriteCascade cascade(RulesFor(m.rules, s.inflection_class));
      for (const Lemma& l : m.lemmas) {
        if (l.inflection_class != s.inflection_class) continue;
        for (WordformEntry& e : ExpandParadigm(l, s, m.layers, cascade)) {
          if (existing[l.id].insert(e.features).second) {
            repo_.Create(e);
            ++created;
          }
        }
      }
    }
  });
  return created;
}

std::vector<VerifiedCell> Workflow::VerifiedPool(Id variety, std::vector<WordformEntry>& entries,
                                                 std::map<Id, Lemma>& lemmas) {
  CellFilter verified;
  verified.status = EntryStatus::kVerified;
  entries = AllCells(variety, verified);
  for (Lemma& l : repo_.ListLemmas(variety)) lemmas.emplace(l.id, std::move(l));
  std::vector<VerifiedCell> pool;
  for (const WordformEntry& e : entries) {
    auto it = lemmas.find(e.lemma);
    if (it != lemmas.end()) pool.push_back({&e, &it->second});
  }
  return pool;
}

std::vector<Suggestion> Workflow::SuggestionsFor(const WordformEntry& entry, bool block_on_llm) {
  std::vector<Suggestion> out;
  if (entry.source == Source::kRule && entry.form &&
      (entry.status == EntryStatus::kSuggested || entry.status == EntryStatus::kEmpty)) {
    out.push_back({*entry.form, Source::kRule, std::nullopt});
  }
  std::optional<Lemma> lemma = repo_.GetLemma(entry.lemma);
  if (!lemma) return out;
  if (auto model = models_.Get(lemma->variety)) {
    Prediction p = model->Predict(*lemma, entry.features);
    if (!p.form.empty()) out.push_back({p.form, Source::kNeural, 1.0 - p.uncertainty});
  }
  if (llm_) {
    std::vector<WordformEntry> verified;
    std::map<Id, Lemma> lemmas;
    std::vector<VerifiedCell> pool = VerifiedPool(lemma->variety, verified, lemmas);
    std::optional<Variety> variety = repo_.GetVariety(lemma->variety);
    if (auto prompt = llm_->PromptFor(*variety, *lemma, entry, pool)) {
      std::optional<std::string> answer =
          block_on_llm ? llm_->Suggest(*prompt) : llm_->Poll(lemma->variety, *prompt);
      if (answer) out.push_back({*answer, Source::kLlm, std::nullopt});
    }
  }
  return out;
}

std::vector<TaskQueueItem> Workflow::NextTasks(const User& user, Id variety, int limit) {
  if (user.role != Role::kSpeaker) {
    throw Error(ErrorCode::kNotASpeaker, "user " + user.name + " is not a speaker");
  }
  const bool expert = user.expertise == Expertise::kExpert;
  if (!expert) limit = 1;
  if (limit <= 0) return {};

  std::optional<Variety> v = repo_.GetVariety(variety);
  if (!v) throw Error(ErrorCode::kUnknownVariety, "no variety " + std::to_string(variety));
  std::map<Id, Lemma> lemmas;
  for (Lemma& l : repo_.ListLemmas(variety)) lemmas.emplace(l.id, std::move(l));

  std::vector<WordformEntry> candidates;
  for (EntryStatus s : {EntryStatus::kEmpty, EntryStatus::kSuggested}) {
    CellFilter f;
    f.status = s;
    std::vector<WordformEntry> part = AllCells(variety, f);
    candidates.insert(candidates.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
  }

  std::shared_ptr<const InflectorModel> model = models_.Get(variety);
  std::vector<Prediction> predictions;
  if (model && !candidates.empty()) {
    std::vector<TokenSequence> inputs;
    inputs.reserve(candidates.size());
    for (const WordformEntry& e : candidates) inputs.push_back(Encode(lemmas.at(e.lemma), e.features));
    predictions = model->PredictBatch(inputs);
  }
  const bool active = Phase(variety) == PipelinePhase::kActiveLearning;

  std::vector<TaskQueueItem> items;
  items.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const WordformEntry& e = candidates[i];
    const Lemma& l = lemmas.at(e.lemma);
    TaskQueueItem item;
    item.entry = e.id;
    item.lemma = e.lemma;
    item.citation_form = l.citation_form;
    item.features = e.features;
    item.status = e.status;
    item.version = e.version;
    item.priority = std::max(l.priority, e.slot_priority);
    item.uncertainty = active && model ? predictions[i].uncertainty : 0.0;
    item.mode = expert ? TaskMode::kExpertBulk : TaskMode::kNonExpertSingle;
    items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end(), QueueBefore);

  std::vector<size_t> chosen;
  if (expert) {
    // Whole lemmas at a time, lemmas ordered by their best-placed cell.
    std::vector<Id> lemma_order;
    std::map<Id, std::vector<size_t>> by_lemma;
    for (size_t i = 0; i < items.size(); ++i) {
      auto& bucket = by_lemma[items[i].lemma];
      if (bucket.empty()) lemma_order.push_back(items[i].lemma);
      bucket.push_back(i);
    }
    for (Id lemma : lemma_order) {
      for (size_t i : by_lemma[lemma]) {
        if (static_cast<int>(chosen.size()) == limit) break;
        chosen.push_back(i);
      }
    }
  } else {
    for (size_t i = 0; i < items.size() && static_cast<int>(chosen.size()) < limit; ++i) chosen.push_back(i);
  }

  std::map<Id, size_t> candidate_index;
  for (size_t i = 0; i < candidates.size(); ++i) candidate_index[candidates[i].id] = i;
  std::vector<WordformEntry> verified;
  std::map<Id, Lemma> pool_lemmas;
  std::vector<VerifiedCell> pool;
  if (llm_) pool = VerifiedPool(variety, verified, pool_lemmas);
  std::vector<QuestionTemplate> questions;
  if (!expert) questions = repo_.ListQuestions(variety);

  std::vector<TaskQueueItem> out;
  for (size_t i : chosen) {
    TaskQueueItem item = items[i];
    const size_t ci = candidate_index.at(item.entry);
    const WordformEntry& e = candidates[ci];
    const Lemma& l = lemmas.at(e.lemma);
    std::vector<Suggestion> suggestions;
    if (e.source == Source::kRule && e.form) suggestions.push_back({*e.form, Source::kRule, std::nullopt});
    if (model && !predictions[ci].form.empty()) {
      suggestions.push_back({predictions[ci].form, Source::kNeural, 1.0 - predictions[ci].uncertainty});
    }
    if (llm_) {
      if (auto prompt = llm_->PromptFor(*v, l, e, pool)) {
        if (auto answer = llm_->Poll(variety, *prompt)) suggestions.push_back({*answer, Source::kLlm, std::nullopt});
      }
    }
    item.presentation = Aggregate(suggestions);
    if (!expert) {
      for (const QuestionTemplate& q : questions) {
        if (!q.draft && q.features == e.features) {
          item.question = q.Render(l.gloss.empty() ? l.citation_form : l.gloss);
          break;
        }
      }
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<TaskQueueItem> Workflow::NextReviews(const User& user, Id variety, int limit) {
  if (user.role != Role::kSpeaker) {
    throw Error(ErrorCode::kNotASpeaker, "user " + user.name + " is not a speaker");
  }
  if (user.expertise != Expertise::kExpert) limit = std::min(limit, 1);
  std::map<Id, Lemma> lemmas;
  for (Lemma& l : repo_.ListLemmas(variety)) lemmas.emplace(l.id, std::move(l));
  std::vector<TaskQueueItem> out;
  for (EntryStatus s : {EntryStatus::kSubmitted, EntryStatus::kFlagged}) {
    CellFilter f;
    f.status = s;
    for (const WordformEntry& e : AllCells(variety, f)) {
      if (static_cast<int>(out.size()) >= limit) return out;
      if (e.submitter == user.id) continue;
      const Lemma& l = lemmas.at(e.lemma);
      TaskQueueItem item;
      item.entry = e.id;
      item.lemma = e.lemma;
      item.citation_form = l.citation_form;
      item.features = e.features;
      item.status = e.status;
      item.version = e.version;
      item.priority = std::max(l.priority, e.slot_priority);
      item.mode = user.expertise == Expertise::kExpert ? TaskMode::kExpertBulk : TaskMode::kNonExpertSingle;
      item.voted_forms = e.DistinctVotedForms();
      out.push_back(std::move(item));
    }
  }
  return out;
}

WordformEntry Workflow::Load(Id entry, std::optional<std::int64_t> expected_version) {
  std::optional<WordformEntry> e = repo_.GetEntry(entry);
  if (!e) throw Error(ErrorCode::kNotFound, "no entry " + std::to_string(entry));
  if (expected_version && *expected_version != e->version) {
    throw Error(ErrorCode::kStaleVersion, "entry " + std::to_string(entry) + " is at version " +
                                              std::to_string(e->version) + ", expected " +
                                              std::to_string(*expected_version));
  }
  return *e;
}

WordformEntry Workflow::Store(const WordformEntry& before, const WordformEntry& after) {
  if (after.version == before.version) return before;
  WordformEntry saved;
  repo_.Transaction([&] {
    // One CAS write per state change, so stored history stays append-only.
    for (std::int64_t v = before.version + 1; v <= after.version; ++v) {
      WordformEntry step = after;
      if (v < after.version) {
        const HistoryRecord& state = after.history[static_cast<size_t>(v - 1)];
        step.form = state.form;
        step.status = state.status;
        step.source = state.source;
      }
      step.history.resize(static_cast<size_t>(v - 1));
      step.version = v;
      saved = repo_.SaveEntryCas(step, v - 1);
    }
  });
  return saved;
}

std::set<Id> Workflow::DesignatedExperts() {
  std::set<Id> out;
  for (const User& u : repo_.ListUsers()) {
    if (u.designated_expert) out.insert(u.id);
  }
  return out;
}

void Workflow::AfterVerified(Id entry) {
  if (config_.auto_retrain) MaybeRetrain(repo_.VarietyOfEntry(entry));
}

WordformEntry Workflow::SubmitForm(const User& user, Id entry, const std::string& form,
                                   std::optional<std::int64_t> expected_version) {
  WordformEntry before = Load(entry, expected_version);
  std::vector<Suggestion> suggestions;
  if (before.status == EntryStatus::kEmpty || before.status == EntryStatus::kSuggested) {
    suggestions = SuggestionsFor(before);
  }
  return Store(before, lifecycle::Submit(before, user, form, suggestions, Now()));
}

WordformEntry Workflow::VerifyForm(const User& user, Id entry, bool agree,
                                   const std::optional<std::string>& alternative,
                                   std::optional<std::int64_t> expected_version) {
  WordformEntry before = Load(entry, expected_version);
  WordformEntry saved = Store(before, lifecycle::Verify(before, user, agree, alternative, Now()));
  if (saved.status == EntryStatus::kVerified) AfterVerified(entry);
  return saved;
}

lifecycle::Resolution Workflow::ResolveFlag(Id entry, std::optional<Id> actor) {
  WordformEntry before = Load(entry, std::nullopt);
  lifecycle::Resolution r = lifecycle::Resolve(before, DesignatedExperts(), config_.quorum, actor, Now());
  r.entry = Store(before, r.entry);
  if (r.kind == lifecycle::Resolution::Kind::kResolved) AfterVerified(entry);
  return r;
}

WordformEntry Workflow::Override(const User& linguist, Id entry, const std::string& form,
                                 std::optional<std::int64_t> expected_version) {
  WordformEntry before = Load(entry, expected_version);
  WordformEntry saved = Store(before, lifecycle::Override(before, linguist, form, Now()));
  AfterVerified(entry);
  return saved;
}

std::vector<WordformEntry> Workflow::Escalations(Id variety) {
  CellFilter flagged;
  flagged.status = EntryStatus::kFlagged;
  std::vector<WordformEntry> out;
  for (WordformEntry& e : AllCells(variety, flagged)) {
    if (e.escalated) out.push_back(std::move(e));
  }
  return out;
}

TrainingOutcome Workflow::RunTraining(Id variety) {
  std::vector<WordformEntry> verified;
  std::map<Id, Lemma> lemmas;
  VerifiedPool(variety, verified, lemmas);
  std::vector<TrainingExample> examples;
  for (const WordformEntry& e : verified) examples.push_back(MakeExample(lemmas.at(e.lemma), e));
  TrainResult result = Train(examples, config_.train, config_.model);
  auto model = std::make_shared<const InflectorModel>(std::move(result.model));
  if (!config_.model_dir.empty()) {
    std::filesystem::create_directories(config_.model_dir);
    model->SaveFile((std::filesystem::path(config_.model_dir) / (std::to_string(variety) + ".cmnn")).string());
  }
  models_.Put(variety, model);
  TrainingState state = repo_.GetTrainingState(variety);
  state.verified_at_last_train = static_cast<std::int64_t>(examples.size());
  state.trained_at_ms = Now();
  ++state.runs;
  repo_.SetTrainingState(variety, state);
  return TrainingOutcome{static_cast<int>(examples.size()), result.loss_curve};
}

std::optional<std::shared_future<TrainingOutcome>> Workflow::MaybeRetrain(Id variety, bool force) {
  if (!force) {
    CellFilter verified;
    verified.status = EntryStatus::kVerified;
    const std::int64_t count = repo_.CountCells(variety, verified);
    const TrainingState state = repo_.GetTrainingState(variety);
    if (count < config_.n_train || count - state.verified_at_last_train < config_.delta_n) {
      return std::nullopt;
    }
  }
  if (!models_.TryBeginTraining(variety)) return std::nullopt;
  std::shared_future<TrainingOutcome> job =
      std::async(std::launch::async, [this, variety] {
        struct Release {
          ModelRegistry& models;
          Id variety;
          ~Release() { models.EndTraining(variety); }
        } release{models_, variety};
        return RunTraining(variety);
      }).share();
  std::lock_guard<std::mutex> lock(jobs_mu_);
  jobs_.push_back(job);
  return job;
}

bool Workflow::LoadSavedModel(Id variety) {
  if (config_.model_dir.empty()) return false;
  std::filesystem::path p = std::filesystem::path(config_.model_dir) / (std::to_string(variety) + ".cmnn");
  if (!std::filesystem::exists(p)) return false;
  models_.Put(variety, std::make_shared<const InflectorModel>(InflectorModel::LoadFile(p.string())));
  return true;
}

}  // namespace morph
