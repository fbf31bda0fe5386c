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

#ifndef MORPH_WORKFLOW_H_
#define MORPH_WORKFLOW_H_

#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "morph/domain.h"
#include "morph/ensemble.h"
#include "morph/inflector.h"
#include "morph/llm.h"
#include "morph/storage.h"

namespace morph {

// Entry lifecycle as pure functions. Each successful call appends exactly one
// history record per status change and bumps the version accordingly; none
// touch storage.
namespace lifecycle {

// Empty|Suggested -> Submitted. The source stays that of the matching
// suggestion when the form confirms one, otherwise becomes Human. Throws
// kNotASpeaker, kInvalidState, kEmptyForm.
WordformEntry Submit(const WordformEntry& entry, const User& user, std::string_view form,
                     std::span<const Suggestion> suggestions, std::int64_t now_ms);

// Submitted -> Verified on agreement, Submitted -> Flagged on a differing
// alternative. On a Flagged entry the verdict is recorded as a vote and the
// status stays Flagged. Throws kNotASpeaker, kInvalidState,
// kSelfVerification, kEmptyForm (disagreement without an alternative).
WordformEntry Verify(const WordformEntry& entry, const User& user, bool agree,
                     const std::optional<std::string>& alternative, std::int64_t now_ms);

struct Tally {
  std::map<std::string, int> votes;  // latest vote of each designated expert
  int total = 0;
};
Tally CountExpertVotes(const WordformEntry& entry, const std::set<Id>& designated_experts);

struct Resolution {
  enum class Kind { kResolved, kEscalated };
  Kind kind = Kind::kEscalated;
  std::optional<std::string> form;
  Tally tally;
  WordformEntry entry;
};

// Strict expert majority with at least `quorum` expert votes: Flagged ->
// Resolved -> Verified with the winning form. Otherwise the entry stays
// Flagged with the escalation marker set. Throws kNotFlagged.
Resolution Resolve(const WordformEntry& entry, const std::set<Id>& designated_experts, int quorum,
                   std::optional<Id> actor, std::int64_t now_ms);

// Linguist decision on a Flagged entry, final: Verified, source Human, votes
// closed. Throws kForbidden, kInvalidState, kEmptyForm.
WordformEntry Override(const WordformEntry& entry, const User& linguist, std::string_view form,
                       std::int64_t now_ms);

}  // namespace lifecycle

enum class PipelinePhase { kColdStart, kActiveLearning };
enum class TaskMode { kExpertBulk, kNonExpertSingle };
std::string_view ToString(PipelinePhase phase);
std::string_view ToString(TaskMode mode);

struct TaskQueueItem {
  Id entry = 0;
  Id lemma = 0;
  std::string citation_form;
  FeatureSet features;
  EntryStatus status = EntryStatus::kEmpty;
  std::int64_t version = 1;
  int priority = 0;
  double uncertainty = 0.0;
  TaskMode mode = TaskMode::kExpertBulk;
  Presentation presentation;
  std::optional<std::string> question;
  // Review items only: the forms voted for so far.
  std::vector<std::string> voted_forms;
};

// Queue order: priority desc, uncertainty desc, entry id asc.
bool QueueBefore(const TaskQueueItem& a, const TaskQueueItem& b);

struct WorkflowConfig {
  int n_train = 100;   // verified entries before the first training run
  int delta_n = 100;   // new verified entries between runs
  int quorum = 3;      // expert votes needed to resolve a flag
  bool auto_retrain = true;
  TrainConfig train;
  ModelConfig model;
  // Where trained models are written as <variety id>.cmnn; empty = memory only.
  std::string model_dir;
};

// Latest model snapshot per variety. Readers get an immutable shared
// pointer; publishing a new snapshot never disturbs readers of the old one.
class ModelRegistry {
 public:
  std::shared_ptr<const InflectorModel> Get(Id variety) const;
  void Put(Id variety, std::shared_ptr<const InflectorModel> model);

  // At most one training job per variety.
  bool TryBeginTraining(Id variety);
  void EndTraining(Id variety);
  bool Training(Id variety) const;

 private:
  mutable std::mutex mu_;
  std::map<Id, std::shared_ptr<const InflectorModel>> models_;
  std::set<Id> training_;
};

struct TrainingOutcome {
  int examples = 0;
  std::vector<double> loss_curve;
};

// The elicitation loop over a repository.
class Workflow {
 public:
  using Clock = std::function<std::int64_t()>;

  Workflow(Repository& repo, WorkflowConfig config, ModelRegistry& models,
           LlmSuggester* llm = nullptr, Clock clock = {});
  ~Workflow();

  const WorkflowConfig& config() const { return config_; }
  Repository& repository() { return repo_; }
  ModelRegistry& models() { return models_; }

  PipelinePhase Phase(Id variety);

  // Expands every lemma's paradigm into entries (rule suggestions where the
  // patterns render). Existing cells are left alone. Returns the number of
  // entries created.
  int GenerateEntries(Id variety);

  // Fresh suggestions for one cell from rules, the current model snapshot
  // and the LLM cache.
  std::vector<Suggestion> SuggestionsFor(const WordformEntry& entry, bool block_on_llm = false);

  // Throws kNotASpeaker.
  std::vector<TaskQueueItem> NextTasks(const User& user, Id variety, int limit);
  // Submitted entries the user may verify (not their own), oldest first.
  std::vector<TaskQueueItem> NextReviews(const User& user, Id variety, int limit);

  // `expected_version`, when given, must match the stored version.
  WordformEntry SubmitForm(const User& user, Id entry, const std::string& form,
                           std::optional<std::int64_t> expected_version = std::nullopt);
  WordformEntry VerifyForm(const User& user, Id entry, bool agree,
                           const std::optional<std::string>& alternative,
                           std::optional<std::int64_t> expected_version = std::nullopt);
  lifecycle::Resolution ResolveFlag(Id entry, std::optional<Id> actor = std::nullopt);
  WordformEntry Override(const User& linguist, Id entry, const std::string& form,
                         std::optional<std::int64_t> expected_version = std::nullopt);
  // Flagged entries carrying the escalation marker.
  std::vector<WordformEntry> Escalations(Id variety);

  // Launches a training job when thresholds are met (or `force`), unless one
  // is already running for the variety. The returned future completes when
  // the new snapshot is published.
  std::optional<std::shared_future<TrainingOutcome>> MaybeRetrain(Id variety, bool force = false);

  // Loads <model_dir>/<variety>.cmnn into the registry if present.
  bool LoadSavedModel(Id variety);

 private:
  WordformEntry Load(Id entry, std::optional<std::int64_t> expected_version);
  WordformEntry Store(const WordformEntry& before, const WordformEntry& after);
  std::set<Id> DesignatedExperts();
  std::vector<WordformEntry> AllCells(Id variety, const CellFilter& filter);
  std::vector<VerifiedCell> VerifiedPool(Id variety, std::vector<WordformEntry>& entries,
                                         std::map<Id, Lemma>& lemmas);
  TrainingOutcome RunTraining(Id variety);
  void AfterVerified(Id entry);
  std::int64_t Now();

  Repository& repo_;
  WorkflowConfig config_;
  ModelRegistry& models_;
  LlmSuggester* llm_;
  Clock clock_;
  std::mutex jobs_mu_;
  std::vector<std::shared_future<TrainingOutcome>> jobs_;
};

}  // namespace morph

#endif  // MORPH_WORKFLOW_H_
