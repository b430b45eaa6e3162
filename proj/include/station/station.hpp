// Copyright 2026 The Data Station Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "station/catalog.hpp"
#include "station/config.hpp"
#include "station/discovery.hpp"
#include "station/executor.hpp"
#include "station/market.hpp"
#include "station/policy.hpp"
#include "station/store.hpp"

namespace station {

enum class SubmissionStatus { kRunning, kBlocked, kSatisfied, kUnsatisfied };

std::string_view submission_status_name(SubmissionStatus status);

/// A capsule as submitted by one user, with its latest execution state.
struct Submission {
  std::string id;
  std::string fingerprint;
  std::string user;
  TaskCapsule capsule;
  SubmissionStatus status = SubmissionStatus::kRunning;
  std::vector<std::string> task_ids;
  std::optional<std::string> result_id;
  double best_dos = 0;
  std::string note;
  /// Executions so far, including resumptions after answered tasks.
  int runs = 0;
};

/// Policy supplied with an upload; the dataset id is filled in by the station.
struct UploadPolicy {
  bool discoverable = true;
  AccessMode access = AccessMode::kClosed;
  bool derivation_allowed = true;
  std::set<TaskType> allowed_task_types;
  std::optional<DpFilter> dp_filter;
};

struct AnswerOutcome {
  Answer answer;
  HumanTask task;
  /// Submissions re-executed because the answered task blocked them.
  std::vector<Submission> resumed;
};

/// The station: every module wired together behind one lock. All external
/// surfaces (HTTP, CLI, demo) go through this class.
class Station {
 public:
  explicit Station(StationConfig config);

  const StationConfig& config() const { return config_; }
  std::optional<UserIdentity> authenticate(std::string_view secret) const;

  // Datasets -----------------------------------------------------------
  /// Signature-checked ingest plus policy registration, profiling and
  /// indexing. Throws Forbidden when `who` does not hold the signing key.
  DatasetId upload(const Principal& who, const IngestRequest& request, const UploadPolicy& policy);
  int update(const Principal& who, const DatasetId& id, std::string_view content,
             std::string_view signature);
  /// Right to be forgotten: deletes `id` and every derived descendant,
  /// revokes tokens over them and purges cached results. Owner only.
  std::set<DatasetId> forget(const Principal& who, const DatasetId& id);
  /// Deletes datasets older than the retention limit.
  std::set<DatasetId> enforce_retention();

  /// Public catalog records visible to `who`.
  std::vector<ProfileSet> search_catalog(const Principal& who, const CatalogQuery& query) const;

  // Capsules -------------------------------------------------------------
  Submission submit(const Principal& who, const TaskCapsule& capsule);
  /// Throws NotFound for unknown ids and ids of other users.
  Submission submission(const Principal& who, const std::string& id) const;
  std::vector<Submission> submissions_of(const Principal& who) const;

  ReleaseOutcome release(const Principal& who, const std::string& result_id,
                         const std::vector<std::string>& tokens);
  std::string predict(const Principal& who, const DatasetId& model,
                      const std::map<std::string, std::string>& row);

  // Brokered access --------------------------------------------------------
  /// Access decision for `who` on `dataset`; files a pending request when
  /// the dataset is brokered and no approval exists yet.
  AccessVerdict request_access(const Principal& who, const DatasetId& dataset, TaskType task,
                               const std::string& capsule_fingerprint);
  /// Requests on `who`'s datasets plus requests `who` made.
  std::vector<AccessRequest> access_requests(const Principal& who) const;
  PolicyEngine::Decision decide(const Principal& who, const std::string& request_id, bool approve,
                                const TokenGrant& grant);
  TokenVerdict verify_token(std::string_view wire, const Principal& who,
                            const std::set<DatasetId>& needed);

  // Market -----------------------------------------------------------------
  std::vector<HumanTask> tasks_for(const Principal& who) const;
  HumanTask claim(const Principal& who, const std::string& task_id);
  /// Records the answer, applies it to the linkage graph or the catalog,
  /// and re-executes every submission the task was blocking.
  AnswerOutcome answer(const Principal& who, const std::string& task_id,
                       const AnswerContent& content);
  std::int64_t balance(const Principal& who) const;
  void fund(const std::string& user, std::int64_t amount);

  std::string audit_log() const;

  // Components, for in-process callers and tests.
  Store& store() { return *store_; }
  PolicyEngine& policy() { return *policy_; }
  Catalog& catalog() { return *catalog_; }
  DiscoveryIndex& index() { return *index_; }
  Market& market() { return *market_; }
  Executor& executor() { return *executor_; }
  const Clock& clock() const { return *clock_; }
  /// Non-null when the configuration freezes the clock.
  ManualClock* manual_clock() { return manual_clock_; }

 private:
  void run(Submission& s);
  void reindex(const DatasetId& id);

  StationConfig config_;
  std::unique_ptr<Clock> clock_;
  ManualClock* manual_clock_ = nullptr;
  std::unique_ptr<IdSource> ids_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<PolicyEngine> policy_;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<DiscoveryIndex> index_;
  std::unique_ptr<Market> market_;
  std::unique_ptr<Executor> executor_;

  mutable std::recursive_mutex mu_;
  std::map<std::string, Submission> submissions_;
  std::vector<std::string> submission_order_;
};

}  // namespace station
