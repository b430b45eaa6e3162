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

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "station/blending.hpp"
#include "station/capsule.hpp"
#include "station/catalog.hpp"
#include "station/discovery.hpp"
#include "station/market.hpp"
#include "station/policy.hpp"
#include "station/store.hpp"

namespace station {

/// Nearest-centroid classifier over standardized numeric features plus
/// per-class modes of text features. Training is deterministic.
class BaselineClassifier {
 public:
  /// Every column except `label_column` is a feature. Numeric features are
  /// standardized by the training mean and population standard deviation;
  /// a zero deviation drops the feature.
  static BaselineClassifier train(const Table& table, std::string_view label_column);

  /// argmin over classes of Euclidean distance on z-scores plus Hamming
  /// distance on text modes; ties go to the higher prior, then the smaller
  /// label. `row` is keyed by column name; missing numeric features score 0.
  std::string predict(const std::map<std::string, std::string>& row) const;
  /// Fraction of rows of `test` whose label column matches the prediction,
  /// compared in normalized text form. Throws SchemaMismatch when `test`
  /// lacks the label or a feature column.
  double accuracy(const Table& test) const;

  std::vector<std::string> classes() const;
  const std::string& label_column() const { return label_; }
  std::vector<std::string> feature_columns() const;

  std::string to_json() const;
  static BaselineClassifier from_json(std::string_view text);

 private:
  struct NumericFeature {
    std::string name;
    double mean = 0;
    double stddev = 1;
  };
  struct ClassModel {
    std::vector<double> centroid;       // z-space, one per numeric feature
    std::vector<std::string> modes;     // one per text feature
    double prior = 0;
  };

  std::string label_;
  std::vector<NumericFeature> numeric_;
  std::vector<std::string> text_;
  std::map<std::string, ClassModel> classes_;
};

struct DosResult {
  /// Normalized degree of satisfaction in [0,1].
  double dos = 0;
  /// Unnormalized measure: hits for search, else equal to `dos`.
  double raw = 0;
};

/// Degree of satisfaction of `input` for the capsule.
///   search:   `input` has one row per matching asset in its first column;
///             dos = min(hits / threshold, 1).
///   qbe:      fraction of example rows equal, attribute by attribute after
///             `example_transforms`, to some single input row.
///   classify: accuracy on the capsule's test data of a classifier trained
///             on `input`.
/// Throws SchemaMismatch when `input` lacks a target column.
DosResult evaluate_dos(const TaskCapsule& capsule, const Table& input,
                       const std::map<std::string, Transform>& example_transforms = {});

struct ExecutionBudget {
  std::size_t max_candidates = 25;
  double max_seconds = 60;
};

enum class CacheOutcome { kSatisfied, kUnsatisfied };

struct ResultCacheEntry {
  std::string fingerprint;
  std::vector<DatasetId> assets;
  double dos = 0;
  CacheOutcome outcome = CacheOutcome::kUnsatisfied;
  Timestamp at = 0;
  /// Derived table or model the evaluation produced.
  std::optional<DatasetId> product;
  /// Training table behind a model product.
  std::optional<DatasetId> training_table;
  /// Contributing datasets behind the product.
  std::set<DatasetId> contributors;
};

/// Evaluations keyed by capsule fingerprint and candidate asset list.
class ResultCache {
 public:
  void upsert(ResultCacheEntry entry);
  std::optional<ResultCacheEntry> find(const std::string& fingerprint,
                                       const std::vector<DatasetId>& assets) const;
  std::vector<ResultCacheEntry> entries(const std::string& fingerprint) const;
  /// Drops every entry whose assets, contributors or product touch `ids`.
  void purge(const std::set<DatasetId>& ids);
  /// Every dataset id referenced anywhere in the cache.
  std::set<DatasetId> referenced() const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::map<std::vector<DatasetId>, ResultCacheEntry>> entries_;
};

enum class ReleaseState { kSealed, kReleased };
std::string_view release_state_name(ReleaseState state);

struct TaskResult {
  std::string id;
  std::string fingerprint;
  std::string user;
  TaskType task_type = TaskType::kSearch;
  /// search: matching assets.
  std::vector<DatasetId> hits;
  /// qbe: derived table. classify: model.
  std::optional<DatasetId> product;
  /// classify: the training table behind the model.
  std::optional<DatasetId> training_table;
  DosResult dos;
  std::set<DatasetId> contributors;
  ReleaseState state = ReleaseState::kSealed;
  Timestamp created_at = 0;
};

struct ExecutionOutcome {
  enum class Status { kSatisfied, kBlocked, kUnsatisfied };
  Status status = Status::kUnsatisfied;
  std::optional<TaskResult> result;
  std::vector<std::string> task_ids;
  double best_dos = 0;
  std::size_t candidates_evaluated = 0;
  std::size_t materializations = 0;
  /// Why a blocked capsule could not post its tasks, if it could not.
  std::string note;
};

std::string_view outcome_status_name(ExecutionOutcome::Status status);

/// Append-only JSON-lines record of candidate evaluations:
/// {"timestamp","fingerprint","assets","governance","dos","outcome"}.
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path path);
  void append(Timestamp at, const std::string& fingerprint, const std::vector<DatasetId>& assets,
              std::string_view governance, std::optional<double> dos, std::string_view outcome);
  std::string read() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

struct ReleaseDenial {
  DatasetId dataset;
  /// Revoked, Closed, Denied, NeedsApproval, TokenRequired, DpModelBlocked,
  /// BudgetExhausted, or a token deny reason.
  std::string reason;
  std::optional<std::string> request_id;
};

struct ReleasedContent {
  /// text/csv for qbe tables, application/json otherwise.
  std::string media_type;
  std::string body;
};

struct ReleaseOutcome {
  bool released = false;
  std::vector<ReleaseDenial> denials;
  ReleasedContent content;
};

/// Budgeted evaluation of discovery candidates and mediated release of the
/// sealed results.
class Executor {
 public:
  Executor(Store& store, Catalog& catalog, DiscoveryIndex& index, PolicyEngine& policy,
           Market& market, const Clock& clock, IdSource& ids, BlendConfig blend,
           std::filesystem::path audit_path);

  ExecutionOutcome execute(const TaskCapsule& capsule, const Principal& user,
                           const ExecutionBudget& budget = {});

  /// Released content, or the per-dataset reasons it stays sealed. Throws
  /// NotFound for unknown results and results of other users.
  ReleaseOutcome release(const std::string& result_id, const Principal& user,
                         const std::vector<std::string>& tokens = {});

  /// Label predicted by a released model. Throws NotFound for unknown
  /// models, Revoked for deleted ones, AccessDenied when `user` has no
  /// released result serving it.
  std::string predict(const DatasetId& model, const Principal& user,
                      const std::map<std::string, std::string>& row);

  /// Forgets cached evaluations and results touching deleted assets.
  void purge(const std::set<DatasetId>& deleted);
  /// Forgets cached evaluations over changed assets; results stay.
  void invalidate(const std::set<DatasetId>& changed) { cache_.purge(changed); }

  std::optional<TaskResult> result(const std::string& id) const;
  const ResultCache& cache() const { return cache_; }
  const AuditLog& audit() const { return audit_; }

 private:
  struct Evaluation {
    std::optional<ResultCacheEntry> entry;
    std::optional<Ambiguity> block;
  };

  std::function<bool(const DatasetId&)> admissible(const Principal& user,
                                                   const TaskCapsule& capsule,
                                                   const TrustConstraints& trust) const;
  ExecutionOutcome execute_search(const TaskCapsule& capsule, const std::string& fp,
                                  const Principal& user, const ExecutionBudget& budget);
  Evaluation evaluate(const Candidate& candidate, const TaskCapsule& capsule,
                      const std::string& fp, std::size_t& materializations);
  std::vector<std::string> post_tasks(const std::vector<Ambiguity>& blocks, const std::string& fp,
                                      const Principal& user);
  TaskResult make_result(const TaskCapsule& capsule, const std::string& fp, const Principal& user,
                         const ResultCacheEntry& entry);
  ReleasedContent content_of(const TaskResult& result) const;

  Store& store_;
  Catalog& catalog_;
  DiscoveryIndex& index_;
  PolicyEngine& policy_;
  Market& market_;
  const Clock& clock_;
  IdSource& ids_;
  Blender blender_;
  ResultCache cache_;
  AuditLog audit_;

  mutable std::shared_mutex mu_;
  std::map<std::string, TaskResult> results_;
  /// Results whose contributors were deleted: id -> (user, deleted contributors).
  std::map<std::string, std::pair<std::string, std::set<DatasetId>>> revoked_results_;
};

}  // namespace station
