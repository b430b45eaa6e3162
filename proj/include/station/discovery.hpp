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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "station/capsule.hpp"
#include "station/catalog.hpp"
#include "station/common.hpp"

namespace station {

struct DiscoveryConfig {
  double w_keyword = 0.3;
  double w_coverage = 0.4;
  double w_overlap = 0.3;
  double join_threshold = 0.5;
  std::size_t max_candidates = 25;
};

struct ColumnRef {
  DatasetId asset;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
};

/// Candidate join between columns of two different assets; a.asset < b.asset.
struct LinkEdge {
  ColumnRef a;
  ColumnRef b;
  double weight = 0;

  bool operator==(const LinkEdge&) const = default;
};

struct ScoreBreakdown {
  double keyword = 0;
  double column_coverage = 0;
  double value_overlap = 0;

  bool operator==(const ScoreBreakdown&) const = default;
};

struct Candidate {
  /// One asset, or two in ascending id order.
  std::vector<DatasetId> assets;
  double score = 0;
  ScoreBreakdown breakdown;
  /// Every linkage edge between the two assets; empty for single assets.
  std::vector<LinkEdge> join_options;

  bool operator==(const Candidate&) const = default;
};

/// Keyword, column-sketch and linkage indexes over original datasets.
/// Visibility and trust are applied per query through `admissible`.
class DiscoveryIndex {
 public:
  explicit DiscoveryIndex(DiscoveryConfig config = {});

  /// Unreadable (encrypted) assets contribute keywords only.
  void index(const ProfileSet& profile, bool readable);
  /// Throws NotProfiled when the catalog has no profile for `id`.
  void index(const Catalog& catalog, const DatasetId& id, bool readable);
  void remove(const std::set<DatasetId>& ids);
  bool contains(const DatasetId& id) const;

  std::vector<LinkEdge> edges() const;
  std::vector<LinkEdge> edges_between(const DatasetId& x, const DatasetId& y) const;
  /// Asset ids whose indexed fields contain `token`.
  std::set<DatasetId> lookup(const std::string& token) const;

  /// Human-confirmed join for an unordered asset pair.
  void annotate(const ColumnRef& x, const ColumnRef& y);
  std::optional<std::pair<ColumnRef, ColumnRef>> annotation(const DatasetId& x,
                                                            const DatasetId& y) const;

  std::vector<Candidate> discover(const TaskCapsule& capsule,
                                  const std::function<bool(const DatasetId&)>& admissible) const;

  const DiscoveryConfig& config() const { return config_; }

 private:
  struct IndexedColumn {
    std::string name;
    std::string normalized;
    DType dtype = DType::kText;
    std::int64_t distinct = 0;
    MinHashSketch sketch;
  };
  struct IndexedAsset {
    bool readable = false;
    std::vector<IndexedColumn> columns;
    std::set<std::string> name_tokens;   // asset name, column names, why text
    std::set<std::string> column_tokens;
    std::set<std::string> value_tokens;  // top values
  };

  Candidate score(const std::vector<DatasetId>& assets, const TaskCapsule& capsule,
                  const std::vector<std::string>& query_tokens) const;
  double value_overlap(const std::vector<DatasetId>& assets, const TaskCapsule& capsule) const;

  DiscoveryConfig config_;
  mutable std::shared_mutex mu_;
  std::map<DatasetId, IndexedAsset> assets_;
  std::map<std::string, std::set<DatasetId>> inverted_;
  std::map<std::pair<DatasetId, DatasetId>, std::vector<LinkEdge>> links_;
  std::map<std::pair<DatasetId, DatasetId>, std::pair<ColumnRef, ColumnRef>> annotations_;
};

}  // namespace station
