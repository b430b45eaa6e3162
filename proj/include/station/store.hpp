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
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "station/common.hpp"
#include "station/table.hpp"

namespace station {

/// Original contributions are kDataset; everything the station produces is
/// one of the derived kinds.
enum class AssetKind { kDataset, kTable, kModel, kReport };

std::string_view asset_kind_name(AssetKind kind);
std::optional<AssetKind> parse_asset_kind(std::string_view name);

/// Dataset or derived product. Content never lives here, only the handle.
struct AssetRecord {
  DatasetId id;
  AssetKind kind = AssetKind::kDataset;
  std::string name;
  std::string owner_key;  // empty for derived products
  std::string signature;  // hex Ed25519 over SHA-256(content); datasets only
  std::string digest;     // hex SHA-256 of the current version's bytes
  std::vector<ColumnSpec> schema;
  int version = 1;
  std::string content_ref;
  bool sealed = true;
  bool encrypted = false;
  std::vector<DatasetId> parents;
  std::string producing_op;
  std::string plan_summary;
  Timestamp created_at = 0;
  Timestamp modified_at = 0;

  bool derived() const { return kind != AssetKind::kDataset; }
};

struct Tombstone {
  DatasetId id;
  Timestamp deleted_at = 0;
  std::string reason;
};

/// Metadata supplied by the contributor at upload time.
struct ProfileSeed {
  std::optional<std::vector<ColumnSpec>> schema;
  std::optional<std::string> why;
};

struct IngestRequest {
  std::string content;
  std::string owner_key;
  std::string signature;
  std::string name;
  bool encrypted = false;
  std::optional<ProfileSeed> metadata;
};

struct DerivedRequest {
  AssetKind kind = AssetKind::kTable;
  std::vector<DatasetId> parents;
  std::string producing_op;
  std::string plan_summary;
  std::string content;
  std::vector<ColumnSpec> schema;
  /// Preallocated id; a fresh one is drawn when absent.
  std::optional<DatasetId> id;
};

/// Edges point child -> parent. Maintained acyclic by construction.
class ProvenanceGraph {
 public:
  void add_node(const DatasetId& id, const std::vector<DatasetId>& parents);
  void remove_node(const DatasetId& id);
  bool contains(const DatasetId& id) const { return parents_.count(id) != 0; }

  const std::set<DatasetId>& parents(const DatasetId& id) const;
  const std::set<DatasetId>& children(const DatasetId& id) const;
  std::set<DatasetId> ancestors(const DatasetId& id) const;
  std::set<DatasetId> descendants(const DatasetId& id) const;
  /// Longest path to any original (parentless) asset; originals have depth 0.
  int depth(const DatasetId& id) const;
  bool is_acyclic() const;
  std::vector<DatasetId> nodes() const;

 private:
  std::map<DatasetId, std::set<DatasetId>> parents_;
  std::map<DatasetId, std::set<DatasetId>> children_;
};

/// Sealed, versioned asset storage rooted at a directory:
///   <root>/assets/<id>/<version>.csv   content, one file per version
///   <root>/assets/<id>/meta            canonical JSON record of the asset
///   <root>/tombstones                  one JSON line per deleted asset
/// Row content is only reachable through read_table/read_content, which are
/// for in-process station components.
class Store {
 public:
  Store(std::filesystem::path root, const Clock& clock, IdSource& ids);

  DatasetId ingest(const IngestRequest& request);
  /// Returns the new version number.
  int update(const DatasetId& id, std::string_view content, std::string_view owner_key,
             std::string_view signature);
  DatasetId register_derived(const DerivedRequest& request);
  DatasetId allocate_id();

  std::set<DatasetId> descendants(const DatasetId& id) const;
  std::set<DatasetId> ancestors(const DatasetId& id) const;
  int depth(const DatasetId& id) const;
  /// Removes `id` and every descendant; returns the removed set.
  std::set<DatasetId> cascade_delete(const DatasetId& id, std::string_view reason);

  AssetRecord get(const DatasetId& id) const;
  std::optional<AssetRecord> find(const DatasetId& id) const;
  bool contains(const DatasetId& id) const;
  std::optional<Tombstone> tombstone(const DatasetId& id) const;
  std::vector<AssetRecord> list() const;
  ProvenanceGraph provenance() const;
  /// Original datasets among `id` and its ancestors.
  std::set<DatasetId> original_ancestors(const DatasetId& id) const;

  Table read_table(const DatasetId& id) const;
  std::string read_content(const DatasetId& id, std::optional<int> version = {}) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path version_path(const DatasetId& id, int version, AssetKind kind) const;
  void write_meta(const AssetRecord& rec) const;
  void check_fresh(const DatasetId& id) const;

  std::filesystem::path root_;
  const Clock& clock_;
  IdSource& ids_;
  mutable std::shared_mutex mu_;
  std::map<DatasetId, AssetRecord> assets_;
  std::map<DatasetId, Tombstone> tombstones_;
  ProvenanceGraph graph_;
};

}  // namespace station
