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

#include "station/common.hpp"
#include "station/minhash.hpp"
#include "station/policy.hpp"
#include "station/store.hpp"
#include "station/table.hpp"

namespace station {

/// Columns with more distinct values than this get a sketch-based estimate.
inline constexpr std::size_t kExactDistinctLimit = 10'000;

struct ColumnProfile {
  std::string name;
  DType dtype = DType::kText;
  std::int64_t row_count = 0;
  std::int64_t distinct = 0;
  /// Numbers and dates only; absent for PII columns.
  std::optional<std::string> min;
  std::optional<std::string> max;
  /// Up to five (value, count) pairs, count descending then value ascending.
  /// Always empty for PII columns.
  std::vector<std::pair<std::string, std::int64_t>> top_values;
  MinHashSketch sketch;
  std::vector<std::string> name_tokens;
  bool pii = false;

  bool operator==(const ColumnProfile&) const = default;
};

struct WhatProfile {
  std::int64_t row_count = 0;
  std::vector<ColumnProfile> columns;

  bool operator==(const WhatProfile&) const = default;
};

struct WhoProfile {
  /// Owner key fingerprint, or "station" for derived products.
  std::string producer;
  std::set<std::string> accessed_by;

  bool operator==(const WhoProfile&) const = default;
};

struct HowProfile {
  std::string producing_op;
  std::string plan_summary;

  bool empty() const { return producing_op.empty() && plan_summary.empty(); }
  bool operator==(const HowProfile&) const = default;
};

struct WhereProfile {
  std::string content_ref;
  AccessMode access = AccessMode::kClosed;

  bool operator==(const WhereProfile&) const = default;
};

struct WhenProfile {
  Timestamp created_at = 0;
  Timestamp modified_at = 0;
  std::optional<Timestamp> valid_from;
  std::optional<Timestamp> valid_until;

  bool operator==(const WhenProfile&) const = default;
};

enum class WhyProvenance { kNone, kHuman };

struct WhyProfile {
  std::string text;
  std::string author;
  WhyProvenance provenance = WhyProvenance::kNone;

  bool operator==(const WhyProfile&) const = default;
};

struct ProfileSet {
  DatasetId asset;
  std::string name;
  AssetKind kind = AssetKind::kDataset;
  WhatProfile what;
  WhoProfile who;
  HowProfile how;
  WhereProfile where;
  WhenProfile when;
  WhyProfile why;
  std::map<std::string, std::string> ext;

  bool operator==(const ProfileSet&) const = default;
};

/// Lineage constraints. Absent fields constrain nothing.
struct TrustConstraints {
  std::optional<std::set<std::string>> creators_allow;
  std::optional<Timestamp> created_after;
  bool require_why_profile = false;
  std::optional<int> max_provenance_depth;

  bool empty() const {
    return !creators_allow && !created_after && !require_why_profile && !max_provenance_depth;
  }
  bool operator==(const TrustConstraints&) const = default;
};

struct CatalogQuery {
  TrustConstraints trust;
  std::optional<std::string> keyword;
};

/// Profiles an asset from its record and, when readable, its rows. Pure:
/// equal inputs give equal outputs.
ProfileSet compute_profile(const AssetRecord& record, const std::optional<Table>& table,
                           AccessMode access, const std::set<std::string>& pii_dictionary);

/// Lowercased tokens drawn from the asset name, column names and why text.
std::set<std::string> profile_tokens(const ProfileSet& profile);

/// One JSON object per line with fields what, who, how, where, when, why, ext.
/// The asset id, name and kind travel in ext.
std::string export_record(const ProfileSet& profile);
ProfileSet import_record(std::string_view line);

/// Metadata view served over the API: no row values, extrema or sketches.
std::string public_record(const ProfileSet& profile);

/// Exactly one ProfileSet per live asset.
class Catalog {
 public:
  explicit Catalog(std::set<std::string> pii_dictionary);

  /// (Re)profiles `id` from the store. Why text and the access history of
  /// an existing ProfileSet carry over; `seed_why` applies only when absent.
  const ProfileSet& profile(const Store& store, const DatasetId& id, AccessMode access,
                            std::optional<WhyProfile> seed_why = std::nullopt);
  void put(ProfileSet profile);
  void remove(const std::set<DatasetId>& ids);

  std::optional<ProfileSet> get(const DatasetId& id) const;
  bool contains(const DatasetId& id) const;
  std::vector<ProfileSet> all() const;
  std::size_t size() const;

  ProfileSet upsert_why(const DatasetId& id, std::string_view text, std::string_view author,
                        Timestamp now);
  void record_access(const DatasetId& id, const std::string& user);
  void set_access(const DatasetId& id, AccessMode access);

  /// Constraints hold on `id` and on every ancestor. Creator and why
  /// constraints bind original datasets; derived nodes inherit them through
  /// their ancestors. Throws NotFound if `id` has no profile.
  bool satisfies(const TrustConstraints& trust, const DatasetId& id,
                 const ProvenanceGraph& graph) const;

  /// Assets passing every constraint and the visibility predicate, in id order.
  std::vector<DatasetId> query(const CatalogQuery& query,
                               const std::function<bool(const DatasetId&)>& visible,
                               const ProvenanceGraph& graph) const;

  std::string export_all() const;
  void import_all(std::string_view text);

  const std::set<std::string>& pii_dictionary() const { return pii_; }

 private:
  bool satisfies_locked(const TrustConstraints& trust, const DatasetId& id,
                        const ProvenanceGraph& graph) const;

  std::set<std::string> pii_;
  mutable std::shared_mutex mu_;
  std::map<DatasetId, ProfileSet> profiles_;
};

}  // namespace station
