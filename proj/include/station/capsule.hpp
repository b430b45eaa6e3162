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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "station/catalog.hpp"
#include "station/common.hpp"
#include "station/table.hpp"

namespace station {

struct SearchPayload {
  std::vector<std::string> keywords;

  bool operator==(const SearchPayload&) const = default;
};

struct QbePayload {
  std::vector<std::string> attributes;
  std::vector<std::vector<std::string>> example_rows;

  bool operator==(const QbePayload&) const = default;
};

struct ClassifyPayload {
  int n_classes = 2;
  std::string label_column;
  /// Canonical CSV text (features and label column).
  std::string test_data;
  std::string model_class = "nearest_centroid";

  Table test_table() const { return parse_csv(test_data); }
  bool operator==(const ClassifyPayload&) const = default;
};

using Payload = std::variant<SearchPayload, QbePayload, ClassifyPayload>;

enum class DosMetric { kAccuracy, kCoverage, kHits };

std::string_view dos_metric_name(DosMetric metric);
DosMetric metric_for(TaskType type);

struct DosSpec {
  DosMetric metric = DosMetric::kAccuracy;
  /// In [0,1] for accuracy and coverage; an integer >= 1 for hits.
  double threshold = 0;

  bool operator==(const DosSpec&) const = default;
};

/// A data-unaware task: everything here is written without seeing any
/// station-resident data. Immutable after parse.
struct TaskCapsule {
  TaskType task_type = TaskType::kSearch;
  Payload payload;
  DosSpec dos;
  TrustConstraints trust;
  /// Not part of the fingerprint.
  std::string submitter;

  const SearchPayload& search() const { return std::get<SearchPayload>(payload); }
  const QbePayload& qbe() const { return std::get<QbePayload>(payload); }
  const ClassifyPayload& classify() const { return std::get<ClassifyPayload>(payload); }

  /// Column names the task needs from the station: qbe attributes, or the
  /// classify test header including the label. Empty for search.
  std::vector<std::string> target_columns() const;

  bool operator==(const TaskCapsule&) const = default;
};

/// Parses the JSON wire format:
///   {"task_type": "search"|"qbe"|"classify",
///    "payload": {...}, "dos": {"metric", "threshold"},
///    "trust": {"creators_allow", "created_after", "require_why_profile",
///              "max_provenance_depth"}, "submitter": optional}
/// Every violation found is listed in Error::details(); the error code is
/// that of the first violation.
TaskCapsule parse_capsule(std::string_view document);

/// Wire rendering with sorted keys; parse_capsule inverts it.
std::string serialize_capsule(const TaskCapsule& capsule);

/// Hex SHA-256 of the canonical rendering without the submitter.
std::string fingerprint(const TaskCapsule& capsule);

/// Trust holds on `asset` and its whole ancestor closure.
bool check_trust(const TrustConstraints& constraints, const DatasetId& asset,
                 const Catalog& catalog, const ProvenanceGraph& graph);

}  // namespace station
