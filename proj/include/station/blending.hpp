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

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "station/capsule.hpp"
#include "station/discovery.hpp"
#include "station/policy.hpp"
#include "station/store.hpp"

namespace station {

/// The fixed transform library, in preference order.
enum class Transform { kIdentity, kTrim, kLowercase, kParseNumber, kParseDateIso, kParseDateUs };

inline constexpr std::array<Transform, 6> kTransforms = {
    Transform::kIdentity,    Transform::kTrim,         Transform::kLowercase,
    Transform::kParseNumber, Transform::kParseDateIso, Transform::kParseDateUs};

std::string_view transform_name(Transform t);
std::optional<Transform> parse_transform(std::string_view name);
/// nullopt is the failure value for unparseable input.
std::optional<std::string> apply_transform(Transform t, std::string_view value);

struct BlendConfig {
  double match_fraction = 0.8;
  double tie_tolerance = 0.05;
};

/// Transform applied to capsule-side values and to source values.
struct TransformPair {
  Transform example = Transform::kIdentity;
  Transform source = Transform::kIdentity;

  bool operator==(const TransformPair&) const = default;
};

struct ColumnMapping {
  std::string target;
  ColumnRef source;
  TransformPair transforms;
  double match = 0;

  bool operator==(const ColumnMapping&) const = default;
};

struct JoinSpec {
  ColumnRef left;
  ColumnRef right;
  Transform left_transform = Transform::kIdentity;
  Transform right_transform = Transform::kIdentity;
  /// Exact Jaccard of the transformed key sets.
  double score = 0;

  bool operator==(const JoinSpec&) const = default;
};

struct BlendPlan {
  std::vector<DatasetId> inputs;
  std::optional<JoinSpec> join;
  std::vector<ColumnMapping> mappings;
  /// Mean fraction of capsule values matched across target columns.
  double validation = 0;

  /// `join(<a>.<col>~<t1>, <b>.<col>~<t2>); map(<tgt><-<a>.<col>~<t>)...`
  /// where assets are rendered as hex ids and `~<t>` is the source-side
  /// transform, suffixed with `:<t>` when the capsule side is transformed.
  std::string summary() const;
  bool operator==(const BlendPlan&) const = default;
};

struct Ambiguity {
  enum class Kind { kJoinChoice, kMissingProfile };
  struct Alternative {
    std::string description;
    std::optional<JoinSpec> join;
    std::optional<DatasetId> dataset;

    bool operator==(const Alternative&) const = default;
  };
  Kind kind = Kind::kJoinChoice;
  std::vector<Alternative> alternatives;
  std::string fingerprint;

  bool operator==(const Ambiguity&) const = default;
};

std::string_view ambiguity_kind_name(Ambiguity::Kind kind);

using SynthesisResult = std::variant<BlendPlan, Ambiguity>;

/// Plan synthesis and materialization over in-process reads of the store.
class Blender {
 public:
  Blender(const Store& store, const DiscoveryIndex& index, BlendConfig config = {});

  /// Throws NoViablePlan when some target column reaches no transform pair
  /// at match_fraction, or a two-table candidate has no joinable keys.
  SynthesisResult synthesize(const Candidate& candidate, const TaskCapsule& capsule) const;

  /// Governance-checked projection (and join) registered as a derived table.
  /// Throws GovernanceViolation, JoinEmpty.
  DatasetId materialize(const BlendPlan& plan, Store& store, const PolicyEngine& policy,
                        const TaskCapsule& capsule) const;

  /// The rows materialize would register, header = target names.
  Table execute_plan(const BlendPlan& plan) const;

  /// Governance input covering every column a plan touches.
  static GovernanceInput governance_input(const BlendPlan& plan, const TaskCapsule& capsule);

  const BlendConfig& config() const { return config_; }

 private:
  const Store& store_;
  const DiscoveryIndex& index_;
  BlendConfig config_;
};

/// Fraction of `values` matched in `source` under `pair`. Classify number
/// columns count parse success, since features are continuous.
double match_fraction(const std::vector<std::string>& values, const std::vector<std::string>& source,
                      TransformPair pair, bool numeric_feature);

}  // namespace station
