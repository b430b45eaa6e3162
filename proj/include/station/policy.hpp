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
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "station/common.hpp"

namespace station {

enum class AccessMode { kOpen, kClosed, kBrokered };

std::string_view access_mode_name(AccessMode mode);
std::optional<AccessMode> parse_access_mode(std::string_view name);

struct DpFilter {
  double epsilon_total = 1.0;
  double epsilon_per_query = 0.1;
};

struct AccessPolicy {
  DatasetId dataset;
  bool discoverable = false;
  AccessMode access = AccessMode::kClosed;
  bool derivation_allowed = true;
  /// Empty means every task type.
  std::set<TaskType> allowed_task_types;
  std::optional<DpFilter> dp_filter;
};

/// Throws Error(InvalidArgument) when the policy breaks its invariants.
void validate(const AccessPolicy& policy);

struct EpsilonBudget {
  DatasetId dataset;
  double epsilon_total = 0;
  double epsilon_per_query = 0;
  std::int64_t successful_queries = 0;

  double epsilon_spent() const { return successful_queries * epsilon_per_query; }
};

struct GovernancePolicy {
  /// Lowercased column names.
  std::set<std::string> pii_dictionary;
  bool forbid_pii_derivation = false;
  std::set<std::string> allowed_model_classes{"nearest_centroid"};
  /// Maximum asset age in seconds, if retention is enforced.
  std::optional<std::int64_t> retention_seconds;
};

/// The twelve column names shipped as the default PII dictionary.
std::set<std::string> default_pii_dictionary();

using TokenId = std::array<std::uint8_t, 16>;

struct CapabilityToken {
  TokenId token_id{};
  std::string subject;
  std::set<DatasetId> dataset_ids;
  std::optional<Timestamp> expiry;
  std::optional<std::uint32_t> uses;

  bool operator==(const CapabilityToken&) const = default;
};

/// Canonical payload: five fields in fixed order, each prefixed by a 4-byte
/// big-endian length. token_id is 16 raw bytes, subject is UTF-8,
/// dataset_ids is the concatenation of sorted 16-byte ids, expiry is empty or
/// an 8-byte big-endian signed integer, uses is empty or a 4-byte big-endian
/// unsigned integer. The wire token is base64url(payload || HMAC-SHA-256).
std::vector<std::uint8_t> encode_token_payload(const CapabilityToken& token);
std::string seal_token(const CapabilityToken& token, std::span<const std::uint8_t> secret);
/// nullopt if the MAC or the framing does not check out.
std::optional<CapabilityToken> open_token(std::string_view wire,
                                          std::span<const std::uint8_t> secret);

enum class DenyReason { kBadMac, kExpired, kExhausted, kRevoked, kWrongSubject, kScopeTooNarrow };
std::string_view deny_reason_name(DenyReason reason);

struct TokenVerdict {
  bool allowed = false;
  DenyReason reason = DenyReason::kBadMac;
  std::optional<CapabilityToken> token;
};

enum class RequestStatus { kPending, kApproved, kDenied };
std::string_view request_status_name(RequestStatus status);

struct AccessRequest {
  std::string id;
  std::string requester;
  DatasetId dataset;
  std::string capsule_fingerprint;
  RequestStatus status = RequestStatus::kPending;
  std::optional<std::string> decided_by;
  /// Wire token minted on approval; only shown to the requester.
  std::optional<std::string> token;
};

struct AccessVerdict {
  enum class Kind { kAllow, kDeny, kNeedsApproval };
  Kind kind = Kind::kDeny;
  std::optional<std::string> request_id;
};

struct TokenGrant {
  std::optional<Timestamp> expiry;
  std::optional<std::uint32_t> uses;
};

/// Input to the governance check, built from a blend plan and payload.
struct GovernanceInput {
  struct Source {
    DatasetId dataset;
    std::vector<std::string> columns;
  };
  std::vector<Source> sources;
  TaskType task_type = TaskType::kSearch;
  std::optional<std::string> model_class;
};

struct Violation {
  enum class Kind { kPii, kModelClass, kDerivationForbidden };
  Kind kind;
  std::optional<DatasetId> dataset;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

std::string_view violation_kind_name(Violation::Kind kind);

/// Inverse-CDF Laplace sampler over a seedable uniform source.
class LaplaceSampler {
 public:
  /// Seeded for replay; unseeded draws its seed from the OS CSPRNG.
  explicit LaplaceSampler(std::optional<std::uint64_t> seed = std::nullopt);
  double sample(double scale);

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

/// Registration and enforcement of access and governance policies, privacy
/// budgets, brokered access requests and capability tokens.
class PolicyEngine {
 public:
  PolicyEngine(GovernancePolicy governance, std::array<std::uint8_t, 32> secret,
               const Clock& clock, IdSource& ids, std::optional<std::uint64_t> dp_seed);

  void register_policy(const AccessPolicy& policy, const std::string& owner_key);
  void replace_policy(const AccessPolicy& policy, const std::string& owner_key);
  std::optional<AccessPolicy> policy(const DatasetId& dataset) const;
  std::optional<std::string> owner_key(const DatasetId& dataset) const;
  bool is_owner(const Principal& who, const DatasetId& dataset) const;

  /// Discoverable to `who`: owners always; others when the policy marks the
  /// dataset discoverable and access is not closed.
  bool discoverable_to(const Principal& who, const DatasetId& dataset) const;

  AccessVerdict evaluate_access(const Principal& who, const DatasetId& dataset, TaskType task,
                                std::string_view capsule_fingerprint = {});
  /// Same decision without creating access requests.
  AccessVerdict::Kind peek_access(const Principal& who, const DatasetId& dataset,
                                  TaskType task) const;

  struct Decision {
    AccessRequest request;
    std::optional<std::string> token;
  };
  Decision decide_request(const std::string& request_id, const std::string& owner_key,
                          bool approve, const TokenGrant& grant = {});
  std::vector<AccessRequest> requests_for_owner(const std::string& owner_key) const;
  std::vector<AccessRequest> requests_of(const std::string& requester) const;
  std::optional<AccessRequest> request(const std::string& id) const;

  std::string mint_token(const std::string& subject, const std::set<DatasetId>& datasets,
                         const TokenGrant& grant);
  TokenVerdict verify_and_consume(std::string_view wire, const std::string& user,
                                  const std::set<DatasetId>& needed);
  /// MAC-checked contents of a station-issued token, without consuming a use.
  std::optional<CapabilityToken> peek_token(std::string_view wire) const;
  /// Marks the assets revoked; every token that references one stops verifying.
  void revoke_assets(const std::set<DatasetId>& assets);
  bool is_revoked(const DatasetId& asset) const;

  double apply_dp(const DatasetId& dataset, double value, double sensitivity, double epsilon);
  std::optional<EpsilonBudget> budget(const DatasetId& dataset) const;
  void reset_budget(const DatasetId& dataset, const std::string& owner_key);

  std::vector<Violation> check_governance(const GovernanceInput& input) const;
  const GovernancePolicy& governance() const { return governance_; }

  /// Policy-registered datasets whose age exceeds the retention limit.
  std::vector<DatasetId> past_retention(const std::map<DatasetId, Timestamp>& created_at) const;

 private:
  struct Entry {
    AccessPolicy policy;
    std::string owner_key;
  };
  struct IssuedToken {
    CapabilityToken token;
    std::optional<std::uint32_t> uses_remaining;
    bool revoked = false;
  };

  const Entry& entry(const DatasetId& dataset) const;
  AccessVerdict::Kind base_decision(const Principal& who, const Entry& e, TaskType task) const;

  GovernancePolicy governance_;
  std::array<std::uint8_t, 32> secret_;
  const Clock& clock_;
  IdSource& ids_;
  LaplaceSampler sampler_;

  mutable std::shared_mutex mu_;
  std::map<DatasetId, Entry> policies_;
  std::map<DatasetId, EpsilonBudget> budgets_;
  std::map<std::string, AccessRequest> requests_;
  std::map<TokenId, IssuedToken> tokens_;
  std::set<DatasetId> revoked_;
};

}  // namespace station
