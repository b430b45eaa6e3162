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

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "station/blending.hpp"
#include "station/common.hpp"

namespace station {

enum class TaskKind { kJoinDisambiguation, kWhyProfileRequest };
enum class TaskStatus { kOpen, kClaimed, kAnswered, kExpired };

std::string_view task_kind_name(TaskKind kind);
std::string_view task_status_name(TaskStatus status);

struct PricePolicy {
  std::int64_t join_disambiguation = 30;
  std::int64_t why_profile_request = 50;

  std::int64_t price(TaskKind kind) const {
    return kind == TaskKind::kJoinDisambiguation ? join_disambiguation : why_profile_request;
  }
};

struct Answer {
  std::string task_id;
  std::string respondent;
  std::optional<std::size_t> alternative;
  std::string text;
  Timestamp at = 0;

  bool operator==(const Answer&) const = default;
};

struct HumanTask {
  std::string id;
  TaskKind kind = TaskKind::kJoinDisambiguation;
  std::string description;
  std::int64_t price = 0;
  TaskStatus status = TaskStatus::kOpen;
  std::string requester;
  std::optional<std::string> claimant;
  std::optional<Timestamp> claimed_at;
  std::set<std::string> blocking;
  /// Join alternatives, in the order they are numbered in the description.
  std::vector<JoinSpec> alternatives;
  /// Subject of a why-profile request.
  std::optional<DatasetId> dataset;
  std::optional<Answer> answer;
  Timestamp created_at = 0;
};

/// What a blocked execution needs from a human.
struct TaskSpec {
  TaskKind kind = TaskKind::kJoinDisambiguation;
  std::string description;
  std::vector<JoinSpec> alternatives;
  std::optional<DatasetId> dataset;

  /// Identity of the question; equal keys share one task.
  std::string key() const;
};

/// Renders the stable task description templates.
TaskSpec join_task(const Ambiguity& ambiguity, std::string_view left_name,
                   std::string_view right_name);
TaskSpec why_task(const DatasetId& dataset, std::string_view name,
                  const std::vector<std::string>& columns);

/// Integer currency with per-task escrow. Sum of balances and escrow only
/// changes through mint.
class Ledger {
 public:
  void mint(const std::string& user, std::int64_t amount);
  std::int64_t balance(const std::string& user) const;
  std::int64_t escrowed(const std::string& task_id) const;
  std::int64_t total() const;
  std::map<std::string, std::int64_t> balances() const;

  /// Moves `amount` from `user` into escrow for `task_id`.
  void hold(const std::string& user, const std::string& task_id, std::int64_t amount);
  /// Releases a task's escrow to `user`.
  void pay_out(const std::string& task_id, const std::string& user);

 private:
  std::map<std::string, std::int64_t> balances_;
  std::map<std::string, std::int64_t> escrow_;
};

struct AnswerContent {
  std::optional<std::size_t> alternative;
  std::string text;
};

/// Posted-price task market.
class Market {
 public:
  Market(const Clock& clock, IdSource& ids, PricePolicy prices, std::int64_t claim_ttl_seconds);

  /// Creates an open task, or adds `fingerprint` to the blocking set of an
  /// unresolved task asking the same question. Charges the requester only
  /// for new tasks. Throws InsufficientEscrowFunds.
  HumanTask generate(const TaskSpec& spec, const std::string& requester,
                     const std::string& fingerprint);
  HumanTask claim(const std::string& task_id, const std::string& user);
  /// Throws TaskNotClaimed, NotClaimant, InvalidAlternative, EmptyText.
  Answer submit_answer(const std::string& task_id, const std::string& respondent,
                       const AnswerContent& content);
  /// Refunds the escrow to the requester.
  HumanTask expire(const std::string& task_id);

  HumanTask task(const std::string& task_id) const;
  std::vector<HumanTask> tasks() const;
  /// Open tasks the user did not request, plus tasks the user has claimed.
  std::vector<HumanTask> visible_to(const std::string& user) const;

  void mint(const std::string& user, std::int64_t amount);
  std::int64_t balance(const std::string& user) const;
  std::int64_t total_currency() const;
  std::map<std::string, std::int64_t> balances() const;
  std::int64_t escrowed(const std::string& task_id) const;

  const PricePolicy& prices() const { return prices_; }

 private:
  HumanTask& find(const std::string& task_id);
  /// Claims older than the TTL fall back to open.
  void lapse_claims() const;

  const Clock& clock_;
  IdSource& ids_;
  PricePolicy prices_;
  std::int64_t claim_ttl_;
  mutable std::mutex mu_;
  Ledger ledger_;
  mutable std::map<std::string, HumanTask> tasks_;
  std::vector<std::string> order_;
  std::map<std::string, std::string> by_key_;
};

}  // namespace station
