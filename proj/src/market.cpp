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

#include "station/market.hpp"

#include <algorithm>
#include <cstdio>

namespace station {

std::string_view task_kind_name(TaskKind kind) {
  return kind == TaskKind::kJoinDisambiguation ? "join_disambiguation" : "why_profile_request";
}

std::string_view task_status_name(TaskStatus status) {
  switch (status) {
    case TaskStatus::kOpen: return "open";
    case TaskStatus::kClaimed: return "claimed";
    case TaskStatus::kAnswered: return "answered";
    case TaskStatus::kExpired: return "expired";
  }
  return "open";
}

std::string TaskSpec::key() const {
  if (kind == TaskKind::kWhyProfileRequest) return "why:" + (dataset ? dataset->hex() : "");
  std::vector<std::string> parts;
  for (const auto& a : alternatives) {
    parts.push_back(a.left.asset.hex() + "." + a.left.column + "=" + a.right.asset.hex() + "." +
                    a.right.column);
  }
  std::sort(parts.begin(), parts.end());
  std::string out = "join:";
  for (const auto& p : parts) out += p + ";";
  return out;
}

TaskSpec join_task(const Ambiguity& ambiguity, std::string_view left_name,
                   std::string_view right_name) {
  TaskSpec spec;
  spec.kind = TaskKind::kJoinDisambiguation;
  if (ambiguity.alternatives.empty() || !ambiguity.alternatives[0].join) {
    throw Error(ErrorCode::kInvalidArgument, "join task needs join alternatives");
  }
  const auto& first = *ambiguity.alternatives[0].join;
  std::string text = "A computation is blocked: it must join dataset '" + std::string(left_name) +
                     "' (" + first.left.asset.hex() + ") with dataset '" +
                     std::string(right_name) + "' (" + first.right.asset.hex() +
                     "), and these column pairings fit about equally well:\n";
  for (std::size_t i = 0; i < ambiguity.alternatives.size(); ++i) {
    const auto& j = *ambiguity.alternatives[i].join;
    char score[16];
    std::snprintf(score, sizeof score, "%.2f", j.score);
    text += "  [" + std::to_string(i) + "] " + std::string(left_name) + "." + j.left.column +
            " = " + std::string(right_name) + "." + j.right.column + " (value overlap " + score +
            ")\n";
    spec.alternatives.push_back(j);
  }
  text += "Reply with the number of the pairing that links the same real-world entities.";
  spec.description = std::move(text);
  return spec;
}

TaskSpec why_task(const DatasetId& dataset, std::string_view name,
                  const std::vector<std::string>& columns) {
  TaskSpec spec;
  spec.kind = TaskKind::kWhyProfileRequest;
  spec.dataset = dataset;
  std::string cols;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) cols += ", ";
    cols += columns[i];
  }
  spec.description = "Dataset '" + std::string(name) + "' (" + dataset.hex() +
                     ") is a candidate input for a computation that only accepts data with a "
                     "stated purpose, and no purpose has been recorded for it.\n"
                     "Its columns are: " +
                     cols +
                     ".\nReply with a short statement of why the dataset was collected and what "
                     "it may be used for.";
  return spec;
}

// ---------------------------------------------------------------------------
// Ledger

void Ledger::mint(const std::string& user, std::int64_t amount) {
  if (amount < 0) throw Error(ErrorCode::kInvalidArgument, "mint amount must be non-negative");
  balances_[user] += amount;
}

std::int64_t Ledger::balance(const std::string& user) const {
  auto it = balances_.find(user);
  return it == balances_.end() ? 0 : it->second;
}

std::int64_t Ledger::escrowed(const std::string& task_id) const {
  auto it = escrow_.find(task_id);
  return it == escrow_.end() ? 0 : it->second;
}

std::int64_t Ledger::total() const {
  std::int64_t sum = 0;
  for (const auto& [_, b] : balances_) sum += b;
  for (const auto& [_, e] : escrow_) sum += e;
  return sum;
}

std::map<std::string, std::int64_t> Ledger::balances() const { return balances_; }

void Ledger::hold(const std::string& user, const std::string& task_id, std::int64_t amount) {
  if (balance(user) < amount) {
    throw Error(ErrorCode::kInsufficientEscrowFunds,
                user + " has " + std::to_string(balance(user)) + " units, task costs " +
                    std::to_string(amount));
  }
  balances_[user] -= amount;
  escrow_[task_id] += amount;
}

void Ledger::pay_out(const std::string& task_id, const std::string& user) {
  auto amount = escrowed(task_id);
  escrow_.erase(task_id);
  balances_[user] += amount;
}

// ---------------------------------------------------------------------------
// Market

Market::Market(const Clock& clock, IdSource& ids, PricePolicy prices,
               std::int64_t claim_ttl_seconds)
    : clock_(clock), ids_(ids), prices_(prices), claim_ttl_(claim_ttl_seconds) {}

HumanTask& Market::find(const std::string& task_id) {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "no task " + task_id);
  return it->second;
}

void Market::lapse_claims() const {
  auto now = clock_.now();
  for (auto& [_, t] : tasks_) {
    if (t.status == TaskStatus::kClaimed && t.claimed_at && now - *t.claimed_at >= claim_ttl_) {
      t.status = TaskStatus::kOpen;
      t.claimant.reset();
      t.claimed_at.reset();
    }
  }
}

HumanTask Market::generate(const TaskSpec& spec, const std::string& requester,
                           const std::string& fingerprint) {
  std::lock_guard lock(mu_);
  lapse_claims();
  auto key = spec.key();
  if (auto it = by_key_.find(key); it != by_key_.end()) {
    auto& existing = tasks_.at(it->second);
    if (existing.status == TaskStatus::kOpen || existing.status == TaskStatus::kClaimed) {
      existing.blocking.insert(fingerprint);
      return existing;
    }
  }
  HumanTask t;
  t.id = ids_.next_token("task");
  t.kind = spec.kind;
  t.description = spec.description;
  t.price = prices_.price(spec.kind);
  t.requester = requester;
  t.blocking = {fingerprint};
  t.alternatives = spec.alternatives;
  t.dataset = spec.dataset;
  t.created_at = clock_.now();
  ledger_.hold(requester, t.id, t.price);
  by_key_[key] = t.id;
  order_.push_back(t.id);
  tasks_[t.id] = t;
  return t;
}

HumanTask Market::claim(const std::string& task_id, const std::string& user) {
  std::lock_guard lock(mu_);
  lapse_claims();
  auto& t = find(task_id);
  if (t.requester == user) throw Error(ErrorCode::kSelfClaim, "requesters cannot claim their own task");
  if (t.status == TaskStatus::kClaimed) throw Error(ErrorCode::kAlreadyClaimed, "task already claimed");
  if (t.status != TaskStatus::kOpen) throw Error(ErrorCode::kTaskClosed, "task is no longer open");
  t.status = TaskStatus::kClaimed;
  t.claimant = user;
  t.claimed_at = clock_.now();
  return t;
}

Answer Market::submit_answer(const std::string& task_id, const std::string& respondent,
                             const AnswerContent& content) {
  std::lock_guard lock(mu_);
  lapse_claims();
  auto& t = find(task_id);
  if (t.status == TaskStatus::kAnswered || t.status == TaskStatus::kExpired) {
    throw Error(ErrorCode::kTaskClosed, "task is closed");
  }
  if (t.status != TaskStatus::kClaimed) throw Error(ErrorCode::kTaskNotClaimed, "claim the task first");
  if (t.claimant != respondent) throw Error(ErrorCode::kNotClaimant, "task is claimed by someone else");
  Answer a{task_id, respondent, std::nullopt, "", clock_.now()};
  if (t.kind == TaskKind::kJoinDisambiguation) {
    if (!content.alternative || *content.alternative >= t.alternatives.size()) {
      throw Error(ErrorCode::kInvalidAlternative,
                  "choose an alternative in [0, " + std::to_string(t.alternatives.size()) + ")");
    }
    a.alternative = content.alternative;
  } else {
    a.text = trim(content.text);
    if (a.text.empty()) throw Error(ErrorCode::kEmptyText, "answer text is empty");
  }
  ledger_.pay_out(task_id, respondent);
  t.status = TaskStatus::kAnswered;
  t.answer = a;
  return a;
}

HumanTask Market::expire(const std::string& task_id) {
  std::lock_guard lock(mu_);
  auto& t = find(task_id);
  if (t.status == TaskStatus::kAnswered || t.status == TaskStatus::kExpired) {
    throw Error(ErrorCode::kTaskClosed, "task is closed");
  }
  ledger_.pay_out(task_id, t.requester);
  t.status = TaskStatus::kExpired;
  t.claimant.reset();
  return t;
}

HumanTask Market::task(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  lapse_claims();
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "no task " + task_id);
  return it->second;
}

std::vector<HumanTask> Market::tasks() const {
  std::lock_guard lock(mu_);
  lapse_claims();
  std::vector<HumanTask> out;
  for (const auto& id : order_) out.push_back(tasks_.at(id));
  return out;
}

std::vector<HumanTask> Market::visible_to(const std::string& user) const {
  std::vector<HumanTask> out;
  for (auto& t : tasks()) {
    bool open_for_user = t.status == TaskStatus::kOpen && t.requester != user;
    bool mine = t.status == TaskStatus::kClaimed && t.claimant == user;
    if (open_for_user || mine) out.push_back(std::move(t));
  }
  return out;
}

void Market::mint(const std::string& user, std::int64_t amount) {
  std::lock_guard lock(mu_);
  ledger_.mint(user, amount);
}

std::int64_t Market::balance(const std::string& user) const {
  std::lock_guard lock(mu_);
  return ledger_.balance(user);
}

std::int64_t Market::total_currency() const {
  std::lock_guard lock(mu_);
  return ledger_.total();
}

std::map<std::string, std::int64_t> Market::balances() const {
  std::lock_guard lock(mu_);
  return ledger_.balances();
}

std::int64_t Market::escrowed(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  return ledger_.escrowed(task_id);
}

}  // namespace station
