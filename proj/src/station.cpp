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

#include "station/station.hpp"

#include <algorithm>

#include "station/crypto.hpp"

namespace station {

std::string_view submission_status_name(SubmissionStatus status) {
  switch (status) {
    case SubmissionStatus::kRunning: return "running";
    case SubmissionStatus::kBlocked: return "blocked";
    case SubmissionStatus::kSatisfied: return "satisfied";
    case SubmissionStatus::kUnsatisfied: return "unsatisfied";
  }
  return "running";
}

Station::Station(StationConfig config) : config_(std::move(config)) {
  validate(config_);
  if (config_.clock_start) {
    auto manual = std::make_unique<ManualClock>(*config_.clock_start);
    manual_clock_ = manual.get();
    clock_ = std::move(manual);
  } else {
    clock_ = std::make_unique<SystemClock>();
  }
  ids_ = config_.id_seed ? std::make_unique<IdSource>(*config_.id_seed) : std::make_unique<IdSource>();

  GovernancePolicy governance;
  governance.pii_dictionary = config_.pii_dictionary ? read_pii_dictionary(*config_.pii_dictionary)
                                                     : default_pii_dictionary();
  governance.forbid_pii_derivation = config_.forbid_pii_derivation;
  governance.retention_seconds = config_.retention_seconds;

  store_ = std::make_unique<Store>(config_.store_root, *clock_, *ids_);
  policy_ = std::make_unique<PolicyEngine>(governance, read_key_file(config_.key_file), *clock_,
                                           *ids_, config_.dp_seed);
  catalog_ = std::make_unique<Catalog>(governance.pii_dictionary);
  index_ = std::make_unique<DiscoveryIndex>(config_.discovery);
  market_ = std::make_unique<Market>(*clock_, *ids_, config_.prices, config_.claim_ttl_seconds);
  executor_ = std::make_unique<Executor>(*store_, *catalog_, *index_, *policy_, *market_, *clock_,
                                         *ids_, config_.blend, config_.store_root / "audit.log");
  for (const auto& [name, u] : config_.users) {
    if (u.credit > 0) market_->mint(name, u.credit);
  }
}

std::optional<UserIdentity> Station::authenticate(std::string_view secret) const {
  if (secret.empty()) return std::nullopt;
  for (const auto& [_, u] : config_.users) {
    if (u.secret.size() == secret.size() &&
        crypto::constant_time_equal(crypto::as_bytes(u.secret), crypto::as_bytes(secret))) {
      return u;
    }
  }
  return std::nullopt;
}

void Station::reindex(const DatasetId& id) {
  auto rec = store_->get(id);
  auto pol = policy_->policy(id);
  auto access = pol ? pol->access : AccessMode::kClosed;
  catalog_->profile(*store_, id, access);
  index_->index(*catalog_, id, !rec.encrypted);
}

DatasetId Station::upload(const Principal& who, const IngestRequest& request,
                          const UploadPolicy& policy) {
  std::lock_guard lock(mu_);
  if (who.key.empty() || who.key != request.owner_key) {
    throw Error(ErrorCode::kForbidden, "uploads must be signed with the caller's own key");
  }
  AccessPolicy p;
  p.discoverable = policy.discoverable;
  p.access = policy.access;
  p.derivation_allowed = policy.derivation_allowed;
  p.allowed_task_types = policy.allowed_task_types;
  p.dp_filter = policy.dp_filter;
  validate(p);

  auto id = store_->ingest(request);
  p.dataset = id;
  policy_->register_policy(p, who.key);
  std::optional<WhyProfile> why;
  if (request.metadata && request.metadata->why && !trim(*request.metadata->why).empty()) {
    why = WhyProfile{trim(*request.metadata->why), who.user, WhyProvenance::kHuman};
  }
  catalog_->profile(*store_, id, p.access, why);
  index_->index(*catalog_, id, !request.encrypted);
  return id;
}

int Station::update(const Principal& who, const DatasetId& id, std::string_view content,
                    std::string_view signature) {
  std::lock_guard lock(mu_);
  int version = store_->update(id, content, who.key, signature);
  reindex(id);
  executor_->invalidate({id});
  return version;
}

std::set<DatasetId> Station::forget(const Principal& who, const DatasetId& id) {
  std::lock_guard lock(mu_);
  auto rec = store_->get(id);
  if (rec.derived() || who.key.empty() || rec.owner_key != who.key) {
    throw Error(ErrorCode::kNotOwner, "only the contributor can delete a dataset");
  }
  auto doomed = store_->cascade_delete(id, "right to be forgotten");
  policy_->revoke_assets(doomed);
  catalog_->remove(doomed);
  index_->remove(doomed);
  executor_->purge(doomed);
  return doomed;
}

std::set<DatasetId> Station::enforce_retention() {
  std::lock_guard lock(mu_);
  std::map<DatasetId, Timestamp> created;
  for (const auto& r : store_->list()) {
    if (!r.derived()) created[r.id] = r.created_at;
  }
  std::set<DatasetId> removed;
  for (const auto& id : policy_->past_retention(created)) {
    if (!store_->contains(id)) continue;
    auto doomed = store_->cascade_delete(id, "retention");
    policy_->revoke_assets(doomed);
    catalog_->remove(doomed);
    index_->remove(doomed);
    executor_->purge(doomed);
    removed.insert(doomed.begin(), doomed.end());
  }
  return removed;
}

std::vector<ProfileSet> Station::search_catalog(const Principal& who,
                                                const CatalogQuery& query) const {
  std::lock_guard lock(mu_);
  auto graph = store_->provenance();
  auto ids = catalog_->query(
      query, [&](const DatasetId& id) { return policy_->discoverable_to(who, id); }, graph);
  std::vector<ProfileSet> out;
  for (const auto& id : ids) {
    if (auto p = catalog_->get(id)) out.push_back(*p);
  }
  return out;
}

void Station::run(Submission& s) {
  s.status = SubmissionStatus::kRunning;
  ++s.runs;
  auto outcome = executor_->execute(s.capsule, {s.user, ""}, config_.budget);
  s.best_dos = outcome.best_dos;
  s.note = outcome.note;
  s.task_ids = outcome.task_ids;
  switch (outcome.status) {
    case ExecutionOutcome::Status::kSatisfied:
      s.status = SubmissionStatus::kSatisfied;
      s.result_id = outcome.result->id;
      break;
    case ExecutionOutcome::Status::kBlocked: s.status = SubmissionStatus::kBlocked; break;
    case ExecutionOutcome::Status::kUnsatisfied: s.status = SubmissionStatus::kUnsatisfied; break;
  }
}

Submission Station::submit(const Principal& who, const TaskCapsule& capsule) {
  std::lock_guard lock(mu_);
  Submission s;
  s.id = ids_->next_token("sub");
  s.user = who.user;
  s.capsule = capsule;
  s.capsule.submitter = who.user;
  s.fingerprint = fingerprint(capsule);
  run(s);
  submissions_[s.id] = s;
  submission_order_.push_back(s.id);
  return s;
}

Submission Station::submission(const Principal& who, const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = submissions_.find(id);
  if (it == submissions_.end() || it->second.user != who.user) {
    throw Error(ErrorCode::kNotFound, "no submission " + id);
  }
  return it->second;
}

std::vector<Submission> Station::submissions_of(const Principal& who) const {
  std::lock_guard lock(mu_);
  std::vector<Submission> out;
  for (const auto& id : submission_order_) {
    const auto& s = submissions_.at(id);
    if (s.user == who.user) out.push_back(s);
  }
  return out;
}

ReleaseOutcome Station::release(const Principal& who, const std::string& result_id,
                                const std::vector<std::string>& tokens) {
  std::lock_guard lock(mu_);
  return executor_->release(result_id, who, tokens);
}

std::string Station::predict(const Principal& who, const DatasetId& model,
                             const std::map<std::string, std::string>& row) {
  std::lock_guard lock(mu_);
  return executor_->predict(model, who, row);
}

std::vector<AccessRequest> Station::access_requests(const Principal& who) const {
  std::lock_guard lock(mu_);
  std::vector<AccessRequest> out;
  std::set<std::string> seen;
  if (!who.key.empty()) {
    for (auto& r : policy_->requests_for_owner(who.key)) {
      seen.insert(r.id);
      out.push_back(std::move(r));
    }
  }
  for (auto& r : policy_->requests_of(who.user)) {
    if (seen.count(r.id)) {
      // The requester's own view carries the token.
      for (auto& o : out) {
        if (o.id == r.id) o = r;
      }
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

AccessVerdict Station::request_access(const Principal& who, const DatasetId& dataset,
                                     TaskType task, const std::string& capsule_fingerprint) {
  std::lock_guard lock(mu_);
  if (!store_->contains(dataset) || !policy_->discoverable_to(who, dataset)) {
    throw Error(ErrorCode::kNotFound, "no dataset " + dataset.hex());
  }
  return policy_->evaluate_access(who, dataset, task, capsule_fingerprint);
}

PolicyEngine::Decision Station::decide(const Principal& who, const std::string& request_id,
                                       bool approve, const TokenGrant& grant) {
  std::lock_guard lock(mu_);
  return policy_->decide_request(request_id, who.key, approve, grant);
}

TokenVerdict Station::verify_token(std::string_view wire, const Principal& who,
                                   const std::set<DatasetId>& needed) {
  std::lock_guard lock(mu_);
  return policy_->verify_and_consume(wire, who.user, needed);
}

std::vector<HumanTask> Station::tasks_for(const Principal& who) const {
  std::lock_guard lock(mu_);
  return market_->visible_to(who.user);
}

HumanTask Station::claim(const Principal& who, const std::string& task_id) {
  std::lock_guard lock(mu_);
  return market_->claim(task_id, who.user);
}

AnswerOutcome Station::answer(const Principal& who, const std::string& task_id,
                              const AnswerContent& content) {
  std::lock_guard lock(mu_);
  AnswerOutcome out;
  out.answer = market_->submit_answer(task_id, who.user, content);
  out.task = market_->task(task_id);
  if (out.task.kind == TaskKind::kJoinDisambiguation) {
    const auto& chosen = out.task.alternatives.at(*out.answer.alternative);
    index_->annotate(chosen.left, chosen.right);
  } else if (out.task.dataset && store_->contains(*out.task.dataset)) {
    catalog_->upsert_why(*out.task.dataset, out.answer.text, who.user, clock_->now());
    reindex(*out.task.dataset);
  }
  for (const auto& id : submission_order_) {
    auto& s = submissions_.at(id);
    if (s.status != SubmissionStatus::kBlocked || !out.task.blocking.count(s.fingerprint)) continue;
    if (std::find(s.task_ids.begin(), s.task_ids.end(), task_id) == s.task_ids.end()) continue;
    run(s);
    out.resumed.push_back(s);
  }
  return out;
}

std::int64_t Station::balance(const Principal& who) const {
  std::lock_guard lock(mu_);
  return market_->balance(who.user);
}

void Station::fund(const std::string& user, std::int64_t amount) {
  std::lock_guard lock(mu_);
  market_->mint(user, amount);
}

std::string Station::audit_log() const {
  std::lock_guard lock(mu_);
  return executor_->audit().read();
}

}  // namespace station
