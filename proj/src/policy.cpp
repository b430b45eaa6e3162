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

#include "station/policy.hpp"

#include <cmath>

#include "station/crypto.hpp"

namespace station {

std::string_view access_mode_name(AccessMode mode) {
  switch (mode) {
    case AccessMode::kOpen: return "open";
    case AccessMode::kClosed: return "closed";
    case AccessMode::kBrokered: return "brokered";
  }
  return "closed";
}

std::optional<AccessMode> parse_access_mode(std::string_view name) {
  if (name == "open") return AccessMode::kOpen;
  if (name == "closed") return AccessMode::kClosed;
  if (name == "brokered") return AccessMode::kBrokered;
  return std::nullopt;
}

std::string_view deny_reason_name(DenyReason reason) {
  switch (reason) {
    case DenyReason::kBadMac: return "BadMac";
    case DenyReason::kExpired: return "Expired";
    case DenyReason::kExhausted: return "Exhausted";
    case DenyReason::kRevoked: return "Revoked";
    case DenyReason::kWrongSubject: return "WrongSubject";
    case DenyReason::kScopeTooNarrow: return "ScopeTooNarrow";
  }
  return "BadMac";
}

std::string_view request_status_name(RequestStatus status) {
  switch (status) {
    case RequestStatus::kPending: return "pending";
    case RequestStatus::kApproved: return "approved";
    case RequestStatus::kDenied: return "denied";
  }
  return "pending";
}

std::string_view violation_kind_name(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kPii: return "PII";
    case Violation::Kind::kModelClass: return "ModelClass";
    case Violation::Kind::kDerivationForbidden: return "DerivationForbidden";
  }
  return "PII";
}

void validate(const AccessPolicy& policy) {
  if (policy.dp_filter) {
    const auto& dp = *policy.dp_filter;
    if (!(dp.epsilon_total > 0) || !(dp.epsilon_per_query > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "epsilon values must be positive");
    }
    if (dp.epsilon_per_query > dp.epsilon_total) {
      throw Error(ErrorCode::kInvalidArgument, "epsilon_per_query exceeds epsilon_total");
    }
  }
}

std::set<std::string> default_pii_dictionary() {
  return {"ssn",          "social_security_number", "dob",           "date_of_birth",
          "email",        "phone",                  "phone_number",  "passport_number",
          "credit_card",  "drivers_license",        "national_id",   "ip_address"};
}

// ---------------------------------------------------------------------------
// Token wire format

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_field(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> bytes) {
  put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.insert(out.end(), bytes.begin(), bytes.end());
}

std::uint64_t get_be(std::span<const std::uint8_t> bytes) {
  std::uint64_t v = 0;
  for (auto b : bytes) v = v << 8 | b;
  return v;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::optional<std::span<const std::uint8_t>> field() {
    if (data_.size() - pos_ < 4) return std::nullopt;
    auto len = static_cast<std::size_t>(get_be(data_.subspan(pos_, 4)));
    pos_ += 4;
    if (data_.size() - pos_ < len) return std::nullopt;
    auto out = data_.subspan(pos_, len);
    pos_ += len;
    return out;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kMacSize = 32;

}  // namespace

std::vector<std::uint8_t> encode_token_payload(const CapabilityToken& token) {
  std::vector<std::uint8_t> out;
  put_field(out, token.token_id);
  put_field(out, crypto::as_bytes(token.subject));
  std::vector<std::uint8_t> ids;
  for (const auto& d : token.dataset_ids) ids.insert(ids.end(), d.bytes().begin(), d.bytes().end());
  put_field(out, ids);
  std::vector<std::uint8_t> expiry;
  if (token.expiry) {
    auto v = static_cast<std::uint64_t>(*token.expiry);
    for (int shift = 56; shift >= 0; shift -= 8) expiry.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  put_field(out, expiry);
  std::vector<std::uint8_t> uses;
  if (token.uses) put_u32(uses, *token.uses);
  put_field(out, uses);
  return out;
}

std::string seal_token(const CapabilityToken& token, std::span<const std::uint8_t> secret) {
  auto payload = encode_token_payload(token);
  auto mac = crypto::hmac_sha256(secret, payload);
  payload.insert(payload.end(), mac.begin(), mac.end());
  return crypto::base64url_encode(payload);
}

std::optional<CapabilityToken> open_token(std::string_view wire,
                                          std::span<const std::uint8_t> secret) {
  auto raw = crypto::base64url_decode(wire);
  if (!raw || raw->size() < kMacSize) return std::nullopt;
  std::span<const std::uint8_t> all(*raw);
  auto payload = all.first(all.size() - kMacSize);
  auto mac = all.last(kMacSize);
  auto expected = crypto::hmac_sha256(secret, payload);
  if (!crypto::constant_time_equal(mac, expected)) return std::nullopt;

  Reader r(payload);
  auto id = r.field();
  auto subject = r.field();
  auto ids = r.field();
  auto expiry = r.field();
  auto uses = r.field();
  if (!id || !subject || !ids || !expiry || !uses || !r.done()) return std::nullopt;
  if (id->size() != 16 || ids->size() % 16 != 0) return std::nullopt;
  if (!expiry->empty() && expiry->size() != 8) return std::nullopt;
  if (!uses->empty() && uses->size() != 4) return std::nullopt;

  CapabilityToken t;
  std::copy(id->begin(), id->end(), t.token_id.begin());
  t.subject.assign(subject->begin(), subject->end());
  for (std::size_t i = 0; i < ids->size(); i += 16) {
    std::array<std::uint8_t, 16> b{};
    std::copy_n(ids->begin() + static_cast<std::ptrdiff_t>(i), 16, b.begin());
    t.dataset_ids.insert(DatasetId(b));
  }
  if (!expiry->empty()) t.expiry = static_cast<Timestamp>(get_be(*expiry));
  if (!uses->empty()) t.uses = static_cast<std::uint32_t>(get_be(*uses));
  return t;
}

// ---------------------------------------------------------------------------
// LaplaceSampler

namespace {
std::uint64_t os_seed() {
  std::array<std::uint8_t, 8> b{};
  crypto::random_bytes(b);
  return get_be(b);
}
}  // namespace

LaplaceSampler::LaplaceSampler(std::optional<std::uint64_t> seed)
    : rng_(seed ? *seed : os_seed()) {}

double LaplaceSampler::sample(double scale) {
  std::lock_guard lock(mu_);
  double u = 0;
  do {
    u = static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 0.5;  // [-0.5, 0.5)
  } while (u == -0.5);
  double sign = u < 0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

// ---------------------------------------------------------------------------
// PolicyEngine

PolicyEngine::PolicyEngine(GovernancePolicy governance, std::array<std::uint8_t, 32> secret,
                           const Clock& clock, IdSource& ids, std::optional<std::uint64_t> dp_seed)
    : governance_(std::move(governance)),
      secret_(secret),
      clock_(clock),
      ids_(ids),
      sampler_(dp_seed) {
  std::set<std::string> lowered;
  for (const auto& p : governance_.pii_dictionary) lowered.insert(to_lower(trim(p)));
  governance_.pii_dictionary = std::move(lowered);
}

void PolicyEngine::register_policy(const AccessPolicy& policy, const std::string& owner_key) {
  validate(policy);
  std::unique_lock lock(mu_);
  policies_[policy.dataset] = Entry{policy, owner_key};
  if (policy.dp_filter) {
    budgets_.try_emplace(policy.dataset, EpsilonBudget{policy.dataset, policy.dp_filter->epsilon_total,
                                                       policy.dp_filter->epsilon_per_query, 0});
  }
}

void PolicyEngine::replace_policy(const AccessPolicy& policy, const std::string& owner_key) {
  validate(policy);
  std::unique_lock lock(mu_);
  auto it = policies_.find(policy.dataset);
  if (it == policies_.end()) throw Error(ErrorCode::kNotFound, "no policy for dataset");
  if (it->second.owner_key != owner_key) throw Error(ErrorCode::kNotOwner, "not the owner");
  it->second.policy = policy;
  if (policy.dp_filter) {
    auto& b = budgets_[policy.dataset];
    b.dataset = policy.dataset;
    b.epsilon_total = policy.dp_filter->epsilon_total;
    b.epsilon_per_query = policy.dp_filter->epsilon_per_query;
  } else {
    budgets_.erase(policy.dataset);
  }
}

const PolicyEngine::Entry& PolicyEngine::entry(const DatasetId& dataset) const {
  auto it = policies_.find(dataset);
  if (it == policies_.end()) throw Error(ErrorCode::kNotFound, "no policy for " + dataset.hex());
  return it->second;
}

std::optional<AccessPolicy> PolicyEngine::policy(const DatasetId& dataset) const {
  std::shared_lock lock(mu_);
  auto it = policies_.find(dataset);
  if (it == policies_.end()) return std::nullopt;
  return it->second.policy;
}

std::optional<std::string> PolicyEngine::owner_key(const DatasetId& dataset) const {
  std::shared_lock lock(mu_);
  auto it = policies_.find(dataset);
  if (it == policies_.end()) return std::nullopt;
  return it->second.owner_key;
}

bool PolicyEngine::is_owner(const Principal& who, const DatasetId& dataset) const {
  auto key = owner_key(dataset);
  return key && !who.key.empty() && *key == who.key;
}

bool PolicyEngine::discoverable_to(const Principal& who, const DatasetId& dataset) const {
  std::shared_lock lock(mu_);
  auto it = policies_.find(dataset);
  if (it == policies_.end()) return false;
  const auto& e = it->second;
  if (!who.key.empty() && e.owner_key == who.key) return true;
  return e.policy.discoverable && e.policy.access != AccessMode::kClosed;
}

AccessVerdict::Kind PolicyEngine::base_decision(const Principal& who, const Entry& e,
                                                TaskType task) const {
  using K = AccessVerdict::Kind;
  if (!who.key.empty() && e.owner_key == who.key) return K::kAllow;
  const auto& allowed = e.policy.allowed_task_types;
  if (!allowed.empty() && !allowed.count(task)) return K::kDeny;
  switch (e.policy.access) {
    case AccessMode::kOpen: return K::kAllow;
    case AccessMode::kClosed: return K::kDeny;
    case AccessMode::kBrokered: break;
  }
  bool denied = false;
  for (const auto& [_, r] : requests_) {
    if (r.requester != who.user || r.dataset != e.policy.dataset) continue;
    if (r.status == RequestStatus::kApproved) return K::kAllow;
    if (r.status == RequestStatus::kDenied) denied = true;
  }
  const auto now = clock_.now();
  for (const auto& [_, issued] : tokens_) {
    const auto& t = issued.token;
    if (issued.revoked || t.subject != who.user || !t.dataset_ids.count(e.policy.dataset)) continue;
    if (t.expiry && now > *t.expiry) continue;
    if (issued.uses_remaining && *issued.uses_remaining == 0) continue;
    return K::kAllow;
  }
  return denied ? K::kDeny : K::kNeedsApproval;
}

AccessVerdict PolicyEngine::evaluate_access(const Principal& who, const DatasetId& dataset,
                                            TaskType task, std::string_view fingerprint) {
  std::unique_lock lock(mu_);
  const auto& e = entry(dataset);
  auto kind = base_decision(who, e, task);
  if (kind != AccessVerdict::Kind::kNeedsApproval) return {kind, std::nullopt};
  for (const auto& [id, r] : requests_) {
    if (r.requester == who.user && r.dataset == dataset && r.status == RequestStatus::kPending) {
      return {kind, id};
    }
  }
  AccessRequest req;
  req.id = ids_.next_token("req");
  req.requester = who.user;
  req.dataset = dataset;
  req.capsule_fingerprint = std::string(fingerprint);
  auto id = req.id;
  requests_.emplace(id, std::move(req));
  return {kind, id};
}

AccessVerdict::Kind PolicyEngine::peek_access(const Principal& who, const DatasetId& dataset,
                                              TaskType task) const {
  std::shared_lock lock(mu_);
  return base_decision(who, entry(dataset), task);
}

PolicyEngine::Decision PolicyEngine::decide_request(const std::string& request_id,
                                                    const std::string& owner_key, bool approve,
                                                    const TokenGrant& grant) {
  std::unique_lock lock(mu_);
  auto it = requests_.find(request_id);
  if (it == requests_.end()) throw Error(ErrorCode::kNotFound, "no access request " + request_id);
  auto& req = it->second;
  const auto& e = entry(req.dataset);
  if (owner_key.empty() || e.owner_key != owner_key) {
    throw Error(ErrorCode::kNotOwner, "only the dataset owner can decide");
  }
  if (req.status != RequestStatus::kPending) {
    throw Error(ErrorCode::kAlreadyDecided, "request already decided");
  }
  req.status = approve ? RequestStatus::kApproved : RequestStatus::kDenied;
  req.decided_by = owner_key;
  Decision d;
  if (approve) {
    CapabilityToken t;
    t.token_id = ids_.next_bytes();
    t.subject = req.requester;
    t.dataset_ids = {req.dataset};
    t.expiry = grant.expiry;
    t.uses = grant.uses;
    tokens_[t.token_id] = IssuedToken{t, t.uses, false};
    req.token = seal_token(t, secret_);
    d.token = req.token;
  }
  d.request = req;
  return d;
}

std::vector<AccessRequest> PolicyEngine::requests_for_owner(const std::string& owner_key) const {
  std::shared_lock lock(mu_);
  std::vector<AccessRequest> out;
  for (const auto& [_, r] : requests_) {
    auto it = policies_.find(r.dataset);
    if (it != policies_.end() && !owner_key.empty() && it->second.owner_key == owner_key) {
      auto copy = r;
      copy.token.reset();
      out.push_back(std::move(copy));
    }
  }
  return out;
}

std::vector<AccessRequest> PolicyEngine::requests_of(const std::string& requester) const {
  std::shared_lock lock(mu_);
  std::vector<AccessRequest> out;
  for (const auto& [_, r] : requests_) {
    if (r.requester == requester) out.push_back(r);
  }
  return out;
}

std::optional<AccessRequest> PolicyEngine::request(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = requests_.find(id);
  if (it == requests_.end()) return std::nullopt;
  return it->second;
}

std::string PolicyEngine::mint_token(const std::string& subject,
                                     const std::set<DatasetId>& datasets,
                                     const TokenGrant& grant) {
  if (grant.uses && *grant.uses == 0) {
    throw Error(ErrorCode::kInvalidArgument, "uses must be positive when bounded");
  }
  CapabilityToken t;
  t.token_id = ids_.next_bytes();
  t.subject = subject;
  t.dataset_ids = datasets;
  t.expiry = grant.expiry;
  t.uses = grant.uses;
  std::unique_lock lock(mu_);
  tokens_[t.token_id] = IssuedToken{t, t.uses, false};
  return seal_token(t, secret_);
}

TokenVerdict PolicyEngine::verify_and_consume(std::string_view wire, const std::string& user,
                                              const std::set<DatasetId>& needed) {
  auto token = open_token(wire, secret_);
  if (!token) return {false, DenyReason::kBadMac, std::nullopt};
  std::unique_lock lock(mu_);
  auto deny = [&](DenyReason r) { return TokenVerdict{false, r, token}; };
  auto it = tokens_.find(token->token_id);
  if (it == tokens_.end() || it->second.revoked) return deny(DenyReason::kRevoked);
  for (const auto& d : token->dataset_ids) {
    if (revoked_.count(d)) return deny(DenyReason::kRevoked);
  }
  if (token->subject != user) return deny(DenyReason::kWrongSubject);
  for (const auto& d : needed) {
    if (!token->dataset_ids.count(d)) return deny(DenyReason::kScopeTooNarrow);
  }
  if (token->expiry && clock_.now() > *token->expiry) return deny(DenyReason::kExpired);
  auto& remaining = it->second.uses_remaining;
  if (remaining) {
    if (*remaining == 0) return deny(DenyReason::kExhausted);
    --*remaining;
  }
  return {true, DenyReason::kBadMac, token};
}

std::optional<CapabilityToken> PolicyEngine::peek_token(std::string_view wire) const {
  return open_token(wire, secret_);
}

void PolicyEngine::revoke_assets(const std::set<DatasetId>& assets) {
  std::unique_lock lock(mu_);
  revoked_.insert(assets.begin(), assets.end());
  for (const auto& a : assets) {
    policies_.erase(a);
    budgets_.erase(a);
  }
}

bool PolicyEngine::is_revoked(const DatasetId& asset) const {
  std::shared_lock lock(mu_);
  return revoked_.count(asset) != 0;
}

double PolicyEngine::apply_dp(const DatasetId& dataset, double value, double sensitivity,
                              double epsilon) {
  if (!(sensitivity > 0)) throw Error(ErrorCode::kInvalidArgument, "sensitivity must be positive");
  {
    std::unique_lock lock(mu_);
    const auto& e = entry(dataset);
    if (!e.policy.dp_filter) throw Error(ErrorCode::kNoDpPolicy, "dataset has no DP filter");
    auto& b = budgets_.at(dataset);
    if (std::abs(epsilon - b.epsilon_per_query) > 1e-12 * b.epsilon_per_query) {
      throw Error(ErrorCode::kInvalidEpsilon, "epsilon must equal epsilon_per_query");
    }
    // Accounting in whole queries keeps spent == successes * per_query exact.
    double next = static_cast<double>(b.successful_queries + 1) * b.epsilon_per_query;
    if (next > b.epsilon_total * (1.0 + 1e-9)) {
      throw Error(ErrorCode::kBudgetExhausted, "privacy budget exhausted");
    }
    ++b.successful_queries;
  }
  return value + sampler_.sample(sensitivity / epsilon);
}

std::optional<EpsilonBudget> PolicyEngine::budget(const DatasetId& dataset) const {
  std::shared_lock lock(mu_);
  auto it = budgets_.find(dataset);
  if (it == budgets_.end()) return std::nullopt;
  return it->second;
}

void PolicyEngine::reset_budget(const DatasetId& dataset, const std::string& owner_key) {
  std::unique_lock lock(mu_);
  const auto& e = entry(dataset);
  if (e.owner_key != owner_key) throw Error(ErrorCode::kNotOwner, "only the owner can reset");
  auto it = budgets_.find(dataset);
  if (it == budgets_.end()) throw Error(ErrorCode::kNoDpPolicy, "dataset has no DP filter");
  it->second.successful_queries = 0;
}

std::vector<Violation> PolicyEngine::check_governance(const GovernanceInput& input) const {
  std::vector<Violation> out;
  if (governance_.forbid_pii_derivation) {
    for (const auto& src : input.sources) {
      for (const auto& col : src.columns) {
        auto lowered = to_lower(trim(col));
        if (governance_.pii_dictionary.count(lowered)) {
          out.push_back({Violation::Kind::kPii, src.dataset, lowered});
        }
      }
    }
  }
  if (input.task_type == TaskType::kClassify) {
    auto cls = input.model_class.value_or("");
    if (!governance_.allowed_model_classes.count(cls)) {
      out.push_back({Violation::Kind::kModelClass, std::nullopt, cls});
    }
  }
  std::set<DatasetId> distinct;
  for (const auto& src : input.sources) distinct.insert(src.dataset);
  if (distinct.size() > 1) {
    std::shared_lock lock(mu_);
    for (const auto& d : distinct) {
      auto it = policies_.find(d);
      if (it != policies_.end() && !it->second.policy.derivation_allowed) {
        out.push_back({Violation::Kind::kDerivationForbidden, d, "derivation forbidden"});
      }
    }
  }
  return out;
}

std::vector<DatasetId> PolicyEngine::past_retention(
    const std::map<DatasetId, Timestamp>& created_at) const {
  std::vector<DatasetId> out;
  if (!governance_.retention_seconds) return out;
  const auto now = clock_.now();
  for (const auto& [id, created] : created_at) {
    if (now - created > *governance_.retention_seconds) out.push_back(id);
  }
  return out;
}

}  // namespace station
