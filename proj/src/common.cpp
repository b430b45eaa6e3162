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

#include "station/common.hpp"

#include <cctype>
#include <chrono>

#include "station/crypto.hpp"

namespace station {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSignatureInvalid: return "SignatureInvalid";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kEncryptedWithoutMetadata: return "EncryptedWithoutMetadata";
    case ErrorCode::kNotOwner: return "NotOwner";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUnknownParent: return "UnknownParent";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kNoDpPolicy: return "NoDpPolicy";
    case ErrorCode::kInvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::kAlreadyDecided: return "AlreadyDecided";
    case ErrorCode::kUnknownTaskType: return "UnknownTaskType";
    case ErrorCode::kPayloadMismatch: return "PayloadMismatch";
    case ErrorCode::kDosMismatch: return "DosMismatch";
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kNotProfiled: return "NotProfiled";
    case ErrorCode::kNoViablePlan: return "NoViablePlan";
    case ErrorCode::kGovernanceViolation: return "GovernanceViolation";
    case ErrorCode::kJoinEmpty: return "JoinEmpty";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kAccessDenied: return "AccessDenied";
    case ErrorCode::kRevoked: return "Revoked";
    case ErrorCode::kInsufficientEscrowFunds: return "InsufficientEscrowFunds";
    case ErrorCode::kAlreadyClaimed: return "AlreadyClaimed";
    case ErrorCode::kSelfClaim: return "SelfClaim";
    case ErrorCode::kNotClaimant: return "NotClaimant";
    case ErrorCode::kInvalidAlternative: return "InvalidAlternative";
    case ErrorCode::kTaskNotClaimed: return "TaskNotClaimed";
    case ErrorCode::kTaskClosed: return "TaskClosed";
    case ErrorCode::kUnauthenticated: return "Unauthenticated";
    case ErrorCode::kForbidden: return "Forbidden";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::optional<DatasetId> DatasetId::parse(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  for (char c : hex) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return std::nullopt;
  }
  auto bytes = crypto::from_hex(hex);
  if (!bytes || bytes->size() != 16) return std::nullopt;
  std::array<std::uint8_t, 16> out{};
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return DatasetId(out);
}

std::string DatasetId::hex() const { return crypto::to_hex(bytes_); }

bool DatasetId::is_nil() const noexcept {
  for (auto b : bytes_) {
    if (b != 0) return false;
  }
  return true;
}

std::string_view task_type_name(TaskType type) {
  switch (type) {
    case TaskType::kSearch: return "search";
    case TaskType::kQbe: return "qbe";
    case TaskType::kClassify: return "classify";
  }
  return "search";
}

std::optional<TaskType> parse_task_type(std::string_view name) {
  if (name == "search") return TaskType::kSearch;
  if (name == "qbe") return TaskType::kQbe;
  if (name == "classify") return TaskType::kClassify;
  return std::nullopt;
}

Timestamp SystemClock::now() const {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

IdSource::IdSource() = default;

IdSource::IdSource(std::uint64_t seed) : rng_(std::mt19937_64(seed)) {}

std::array<std::uint8_t, 16> IdSource::next_bytes() {
  std::array<std::uint8_t, 16> out{};
  std::lock_guard lock(mu_);
  if (!rng_) {
    crypto::random_bytes(out);
    return out;
  }
  for (int half = 0; half < 2; ++half) {
    std::uint64_t v = (*rng_)();
    for (int i = 0; i < 8; ++i) out[half * 8 + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  return out;
}

std::string IdSource::next_token(std::string_view prefix) {
  auto bytes = next_bytes();
  return std::string(prefix) + "-" +
         crypto::to_hex(std::span<const std::uint8_t>(bytes.data(), 8));
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string normalize_name(std::string_view name) {
  std::string lowered = to_lower(trim(name));
  std::string out;
  bool pending_sep = false;
  for (char c : lowered) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace station
