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
#include <atomic>
#include <compare>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace station {

/// UTC seconds since the epoch.
using Timestamp = std::int64_t;

enum class ErrorCode {
  kSignatureInvalid,
  kMalformedCsv,
  kEncryptedWithoutMetadata,
  kNotOwner,
  kNotFound,
  kUnknownParent,
  kCycleDetected,
  kEmptyText,
  kBudgetExhausted,
  kNoDpPolicy,
  kInvalidEpsilon,
  kAlreadyDecided,
  kUnknownTaskType,
  kPayloadMismatch,
  kDosMismatch,
  kMalformedDocument,
  kNotProfiled,
  kNoViablePlan,
  kGovernanceViolation,
  kJoinEmpty,
  kSchemaMismatch,
  kAccessDenied,
  kRevoked,
  kInsufficientEscrowFunds,
  kAlreadyClaimed,
  kSelfClaim,
  kNotClaimant,
  kInvalidAlternative,
  kTaskNotClaimed,
  kTaskClosed,
  kUnauthenticated,
  kForbidden,
  kInvalidConfig,
  kInvalidArgument,
  kIoError,
};

/// Stable wire name of an error code, e.g. "SignatureInvalid".
std::string_view error_name(ErrorCode code);

/// Every module reports failures through this exception. `details` carries
/// per-item findings when one call detects several problems at once.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

/// 128-bit asset identifier, rendered as 32 lowercase hex characters.
class DatasetId {
 public:
  DatasetId() = default;
  explicit DatasetId(const std::array<std::uint8_t, 16>& bytes) : bytes_(bytes) {}

  /// Parses the 32-char hex rendering; nullopt on anything else.
  static std::optional<DatasetId> parse(std::string_view hex);

  std::string hex() const;
  const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }
  bool is_nil() const noexcept;

  auto operator<=>(const DatasetId&) const = default;

 private:
  std::array<std::uint8_t, 16> bytes_{};
};

inline std::string to_string(const DatasetId& id) { return id.hex(); }

enum class TaskType { kSearch, kQbe, kClassify };

std::string_view task_type_name(TaskType type);
std::optional<TaskType> parse_task_type(std::string_view name);

/// The caller of a station operation. `key` is the contributor's public key
/// fingerprint and is empty for pure data users.
struct Principal {
  std::string user;
  std::string key;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

/// Test and replay clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = 1'700'000'000) : now_(start) {}
  Timestamp now() const override { return now_.load(); }
  void advance(Timestamp seconds) { now_ += seconds; }
  void set(Timestamp t) { now_ = t; }

 private:
  std::atomic<Timestamp> now_;
};

/// Source of fresh 128-bit identifiers. Seeded sources make runs replayable;
/// unseeded ones draw from the OS CSPRNG.
class IdSource {
 public:
  IdSource();
  explicit IdSource(std::uint64_t seed);

  std::array<std::uint8_t, 16> next_bytes();
  DatasetId next_dataset_id() { return DatasetId(next_bytes()); }
  /// Short opaque identifier for requests, tasks, results.
  std::string next_token(std::string_view prefix);

 private:
  std::mutex mu_;
  std::optional<std::mt19937_64> rng_;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Lowercase, trimmed column name with runs of spaces, dashes and
/// underscores folded to a single underscore. Used for all name matching.
std::string normalize_name(std::string_view name);

/// Lowercase alphanumeric tokens of a string, in order of appearance.
std::vector<std::string> tokenize(std::string_view s);

}  // namespace station
