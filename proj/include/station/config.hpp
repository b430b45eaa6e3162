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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "station/blending.hpp"
#include "station/discovery.hpp"
#include "station/executor.hpp"
#include "station/market.hpp"

namespace station {

enum class Role { kContributor, kUser, kOwner };

std::string_view role_name(Role role);

struct UserIdentity {
  std::string user;
  std::set<Role> roles;
  /// Contributor public key (hex); empty for pure data users.
  std::string key;
  /// Bearer secret presented on every request.
  std::string secret;
  /// Currency minted to the user at startup.
  std::int64_t credit = 0;

  bool has(Role r) const { return roles.count(r) != 0; }
  Principal principal() const { return {user, key}; }
};

struct StationConfig {
  std::filesystem::path store_root;
  /// 64 hex characters: the token MAC secret.
  std::filesystem::path key_file;
  /// One column name per line; the built-in dictionary when absent.
  std::optional<std::filesystem::path> pii_dictionary;
  DiscoveryConfig discovery;
  BlendConfig blend;
  ExecutionBudget budget;
  PricePolicy prices;
  std::int64_t claim_ttl_seconds = 24 * 3600;
  bool forbid_pii_derivation = false;
  std::optional<std::int64_t> retention_seconds;
  /// Fixed seeds and a frozen clock make runs replayable.
  std::optional<std::uint64_t> dp_seed;
  std::optional<std::uint64_t> id_seed;
  std::optional<Timestamp> clock_start;
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::map<std::string, UserIdentity> users;
};

/// Parses the flat `key = value` format; `#` starts a comment line.
/// Relative paths resolve against `base_dir`. Throws InvalidConfig listing
/// every problem found.
StationConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

/// Reads and parses a config file, then checks that every referenced path
/// exists. Throws InvalidConfig.
StationConfig load_config(const std::filesystem::path& path);

/// Range checks shared by both entry points. Throws InvalidConfig.
void validate(const StationConfig& config);

/// Reads the token secret. Throws InvalidConfig on a malformed key file.
std::array<std::uint8_t, 32> read_key_file(const std::filesystem::path& path);
/// Writes a fresh random secret.
void write_key_file(const std::filesystem::path& path);

/// Reads a dictionary file: one name per line, blank lines and `#` ignored.
std::set<std::string> read_pii_dictionary(const std::filesystem::path& path);

}  // namespace station
