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

#include "station/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "station/crypto.hpp"
#include "station/table.hpp"

namespace station {

namespace fs = std::filesystem;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kContributor: return "contributor";
    case Role::kUser: return "user";
    case Role::kOwner: return "owner";
  }
  return "user";
}

namespace {

std::optional<Role> parse_role(std::string_view s) {
  if (s == "contributor") return Role::kContributor;
  if (s == "user") return Role::kUser;
  if (s == "owner") return Role::kOwner;
  return std::nullopt;
}

template <typename T>
std::optional<T> parse_int(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

StationConfig parse_config(std::string_view text, const fs::path& base_dir) {
  StationConfig cfg;
  std::vector<std::string> problems;
  auto resolve = [&](const std::string& v) {
    fs::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  using Setter = std::function<bool(const std::string&)>;
  auto real = [](double& out) -> Setter {
    return [&out](const std::string& v) {
      auto x = parse_number(v);
      if (x) out = *x;
      return x.has_value();
    };
  };
  auto int64 = [](std::int64_t& out) -> Setter {
    return [&out](const std::string& v) {
      auto x = parse_int<std::int64_t>(v);
      if (x) out = *x;
      return x.has_value();
    };
  };
  auto size = [](std::size_t& out) -> Setter {
    return [&out](const std::string& v) {
      auto x = parse_int<std::size_t>(v);
      if (x) out = *x;
      return x.has_value();
    };
  };
  std::map<std::string, Setter> setters = {
      {"store_root", [&](const std::string& v) { cfg.store_root = resolve(v); return true; }},
      {"key_file", [&](const std::string& v) { cfg.key_file = resolve(v); return true; }},
      {"pii_dictionary", [&](const std::string& v) { cfg.pii_dictionary = resolve(v); return true; }},
      {"discovery.w_keyword", real(cfg.discovery.w_keyword)},
      {"discovery.w_coverage", real(cfg.discovery.w_coverage)},
      {"discovery.w_overlap", real(cfg.discovery.w_overlap)},
      {"discovery.join_threshold", real(cfg.discovery.join_threshold)},
      {"discovery.max_candidates", size(cfg.discovery.max_candidates)},
      {"blend.match_fraction", real(cfg.blend.match_fraction)},
      {"blend.tie_tolerance", real(cfg.blend.tie_tolerance)},
      {"budget.max_candidates", size(cfg.budget.max_candidates)},
      {"budget.max_seconds", real(cfg.budget.max_seconds)},
      {"market.price.join_disambiguation", int64(cfg.prices.join_disambiguation)},
      {"market.price.why_profile_request", int64(cfg.prices.why_profile_request)},
      {"market.claim_ttl_seconds", int64(cfg.claim_ttl_seconds)},
      {"governance.forbid_pii_derivation",
       [&](const std::string& v) {
         auto b = parse_bool(v);
         if (b) cfg.forbid_pii_derivation = *b;
         return b.has_value();
       }},
      {"governance.retention_seconds",
       [&](const std::string& v) {
         auto x = parse_int<std::int64_t>(v);
         if (x) cfg.retention_seconds = *x;
         return x.has_value();
       }},
      {"dp.test_seed",
       [&](const std::string& v) {
         auto x = parse_int<std::uint64_t>(v);
         if (x) cfg.dp_seed = *x;
         return x.has_value();
       }},
      {"ids.seed",
       [&](const std::string& v) {
         auto x = parse_int<std::uint64_t>(v);
         if (x) cfg.id_seed = *x;
         return x.has_value();
       }},
      {"clock.start",
       [&](const std::string& v) {
         auto x = parse_int<Timestamp>(v);
         if (x) cfg.clock_start = *x;
         return x.has_value();
       }},
      {"listen.host", [&](const std::string& v) { cfg.listen_host = v; return !v.empty(); }},
      {"listen.port",
       [&](const std::string& v) {
         auto x = parse_int<int>(v);
         if (x) cfg.listen_port = *x;
         return x.has_value();
       }},
  };

  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto key = trim(t.substr(0, eq));
    auto value = trim(t.substr(eq + 1));
    auto where = "line " + std::to_string(line_no) + ": ";

    if (key.rfind("user.", 0) == 0) {
      auto rest = key.substr(5);
      auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0) {
        problems.push_back(where + "expected user.<name>.<field>");
        continue;
      }
      auto name = rest.substr(0, dot);
      auto field = rest.substr(dot + 1);
      auto& u = cfg.users[name];
      u.user = name;
      if (field == "secret") {
        u.secret = value;
      } else if (field == "key") {
        u.key = to_lower(value);
      } else if (field == "credit") {
        auto x = parse_int<std::int64_t>(value);
        if (!x) problems.push_back(where + "credit must be an integer");
        else u.credit = *x;
      } else if (field == "roles") {
        for (const auto& r : split(value, ',')) {
          auto role = parse_role(trim(r));
          if (!role) problems.push_back(where + "unknown role '" + trim(r) + "'");
          else u.roles.insert(*role);
        }
      } else {
        problems.push_back(where + "unknown user field '" + field + "'");
      }
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) {
      problems.push_back(where + "unknown key '" + key + "'");
    } else if (!it->second(value)) {
      problems.push_back(where + "bad value for " + key + ": '" + value + "'");
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidConfig, "invalid configuration", problems);
  validate(cfg);
  return cfg;
}

void validate(const StationConfig& c) {
  std::vector<std::string> problems;
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0 && v <= 1)) problems.push_back(std::string(name) + " must be in [0,1]");
  };
  unit(c.discovery.w_keyword, "discovery.w_keyword");
  unit(c.discovery.w_coverage, "discovery.w_coverage");
  unit(c.discovery.w_overlap, "discovery.w_overlap");
  unit(c.discovery.join_threshold, "discovery.join_threshold");
  unit(c.blend.match_fraction, "blend.match_fraction");
  unit(c.blend.tie_tolerance, "blend.tie_tolerance");
  if (c.discovery.max_candidates < 1) problems.push_back("discovery.max_candidates must be >= 1");
  if (c.budget.max_candidates < 1) problems.push_back("budget.max_candidates must be >= 1");
  if (!(c.budget.max_seconds > 0)) problems.push_back("budget.max_seconds must be positive");
  if (c.prices.join_disambiguation < 0 || c.prices.why_profile_request < 0) {
    problems.push_back("market prices must be non-negative");
  }
  if (c.claim_ttl_seconds <= 0) problems.push_back("market.claim_ttl_seconds must be positive");
  if (c.retention_seconds && *c.retention_seconds <= 0) {
    problems.push_back("governance.retention_seconds must be positive");
  }
  if (c.listen_port < 0 || c.listen_port > 65535) problems.push_back("listen.port out of range");
  if (c.store_root.empty()) problems.push_back("store_root is required");
  if (c.key_file.empty()) problems.push_back("key_file is required");
  std::set<std::string> secrets;
  for (const auto& [name, u] : c.users) {
    if (u.secret.empty()) problems.push_back("user " + name + " has no secret");
    else if (!secrets.insert(u.secret).second) problems.push_back("user " + name + " reuses a secret");
    if (u.roles.empty()) problems.push_back("user " + name + " has no roles");
    if (u.has(Role::kContributor) && u.key.size() != 64) {
      problems.push_back("contributor " + name + " needs a 64-hex-char key");
    }
    if (u.credit < 0) problems.push_back("user " + name + " has negative credit");
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidConfig, "invalid configuration", problems);
}

StationConfig load_config(const fs::path& path) {
  auto cfg = parse_config(read_file(path), path.parent_path());
  std::vector<std::string> missing;
  if (!fs::is_directory(cfg.store_root)) missing.push_back("store_root " + cfg.store_root.string());
  if (!fs::is_regular_file(cfg.key_file)) missing.push_back("key_file " + cfg.key_file.string());
  if (cfg.pii_dictionary && !fs::is_regular_file(*cfg.pii_dictionary)) {
    missing.push_back("pii_dictionary " + cfg.pii_dictionary->string());
  }
  if (!missing.empty()) throw Error(ErrorCode::kInvalidConfig, "missing paths", missing);
  return cfg;
}

std::array<std::uint8_t, 32> read_key_file(const fs::path& path) {
  auto bytes = crypto::from_hex(trim(read_file(path)));
  if (!bytes || bytes->size() != 32) {
    throw Error(ErrorCode::kInvalidConfig, "key file must hold 64 hex characters");
  }
  std::array<std::uint8_t, 32> out{};
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return out;
}

void write_key_file(const fs::path& path) {
  std::array<std::uint8_t, 32> secret{};
  crypto::random_bytes(secret);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << crypto::to_hex(secret) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

std::set<std::string> read_pii_dictionary(const fs::path& path) {
  std::set<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.insert(normalize_name(t));
  }
  return out;
}

}  // namespace station
