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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Thin wrappers over libsodium. All keys and signatures cross module
// boundaries as lowercase hex strings.
namespace station::crypto {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<Bytes> from_hex(std::string_view hex);

Digest sha256(std::span<const std::uint8_t> data);
inline Digest sha256(std::string_view data) { return sha256(as_bytes(data)); }
std::string sha256_hex(std::string_view data);

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data);

/// URL-safe base64 without padding. Decoding rejects non-canonical input.
std::string base64url_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64url_decode(std::string_view text);

void random_bytes(std::span<std::uint8_t> out);

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Ed25519 key pair. The public key hex doubles as the owner fingerprint.
struct KeyPair {
  std::string public_key;  // 64 hex chars
  std::string secret_key;  // 128 hex chars (libsodium seed || public key)
};

KeyPair generate_keypair();
KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed);
/// Deterministic test keys derived from a label.
KeyPair keypair_from_label(std::string_view label);

/// Signs SHA-256(content) and returns the detached signature as hex.
std::string sign_content(std::string_view secret_key_hex, std::string_view content);
bool verify_content(std::string_view public_key_hex, std::string_view signature_hex,
                    std::string_view content);

}  // namespace station::crypto
