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

#include "station/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace station::crypto {
namespace {

void ensure_init() {
  static const bool ok = [] { return sodium_init() >= 0; }();
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_init();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
  ensure_init();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  Digest out{};
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

std::string base64url_encode(std::span<const std::uint8_t> data) {
  ensure_init();
  constexpr int kVariant = sodium_base64_VARIANT_URLSAFE_NO_PADDING;
  std::string out(sodium_base64_encoded_len(data.size(), kVariant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), kVariant);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

std::optional<Bytes> base64url_decode(std::string_view text) {
  ensure_init();
  Bytes out(text.size() * 3 / 4 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  int rc = sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len,
                             &end, sodium_base64_VARIANT_URLSAFE_NO_PADDING);
  if (rc != 0 || end != text.data() + text.size()) return std::nullopt;
  out.resize(len);
  return out;
}

void random_bytes(std::span<std::uint8_t> out) {
  ensure_init();
  randombytes_buf(out.data(), out.size());
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  ensure_init();
  return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed) {
  ensure_init();
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
  crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
  return {to_hex(pk), to_hex(sk)};
}

KeyPair generate_keypair() {
  std::array<std::uint8_t, 32> seed{};
  random_bytes(seed);
  return keypair_from_seed(seed);
}

KeyPair keypair_from_label(std::string_view label) {
  auto seed = sha256(label);
  return keypair_from_seed(seed);
}

std::string sign_content(std::string_view secret_key_hex, std::string_view content) {
  ensure_init();
  auto sk = from_hex(secret_key_hex);
  if (!sk || sk->size() != crypto_sign_SECRETKEYBYTES) {
    throw std::invalid_argument("secret key must be 64 bytes of hex");
  }
  auto digest = sha256(content);
  std::array<std::uint8_t, crypto_sign_BYTES> sig{};
  crypto_sign_detached(sig.data(), nullptr, digest.data(), digest.size(), sk->data());
  return to_hex(sig);
}

bool verify_content(std::string_view public_key_hex, std::string_view signature_hex,
                    std::string_view content) {
  ensure_init();
  auto pk = from_hex(public_key_hex);
  auto sig = from_hex(signature_hex);
  if (!pk || pk->size() != crypto_sign_PUBLICKEYBYTES) return false;
  if (!sig || sig->size() != crypto_sign_BYTES) return false;
  auto digest = sha256(content);
  return crypto_sign_verify_detached(sig->data(), digest.data(), digest.size(), pk->data()) == 0;
}

}  // namespace station::crypto
