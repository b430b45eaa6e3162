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
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace station {

inline constexpr std::size_t kSketchSize = 128;

namespace minhash_detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::array<std::uint64_t, kSketchSize> make_salts() {
  std::array<std::uint64_t, kSketchSize> salts{};
  std::uint64_t state = 0x5eed5a17da7a5747ULL;
  for (auto& s : salts) s = splitmix64(state);
  return salts;
}

}  // namespace minhash_detail

/// The 128 fixed salts. They are part of the sketch format: changing them
/// invalidates every stored sketch.
inline constexpr std::array<std::uint64_t, kSketchSize> kMinHashSalts =
    minhash_detail::make_salts();

/// k-minimum-values sketch with k independent hash functions realised as one
/// base hash (FNV-1a) remixed with each salt.
class MinHashSketch {
 public:
  static constexpr std::uint64_t kEmpty = std::numeric_limits<std::uint64_t>::max();

  MinHashSketch() { minima_.fill(kEmpty); }

  /// Sketch of the distinct values in `values` (callers normalize first).
  static MinHashSketch of(const std::vector<std::string>& values);
  static MinHashSketch from_minima(const std::vector<std::uint64_t>& minima);

  void add(std::string_view value);

  /// Fraction of agreeing slots; 0 when either sketch is empty.
  double jaccard(const MinHashSketch& other) const;
  /// Distinct-count estimate from the mean normalized minimum.
  double estimate_cardinality() const;
  bool empty() const;

  const std::array<std::uint64_t, kSketchSize>& minima() const { return minima_; }
  bool operator==(const MinHashSketch&) const = default;

 private:
  std::array<std::uint64_t, kSketchSize> minima_;
};

std::uint64_t base_hash(std::string_view value);

}  // namespace station
