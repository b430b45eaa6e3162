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

#include "station/minhash.hpp"

#include <set>
#include <stdexcept>

namespace station {
namespace {

constexpr std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

}  // namespace

std::uint64_t base_hash(std::string_view value) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : value) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmix64(h);
}

MinHashSketch MinHashSketch::of(const std::vector<std::string>& values) {
  MinHashSketch s;
  std::set<std::string_view> distinct(values.begin(), values.end());
  for (auto v : distinct) s.add(v);
  return s;
}

MinHashSketch MinHashSketch::from_minima(const std::vector<std::uint64_t>& minima) {
  if (minima.size() != kSketchSize) throw std::invalid_argument("sketch must have 128 minima");
  MinHashSketch s;
  std::copy(minima.begin(), minima.end(), s.minima_.begin());
  return s;
}

void MinHashSketch::add(std::string_view value) {
  const std::uint64_t h = base_hash(value);
  for (std::size_t i = 0; i < kSketchSize; ++i) {
    std::uint64_t v = fmix64(h ^ kMinHashSalts[i]);
    if (v == kEmpty) --v;
    if (v < minima_[i]) minima_[i] = v;
  }
}

double MinHashSketch::jaccard(const MinHashSketch& other) const {
  if (empty() || other.empty()) return 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kSketchSize; ++i) agree += minima_[i] == other.minima_[i];
  return static_cast<double>(agree) / kSketchSize;
}

double MinHashSketch::estimate_cardinality() const {
  if (empty()) return 0.0;
  // Each normalized minimum is ~Beta(1, n); E[u] = 1 / (n + 1).
  double sum = 0;
  for (auto m : minima_) sum += static_cast<double>(m) / 18446744073709551616.0;
  return kSketchSize / sum - 1.0;
}

bool MinHashSketch::empty() const { return minima_[0] == kEmpty; }

}  // namespace station
