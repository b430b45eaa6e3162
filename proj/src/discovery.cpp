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

#include "station/discovery.hpp"

#include <algorithm>
#include <mutex>

namespace station {

namespace {

std::pair<DatasetId, DatasetId> ordered(const DatasetId& x, const DatasetId& y) {
  return x < y ? std::pair{x, y} : std::pair{y, x};
}

double fraction_in(const std::vector<std::string>& tokens,
                   std::initializer_list<const std::set<std::string>*> sets) {
  if (tokens.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& t : tokens) {
    for (const auto* s : sets) {
      if (s->count(t)) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / tokens.size();
}

// Capsule-side values for each target column, in target order.
std::vector<std::vector<std::string>> capsule_values(const TaskCapsule& capsule) {
  std::vector<std::vector<std::string>> out;
  if (capsule.task_type == TaskType::kQbe) {
    const auto& q = capsule.qbe();
    out.resize(q.attributes.size());
    for (const auto& row : q.example_rows) {
      for (std::size_t i = 0; i < row.size() && i < out.size(); ++i) out[i].push_back(row[i]);
    }
  } else if (capsule.task_type == TaskType::kClassify) {
    auto t = capsule.classify().test_table();
    for (std::size_t i = 0; i < t.header.size(); ++i) out.push_back(t.column(i));
  }
  return out;
}

}  // namespace

DiscoveryIndex::DiscoveryIndex(DiscoveryConfig config) : config_(config) {}

void DiscoveryIndex::index(const Catalog& catalog, const DatasetId& id, bool readable) {
  auto p = catalog.get(id);
  if (!p) throw Error(ErrorCode::kNotProfiled, "asset " + id.hex() + " has no profile");
  index(*p, readable);
}

void DiscoveryIndex::index(const ProfileSet& profile, bool readable) {
  IndexedAsset a;
  a.readable = readable;
  for (auto& t : tokenize(profile.name)) a.name_tokens.insert(std::move(t));
  for (auto& t : tokenize(profile.why.text)) a.name_tokens.insert(std::move(t));
  for (const auto& c : profile.what.columns) {
    a.column_tokens.insert(c.name_tokens.begin(), c.name_tokens.end());
    for (const auto& [value, _] : c.top_values) {
      for (auto& t : tokenize(value)) a.value_tokens.insert(std::move(t));
    }
    a.columns.push_back(IndexedColumn{c.name, normalize_name(c.name), c.dtype, c.distinct,
                                      readable ? c.sketch : MinHashSketch{}});
  }

  std::unique_lock lock(mu_);
  const auto& id = profile.asset;
  if (assets_.count(id)) {
    for (auto& [_, ids] : inverted_) ids.erase(id);
    std::erase_if(links_, [&](const auto& kv) { return kv.first.first == id || kv.first.second == id; });
  }
  for (const auto* s : {&a.name_tokens, &a.column_tokens, &a.value_tokens}) {
    for (const auto& t : *s) inverted_[t].insert(id);
  }
  for (const auto& [other_id, other] : assets_) {
    if (other_id == id) continue;
    auto key = ordered(id, other_id);
    const auto& left = key.first == id ? a : other;
    const auto& right = key.first == id ? other : a;
    std::vector<LinkEdge> edges;
    for (const auto& lc : left.columns) {
      for (const auto& rc : right.columns) {
        if (lc.dtype != rc.dtype || lc.sketch.empty() || rc.sketch.empty()) continue;
        double j = lc.sketch.jaccard(rc.sketch);
        if (j >= config_.join_threshold) {
          edges.push_back(LinkEdge{{key.first, lc.name}, {key.second, rc.name}, j});
        }
      }
    }
    if (!edges.empty()) links_[key] = std::move(edges);
  }
  assets_[id] = std::move(a);
}

void DiscoveryIndex::remove(const std::set<DatasetId>& ids) {
  std::unique_lock lock(mu_);
  for (const auto& id : ids) {
    if (!assets_.erase(id)) continue;
    for (auto& [_, s] : inverted_) s.erase(id);
  }
  std::erase_if(links_, [&](const auto& kv) {
    return ids.count(kv.first.first) || ids.count(kv.first.second);
  });
  std::erase_if(annotations_, [&](const auto& kv) {
    return ids.count(kv.first.first) || ids.count(kv.first.second);
  });
}

bool DiscoveryIndex::contains(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  return assets_.count(id) != 0;
}

std::vector<LinkEdge> DiscoveryIndex::edges() const {
  std::shared_lock lock(mu_);
  std::vector<LinkEdge> out;
  for (const auto& [_, es] : links_) out.insert(out.end(), es.begin(), es.end());
  return out;
}

std::vector<LinkEdge> DiscoveryIndex::edges_between(const DatasetId& x, const DatasetId& y) const {
  std::shared_lock lock(mu_);
  auto it = links_.find(ordered(x, y));
  return it == links_.end() ? std::vector<LinkEdge>{} : it->second;
}

std::set<DatasetId> DiscoveryIndex::lookup(const std::string& token) const {
  std::shared_lock lock(mu_);
  auto it = inverted_.find(to_lower(token));
  return it == inverted_.end() ? std::set<DatasetId>{} : it->second;
}

void DiscoveryIndex::annotate(const ColumnRef& x, const ColumnRef& y) {
  std::unique_lock lock(mu_);
  auto key = ordered(x.asset, y.asset);
  annotations_[key] = x.asset == key.first ? std::pair{x, y} : std::pair{y, x};
}

std::optional<std::pair<ColumnRef, ColumnRef>> DiscoveryIndex::annotation(
    const DatasetId& x, const DatasetId& y) const {
  std::shared_lock lock(mu_);
  auto it = annotations_.find(ordered(x, y));
  if (it == annotations_.end()) return std::nullopt;
  return it->second;
}

double DiscoveryIndex::value_overlap(const std::vector<DatasetId>& assets,
                                     const TaskCapsule& capsule) const {
  auto targets = capsule.target_columns();
  auto values = capsule_values(capsule);
  if (targets.empty()) return 0;
  double total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto want = normalize_name(targets[i]);
    const IndexedColumn* source = nullptr;
    for (const auto& id : assets) {
      for (const auto& c : assets_.at(id).columns) {
        if (c.normalized == want) {
          source = &c;
          break;
        }
      }
      if (source) break;
    }
    if (!source || values[i].empty()) continue;
    if (capsule.task_type == TaskType::kClassify && source->dtype == DType::kNumber) {
      std::size_t ok = 0;
      for (const auto& v : values[i]) ok += parse_number(trim(v)).has_value();
      total += static_cast<double>(ok) / values[i].size();
      continue;
    }
    std::set<std::string> distinct;
    for (const auto& v : values[i]) {
      auto n = normalize_value(v, source->dtype);
      if (!n.empty()) distinct.insert(n);
    }
    if (distinct.empty()) continue;
    auto sketch = MinHashSketch::of({distinct.begin(), distinct.end()});
    double j = sketch.jaccard(source->sketch);
    double a = static_cast<double>(distinct.size());
    double b = static_cast<double>(source->distinct);
    // |A ∩ B| / |A| recovered from the Jaccard estimate and both set sizes.
    double containment = j * (a + b) / ((1 + j) * a);
    total += std::clamp(containment, 0.0, 1.0);
  }
  return total / targets.size();
}

Candidate DiscoveryIndex::score(const std::vector<DatasetId>& assets, const TaskCapsule& capsule,
                                const std::vector<std::string>& query_tokens) const {
  Candidate c;
  c.assets = assets;
  std::set<std::string> names, columns, values;
  for (const auto& id : assets) {
    const auto& a = assets_.at(id);
    names.insert(a.name_tokens.begin(), a.name_tokens.end());
    columns.insert(a.column_tokens.begin(), a.column_tokens.end());
    values.insert(a.value_tokens.begin(), a.value_tokens.end());
  }
  if (capsule.task_type == TaskType::kSearch) {
    c.breakdown.keyword = fraction_in(query_tokens, {&names, &columns, &values});
    c.breakdown.column_coverage = fraction_in(query_tokens, {&columns});
    c.breakdown.value_overlap = fraction_in(query_tokens, {&values});
  } else {
    c.breakdown.keyword = fraction_in(query_tokens, {&names, &columns});
    c.breakdown.column_coverage = 1.0;
    c.breakdown.value_overlap = value_overlap(assets, capsule);
  }
  c.score = config_.w_keyword * c.breakdown.keyword +
            config_.w_coverage * c.breakdown.column_coverage +
            config_.w_overlap * c.breakdown.value_overlap;
  if (assets.size() == 2) {
    auto it = links_.find(ordered(assets[0], assets[1]));
    if (it != links_.end()) c.join_options = it->second;
  }
  return c;
}

std::vector<Candidate> DiscoveryIndex::discover(
    const TaskCapsule& capsule, const std::function<bool(const DatasetId&)>& admissible) const {
  std::shared_lock lock(mu_);
  std::vector<DatasetId> pool;
  for (const auto& [id, _] : assets_) {
    if (admissible(id)) pool.push_back(id);
  }
  std::vector<Candidate> out;

  if (capsule.task_type == TaskType::kSearch) {
    std::vector<std::string> tokens;
    for (const auto& k : capsule.search().keywords) {
      for (auto& t : tokenize(k)) tokens.push_back(std::move(t));
    }
    for (const auto& id : pool) {
      auto c = score({id}, capsule, tokens);
      if (c.breakdown.keyword > 0) out.push_back(std::move(c));
    }
  } else {
    std::set<std::string> targets;
    std::vector<std::string> tokens;
    for (const auto& t : capsule.target_columns()) {
      targets.insert(normalize_name(t));
      for (auto& tok : tokenize(t)) tokens.push_back(std::move(tok));
    }
    auto covered = [&](const DatasetId& id) {
      std::set<std::string> have;
      for (const auto& c : assets_.at(id).columns) {
        if (targets.count(c.normalized)) have.insert(c.normalized);
      }
      return have;
    };
    std::vector<DatasetId> readable;
    std::map<DatasetId, std::set<std::string>> cover;
    for (const auto& id : pool) {
      if (!assets_.at(id).readable) continue;
      readable.push_back(id);
      cover[id] = covered(id);
    }
    for (const auto& id : readable) {
      if (cover[id].size() == targets.size()) out.push_back(score({id}, capsule, tokens));
    }
    for (std::size_t i = 0; i < readable.size(); ++i) {
      const auto& x = readable[i];
      if (cover[x].size() == targets.size()) continue;
      for (std::size_t j = i + 1; j < readable.size(); ++j) {
        const auto& y = readable[j];
        if (cover[y].size() == targets.size()) continue;
        std::set<std::string> both = cover[x];
        both.insert(cover[y].begin(), cover[y].end());
        if (both.size() != targets.size() || !links_.count(ordered(x, y))) continue;
        out.push_back(score({x, y}, capsule, tokens));
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score > b.score : a.assets < b.assets;
  });
  if (out.size() > config_.max_candidates) out.resize(config_.max_candidates);
  return out;
}

}  // namespace station
