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

#include "station/catalog.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace station {

using nlohmann::json;

namespace {

ColumnProfile profile_column(const std::string& name, DType dtype,
                             const std::vector<std::string>* values,
                             const std::set<std::string>& pii) {
  ColumnProfile c;
  c.name = name;
  c.dtype = dtype;
  auto tokens = tokenize(name);
  c.name_tokens.assign(tokens.begin(), tokens.end());
  c.pii = pii.count(normalize_name(name)) != 0;
  if (!values) return c;

  c.row_count = static_cast<std::int64_t>(values->size());
  std::unordered_map<std::string, std::int64_t> counts;
  std::optional<double> lo, hi;
  std::optional<std::string> dlo, dhi;
  for (const auto& raw : *values) {
    auto v = normalize_value(raw, dtype);
    if (v.empty()) continue;
    ++counts[v];
    if (dtype == DType::kNumber) {
      if (auto x = parse_number(v)) {
        lo = lo ? std::min(*lo, *x) : *x;
        hi = hi ? std::max(*hi, *x) : *x;
      }
    } else if (dtype == DType::kDate) {
      if (!dlo || v < *dlo) dlo = v;
      if (!dhi || v > *dhi) dhi = v;
    }
  }
  std::vector<std::string> distinct;
  distinct.reserve(counts.size());
  for (const auto& [v, _] : counts) distinct.push_back(v);
  std::sort(distinct.begin(), distinct.end());
  c.sketch = MinHashSketch::of(distinct);
  c.distinct = distinct.size() <= kExactDistinctLimit
                   ? static_cast<std::int64_t>(distinct.size())
                   : std::max<std::int64_t>(1, std::llround(c.sketch.estimate_cardinality()));
  if (c.pii) return c;

  if (lo) {
    c.min = format_number(*lo);
    c.max = format_number(*hi);
  } else if (dlo) {
    c.min = dlo;
    c.max = dhi;
  }
  std::vector<std::pair<std::string, std::int64_t>> freq(counts.begin(), counts.end());
  std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (freq.size() > 5) freq.resize(5);
  c.top_values = std::move(freq);
  return c;
}

json column_json(const ColumnProfile& c, bool full) {
  json j{{"name", c.name},
         {"dtype", dtype_name(c.dtype)},
         {"row_count", c.row_count},
         {"distinct", c.distinct},
         {"name_tokens", c.name_tokens},
         {"pii", c.pii}};
  if (!full) return j;
  if (c.min) j["min"] = *c.min;
  if (c.max) j["max"] = *c.max;
  json top = json::array();
  for (const auto& [v, n] : c.top_values) top.push_back(json::array({v, n}));
  j["top_values"] = std::move(top);
  j["sketch"] = c.sketch.minima();
  return j;
}

ColumnProfile column_from_json(const json& j) {
  ColumnProfile c;
  c.name = j.at("name").get<std::string>();
  auto dt = parse_dtype(j.at("dtype").get<std::string>());
  if (!dt) throw Error(ErrorCode::kMalformedDocument, "unknown dtype in catalog record");
  c.dtype = *dt;
  c.row_count = j.at("row_count").get<std::int64_t>();
  c.distinct = j.at("distinct").get<std::int64_t>();
  c.name_tokens = j.at("name_tokens").get<std::vector<std::string>>();
  c.pii = j.at("pii").get<bool>();
  if (j.contains("min")) c.min = j["min"].get<std::string>();
  if (j.contains("max")) c.max = j["max"].get<std::string>();
  for (const auto& p : j.value("top_values", json::array())) {
    c.top_values.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::int64_t>());
  }
  if (j.contains("sketch")) {
    c.sketch = MinHashSketch::from_minima(j["sketch"].get<std::vector<std::uint64_t>>());
  }
  return c;
}

json profile_json(const ProfileSet& p, bool full) {
  json columns = json::array();
  for (const auto& c : p.what.columns) columns.push_back(column_json(c, full));
  json when{{"created_at", p.when.created_at}, {"modified_at", p.when.modified_at}};
  if (p.when.valid_from) when["valid_from"] = *p.when.valid_from;
  if (p.when.valid_until) when["valid_until"] = *p.when.valid_until;
  json ext(p.ext);
  ext["asset_id"] = p.asset.hex();
  ext["name"] = p.name;
  ext["kind"] = asset_kind_name(p.kind);
  return json{
      {"what", {{"row_count", p.what.row_count}, {"columns", std::move(columns)}}},
      {"who", {{"producer", p.who.producer}, {"accessed_by", p.who.accessed_by}}},
      {"how", {{"producing_op", p.how.producing_op}, {"plan_summary", p.how.plan_summary}}},
      {"where", {{"content_ref", p.where.content_ref}, {"access", access_mode_name(p.where.access)}}},
      {"when", std::move(when)},
      {"why",
       {{"text", p.why.text},
        {"author", p.why.author},
        {"provenance", p.why.provenance == WhyProvenance::kHuman ? "human" : "none"}}},
      {"ext", std::move(ext)},
  };
}

}  // namespace

ProfileSet compute_profile(const AssetRecord& record, const std::optional<Table>& table,
                           AccessMode access, const std::set<std::string>& pii_dictionary) {
  ProfileSet p;
  p.asset = record.id;
  p.name = record.name;
  p.kind = record.kind;
  if (table) {
    p.what.row_count = static_cast<std::int64_t>(table->rows.size());
    for (std::size_t i = 0; i < table->header.size(); ++i) {
      auto values = table->column(i);
      DType dtype = i < record.schema.size() ? record.schema[i].dtype : infer_dtype(values);
      p.what.columns.push_back(profile_column(table->header[i], dtype, &values, pii_dictionary));
    }
  } else {
    for (const auto& spec : record.schema) {
      p.what.columns.push_back(profile_column(spec.name, spec.dtype, nullptr, pii_dictionary));
    }
  }
  p.who.producer = record.derived() ? "station" : record.owner_key;
  if (record.derived()) {
    p.how.producing_op = record.producing_op.empty() ? "derive" : record.producing_op;
    p.how.plan_summary = record.plan_summary;
  }
  p.where.content_ref = record.content_ref;
  p.where.access = access;
  p.when.created_at = record.created_at;
  p.when.modified_at = std::max(record.modified_at, record.created_at);
  return p;
}

std::set<std::string> profile_tokens(const ProfileSet& profile) {
  std::set<std::string> out;
  for (auto& t : tokenize(profile.name)) out.insert(std::move(t));
  for (const auto& c : profile.what.columns) out.insert(c.name_tokens.begin(), c.name_tokens.end());
  for (auto& t : tokenize(profile.why.text)) out.insert(std::move(t));
  return out;
}

std::string export_record(const ProfileSet& profile) { return profile_json(profile, true).dump(); }

std::string public_record(const ProfileSet& profile) {
  return profile_json(profile, false).dump();
}

ProfileSet import_record(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, "catalog record is not a JSON object");
  }
  try {
    ProfileSet p;
    auto ext = j.at("ext").get<std::map<std::string, std::string>>();
    auto id = DatasetId::parse(ext.at("asset_id"));
    auto kind = parse_asset_kind(ext.at("kind"));
    if (!id || !kind) throw Error(ErrorCode::kMalformedDocument, "bad asset id or kind");
    p.asset = *id;
    p.kind = *kind;
    p.name = ext.at("name");
    for (auto key : {"asset_id", "kind", "name"}) ext.erase(key);
    p.ext = std::move(ext);

    const auto& what = j.at("what");
    p.what.row_count = what.at("row_count").get<std::int64_t>();
    for (const auto& c : what.at("columns")) p.what.columns.push_back(column_from_json(c));
    p.who.producer = j.at("who").at("producer").get<std::string>();
    p.who.accessed_by = j.at("who").at("accessed_by").get<std::set<std::string>>();
    p.how.producing_op = j.at("how").at("producing_op").get<std::string>();
    p.how.plan_summary = j.at("how").at("plan_summary").get<std::string>();
    p.where.content_ref = j.at("where").at("content_ref").get<std::string>();
    auto mode = parse_access_mode(j.at("where").at("access").get<std::string>());
    if (!mode) throw Error(ErrorCode::kMalformedDocument, "bad access mode");
    p.where.access = *mode;
    const auto& when = j.at("when");
    p.when.created_at = when.at("created_at").get<Timestamp>();
    p.when.modified_at = when.at("modified_at").get<Timestamp>();
    if (when.contains("valid_from")) p.when.valid_from = when["valid_from"].get<Timestamp>();
    if (when.contains("valid_until")) p.when.valid_until = when["valid_until"].get<Timestamp>();
    const auto& why = j.at("why");
    p.why.text = why.at("text").get<std::string>();
    p.why.author = why.at("author").get<std::string>();
    p.why.provenance =
        why.at("provenance").get<std::string>() == "human" ? WhyProvenance::kHuman
                                                           : WhyProvenance::kNone;
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  } catch (const std::out_of_range& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  }
}

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(std::set<std::string> pii_dictionary) {
  for (const auto& name : pii_dictionary) pii_.insert(normalize_name(name));
}

const ProfileSet& Catalog::profile(const Store& store, const DatasetId& id, AccessMode access,
                                   std::optional<WhyProfile> seed_why) {
  auto record = store.get(id);
  std::optional<Table> table;
  if (!record.encrypted && record.kind != AssetKind::kModel && record.kind != AssetKind::kReport) {
    table = store.read_table(id);
  }
  auto fresh = compute_profile(record, table, access, pii_);
  std::unique_lock lock(mu_);
  auto it = profiles_.find(id);
  if (it != profiles_.end()) {
    fresh.why = it->second.why;
    fresh.who.accessed_by = it->second.who.accessed_by;
    fresh.ext = it->second.ext;
    fresh.when.modified_at = std::max(fresh.when.modified_at, it->second.when.modified_at);
  } else if (seed_why && !seed_why->text.empty()) {
    fresh.why = *seed_why;
    fresh.why.provenance = WhyProvenance::kHuman;
  }
  auto& slot = profiles_[id];
  slot = std::move(fresh);
  return slot;
}

void Catalog::put(ProfileSet profile) {
  std::unique_lock lock(mu_);
  auto id = profile.asset;
  profiles_[id] = std::move(profile);
}

void Catalog::remove(const std::set<DatasetId>& ids) {
  std::unique_lock lock(mu_);
  for (const auto& id : ids) profiles_.erase(id);
}

std::optional<ProfileSet> Catalog::get(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  auto it = profiles_.find(id);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

bool Catalog::contains(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  return profiles_.count(id) != 0;
}

std::vector<ProfileSet> Catalog::all() const {
  std::shared_lock lock(mu_);
  std::vector<ProfileSet> out;
  out.reserve(profiles_.size());
  for (const auto& [_, p] : profiles_) out.push_back(p);
  return out;
}

std::size_t Catalog::size() const {
  std::shared_lock lock(mu_);
  return profiles_.size();
}

ProfileSet Catalog::upsert_why(const DatasetId& id, std::string_view text,
                               std::string_view author, Timestamp now) {
  auto cleaned = trim(text);
  if (cleaned.empty()) throw Error(ErrorCode::kEmptyText, "why text is empty");
  std::unique_lock lock(mu_);
  auto it = profiles_.find(id);
  if (it == profiles_.end()) throw Error(ErrorCode::kNotFound, "no profile for " + id.hex());
  auto& p = it->second;
  p.why = WhyProfile{std::move(cleaned), std::string(author), WhyProvenance::kHuman};
  p.when.modified_at = std::max(now, p.when.modified_at + 1);
  return p;
}

void Catalog::record_access(const DatasetId& id, const std::string& user) {
  std::unique_lock lock(mu_);
  if (auto it = profiles_.find(id); it != profiles_.end()) it->second.who.accessed_by.insert(user);
}

void Catalog::set_access(const DatasetId& id, AccessMode access) {
  std::unique_lock lock(mu_);
  if (auto it = profiles_.find(id); it != profiles_.end()) it->second.where.access = access;
}

bool Catalog::satisfies(const TrustConstraints& trust, const DatasetId& id,
                        const ProvenanceGraph& graph) const {
  std::shared_lock lock(mu_);
  if (!profiles_.count(id)) throw Error(ErrorCode::kNotFound, "no profile for " + id.hex());
  return satisfies_locked(trust, id, graph);
}

bool Catalog::satisfies_locked(const TrustConstraints& trust, const DatasetId& id,
                               const ProvenanceGraph& graph) const {
  if (trust.empty()) return true;
  if (trust.max_provenance_depth && graph.contains(id) &&
      graph.depth(id) > *trust.max_provenance_depth) {
    return false;
  }
  auto closure = graph.contains(id) ? graph.ancestors(id) : std::set<DatasetId>{};
  closure.insert(id);
  for (const auto& node : closure) {
    auto it = profiles_.find(node);
    if (it == profiles_.end()) return false;
    const auto& p = it->second;
    if (trust.created_after && p.when.created_at <= *trust.created_after) return false;
    if (p.kind != AssetKind::kDataset) continue;
    if (trust.creators_allow && !trust.creators_allow->count(p.who.producer)) return false;
    if (trust.require_why_profile && p.why.provenance != WhyProvenance::kHuman) return false;
  }
  return true;
}

std::vector<DatasetId> Catalog::query(const CatalogQuery& query,
                                      const std::function<bool(const DatasetId&)>& visible,
                                      const ProvenanceGraph& graph) const {
  std::vector<std::string> wanted;
  if (query.keyword) wanted = tokenize(*query.keyword);
  std::shared_lock lock(mu_);
  std::vector<DatasetId> out;
  for (const auto& [id, p] : profiles_) {
    if (!visible(id)) continue;
    if (!wanted.empty()) {
      auto have = profile_tokens(p);
      bool all = std::all_of(wanted.begin(), wanted.end(),
                             [&](const std::string& t) { return have.count(t) != 0; });
      if (!all) continue;
    }
    if (!satisfies_locked(query.trust, id, graph)) continue;
    out.push_back(id);
  }
  return out;
}

std::string Catalog::export_all() const {
  std::shared_lock lock(mu_);
  std::string out;
  for (const auto& [_, p] : profiles_) {
    out += export_record(p);
    out += '\n';
  }
  return out;
}

void Catalog::import_all(std::string_view text) {
  std::vector<ProfileSet> parsed;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    parsed.push_back(import_record(line));
  }
  std::unique_lock lock(mu_);
  for (auto& p : parsed) {
    auto id = p.asset;
    profiles_[id] = std::move(p);
  }
}

}  // namespace station
