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

#include "station/store.hpp"

#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "station/crypto.hpp"

namespace station {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view asset_kind_name(AssetKind kind) {
  switch (kind) {
    case AssetKind::kDataset: return "dataset";
    case AssetKind::kTable: return "table";
    case AssetKind::kModel: return "model";
    case AssetKind::kReport: return "report";
  }
  return "dataset";
}

std::optional<AssetKind> parse_asset_kind(std::string_view name) {
  if (name == "dataset") return AssetKind::kDataset;
  if (name == "table") return AssetKind::kTable;
  if (name == "model") return AssetKind::kModel;
  if (name == "report") return AssetKind::kReport;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ProvenanceGraph

namespace {
const std::set<DatasetId> kNoIds;
}

void ProvenanceGraph::add_node(const DatasetId& id, const std::vector<DatasetId>& parents) {
  auto& ps = parents_[id];
  children_.try_emplace(id);
  for (const auto& p : parents) {
    ps.insert(p);
    children_[p].insert(id);
  }
}

void ProvenanceGraph::remove_node(const DatasetId& id) {
  if (auto it = parents_.find(id); it != parents_.end()) {
    for (const auto& p : it->second) {
      if (auto c = children_.find(p); c != children_.end()) c->second.erase(id);
    }
    parents_.erase(it);
  }
  if (auto it = children_.find(id); it != children_.end()) {
    for (const auto& c : it->second) {
      if (auto p = parents_.find(c); p != parents_.end()) p->second.erase(id);
    }
    children_.erase(it);
  }
}

const std::set<DatasetId>& ProvenanceGraph::parents(const DatasetId& id) const {
  auto it = parents_.find(id);
  return it == parents_.end() ? kNoIds : it->second;
}

const std::set<DatasetId>& ProvenanceGraph::children(const DatasetId& id) const {
  auto it = children_.find(id);
  return it == children_.end() ? kNoIds : it->second;
}

namespace {

template <typename Next>
std::set<DatasetId> reach(const DatasetId& start, Next next) {
  std::set<DatasetId> seen;
  std::deque<DatasetId> queue{start};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (const auto& n : next(cur)) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  seen.erase(start);
  return seen;
}

}  // namespace

std::set<DatasetId> ProvenanceGraph::ancestors(const DatasetId& id) const {
  return reach(id, [this](const DatasetId& n) -> const std::set<DatasetId>& { return parents(n); });
}

std::set<DatasetId> ProvenanceGraph::descendants(const DatasetId& id) const {
  return reach(id, [this](const DatasetId& n) -> const std::set<DatasetId>& { return children(n); });
}

int ProvenanceGraph::depth(const DatasetId& id) const {
  std::map<DatasetId, int> memo;
  auto visit = [&](auto&& self, const DatasetId& n) -> int {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    int best = 0;
    for (const auto& p : parents(n)) best = std::max(best, self(self, p) + 1);
    memo[n] = best;
    return best;
  };
  return visit(visit, id);
}

bool ProvenanceGraph::is_acyclic() const {
  std::map<DatasetId, std::size_t> pending;
  std::deque<DatasetId> ready;
  for (const auto& [id, ps] : parents_) {
    pending[id] = ps.size();
    if (ps.empty()) ready.push_back(id);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = ready.front();
    ready.pop_front();
    ++visited;
    for (const auto& c : children(n)) {
      if (--pending[c] == 0) ready.push_back(c);
    }
  }
  return visited == parents_.size();
}

std::vector<DatasetId> ProvenanceGraph::nodes() const {
  std::vector<DatasetId> out;
  for (const auto& [id, _] : parents_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Store

namespace {

json schema_to_json(const std::vector<ColumnSpec>& schema) {
  json cols = json::array();
  for (const auto& c : schema) cols.push_back({{"name", c.name}, {"dtype", dtype_name(c.dtype)}});
  return cols;
}

json record_to_json(const AssetRecord& r) {
  json parents = json::array();
  for (const auto& p : r.parents) parents.push_back(p.hex());
  return {{"id", r.id.hex()},
          {"kind", asset_kind_name(r.kind)},
          {"name", r.name},
          {"owner_key", r.owner_key},
          {"signature", r.signature},
          {"digest", r.digest},
          {"schema", schema_to_json(r.schema)},
          {"version", r.version},
          {"content_ref", r.content_ref},
          {"sealed", r.sealed},
          {"encrypted", r.encrypted},
          {"parents", parents},
          {"producing_op", r.producing_op},
          {"plan_summary", r.plan_summary},
          {"created_at", r.created_at},
          {"modified_at", r.modified_at}};
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::string extension_for(AssetKind kind) {
  switch (kind) {
    case AssetKind::kModel: return ".model";
    case AssetKind::kReport: return ".txt";
    default: return ".csv";
  }
}

std::vector<ColumnSpec> schema_for(const Table& table, const std::optional<ProfileSeed>& seed) {
  auto inferred = infer_schema(table);
  if (!seed || !seed->schema) return inferred;
  const auto& given = *seed->schema;
  if (given.size() != inferred.size()) {
    throw Error(ErrorCode::kInvalidArgument, "metadata schema does not match CSV header");
  }
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (normalize_name(given[i].name) != normalize_name(inferred[i].name)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "metadata column '" + given[i].name + "' does not match header '" +
                      inferred[i].name + "'");
    }
  }
  return given;
}

void check_unique_names(const std::vector<ColumnSpec>& schema) {
  std::set<std::string> seen;
  for (const auto& c : schema) {
    if (!seen.insert(normalize_name(c.name)).second) {
      throw Error(ErrorCode::kMalformedCsv, "duplicate column name: " + c.name);
    }
  }
}

}  // namespace

Store::Store(fs::path root, const Clock& clock, IdSource& ids)
    : root_(std::move(root)), clock_(clock), ids_(ids) {
  fs::create_directories(root_ / "assets");
}

fs::path Store::version_path(const DatasetId& id, int version, AssetKind kind) const {
  return root_ / "assets" / id.hex() / (std::to_string(version) + extension_for(kind));
}

void Store::write_meta(const AssetRecord& rec) const {
  write_file(root_ / "assets" / rec.id.hex() / "meta", record_to_json(rec).dump());
}

void Store::check_fresh(const DatasetId& id) const {
  if (assets_.count(id) || tombstones_.count(id)) {
    throw Error(ErrorCode::kInvalidArgument, "identifier already used: " + id.hex());
  }
}

DatasetId Store::allocate_id() {
  std::shared_lock lock(mu_);
  while (true) {
    auto id = ids_.next_dataset_id();
    if (!assets_.count(id) && !tombstones_.count(id)) return id;
  }
}

DatasetId Store::ingest(const IngestRequest& req) {
  if (!crypto::verify_content(req.owner_key, req.signature, req.content)) {
    throw Error(ErrorCode::kSignatureInvalid, "signature does not verify over content digest");
  }
  std::vector<ColumnSpec> schema;
  if (req.encrypted) {
    if (!req.metadata || !req.metadata->schema || req.metadata->schema->empty()) {
      throw Error(ErrorCode::kEncryptedWithoutMetadata,
                  "encrypted datasets must be accompanied by a schema");
    }
    schema = *req.metadata->schema;
    check_unique_names(schema);
  } else {
    schema = schema_for(parse_csv(req.content), req.metadata);
  }

  auto id = allocate_id();
  std::unique_lock lock(mu_);
  check_fresh(id);
  AssetRecord rec;
  rec.id = id;
  rec.kind = AssetKind::kDataset;
  rec.name = req.name;
  rec.owner_key = req.owner_key;
  rec.signature = req.signature;
  rec.digest = crypto::sha256_hex(req.content);
  rec.schema = std::move(schema);
  rec.version = 1;
  rec.sealed = true;
  rec.encrypted = req.encrypted;
  rec.created_at = rec.modified_at = clock_.now();
  auto path = version_path(id, 1, rec.kind);
  fs::create_directories(path.parent_path());
  write_file(path, req.content);
  rec.content_ref = fs::relative(path, root_).generic_string();
  write_meta(rec);
  graph_.add_node(id, {});
  assets_.emplace(id, std::move(rec));
  return id;
}

int Store::update(const DatasetId& id, std::string_view content, std::string_view owner_key,
                  std::string_view signature) {
  std::unique_lock lock(mu_);
  auto it = assets_.find(id);
  if (it == assets_.end()) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  auto& rec = it->second;
  if (rec.derived() || rec.owner_key != owner_key) {
    throw Error(ErrorCode::kNotOwner, "caller key does not own " + id.hex());
  }
  if (!crypto::verify_content(owner_key, signature, content)) {
    throw Error(ErrorCode::kSignatureInvalid, "signature does not verify over content digest");
  }
  auto schema = rec.encrypted ? rec.schema : infer_schema(parse_csv(content));
  int version = rec.version + 1;
  auto path = version_path(id, version, rec.kind);
  write_file(path, content);
  rec.version = version;
  rec.schema = std::move(schema);
  rec.signature = std::string(signature);
  rec.digest = crypto::sha256_hex(content);
  rec.content_ref = fs::relative(path, root_).generic_string();
  rec.modified_at = std::max(clock_.now(), rec.created_at);
  write_meta(rec);
  return version;
}

DatasetId Store::register_derived(const DerivedRequest& req) {
  if (req.kind == AssetKind::kDataset) {
    throw Error(ErrorCode::kInvalidArgument, "derived products cannot have kind dataset");
  }
  if (req.parents.empty()) {
    throw Error(ErrorCode::kUnknownParent, "derived products need at least one parent");
  }
  auto id = req.id ? *req.id : allocate_id();
  std::unique_lock lock(mu_);
  for (const auto& p : req.parents) {
    if (p == id) throw Error(ErrorCode::kCycleDetected, "asset cannot derive from itself");
  }
  check_fresh(id);
  for (const auto& p : req.parents) {
    if (!assets_.count(p)) throw Error(ErrorCode::kUnknownParent, "unknown parent " + p.hex());
  }
  // A fresh node has no children, so the only possible cycle is a
  // self-edge; verify anyway so the invariant is checked, not assumed.
  ProvenanceGraph trial = graph_;
  trial.add_node(id, req.parents);
  if (!trial.is_acyclic()) throw Error(ErrorCode::kCycleDetected, "provenance cycle");

  AssetRecord rec;
  rec.id = id;
  rec.kind = req.kind;
  rec.schema = req.schema;
  rec.digest = crypto::sha256_hex(req.content);
  rec.version = 1;
  rec.sealed = true;
  std::set<DatasetId> unique_parents(req.parents.begin(), req.parents.end());
  rec.parents.assign(unique_parents.begin(), unique_parents.end());
  rec.producing_op = req.producing_op;
  rec.plan_summary = req.plan_summary;
  rec.created_at = rec.modified_at = clock_.now();
  auto path = version_path(id, 1, rec.kind);
  fs::create_directories(path.parent_path());
  write_file(path, req.content);
  rec.content_ref = fs::relative(path, root_).generic_string();
  write_meta(rec);
  graph_ = std::move(trial);
  assets_.emplace(id, std::move(rec));
  return id;
}

std::set<DatasetId> Store::descendants(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  if (!assets_.count(id)) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  return graph_.descendants(id);
}

std::set<DatasetId> Store::ancestors(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  if (!assets_.count(id)) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  return graph_.ancestors(id);
}

int Store::depth(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  if (!assets_.count(id)) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  return graph_.depth(id);
}

std::set<DatasetId> Store::original_ancestors(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  auto it = assets_.find(id);
  if (it == assets_.end()) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  std::set<DatasetId> out;
  if (!it->second.derived()) out.insert(id);
  for (const auto& a : graph_.ancestors(id)) {
    if (!assets_.at(a).derived()) out.insert(a);
  }
  return out;
}

std::set<DatasetId> Store::cascade_delete(const DatasetId& id, std::string_view reason) {
  std::unique_lock lock(mu_);
  if (!assets_.count(id)) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  auto doomed = graph_.descendants(id);
  doomed.insert(id);
  const auto now = clock_.now();
  std::ofstream log(root_ / "tombstones", std::ios::app);
  for (const auto& d : doomed) {
    std::error_code ec;
    fs::remove_all(root_ / "assets" / d.hex(), ec);
    graph_.remove_node(d);
    assets_.erase(d);
    Tombstone t{d, now, std::string(reason)};
    log << json{{"id", d.hex()}, {"deleted_at", now}, {"reason", t.reason}}.dump() << '\n';
    tombstones_[d] = std::move(t);
  }
  return doomed;
}

AssetRecord Store::get(const DatasetId& id) const {
  auto rec = find(id);
  if (!rec) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  return *rec;
}

std::optional<AssetRecord> Store::find(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  auto it = assets_.find(id);
  if (it == assets_.end()) return std::nullopt;
  return it->second;
}

bool Store::contains(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  return assets_.count(id) != 0;
}

std::optional<Tombstone> Store::tombstone(const DatasetId& id) const {
  std::shared_lock lock(mu_);
  auto it = tombstones_.find(id);
  if (it == tombstones_.end()) return std::nullopt;
  return it->second;
}

std::vector<AssetRecord> Store::list() const {
  std::shared_lock lock(mu_);
  std::vector<AssetRecord> out;
  for (const auto& [_, rec] : assets_) out.push_back(rec);
  return out;
}

ProvenanceGraph Store::provenance() const {
  std::shared_lock lock(mu_);
  return graph_;
}

std::string Store::read_content(const DatasetId& id, std::optional<int> version) const {
  std::shared_lock lock(mu_);
  auto it = assets_.find(id);
  if (it == assets_.end()) throw Error(ErrorCode::kNotFound, "no asset " + id.hex());
  int v = version.value_or(it->second.version);
  if (v < 1 || v > it->second.version) throw Error(ErrorCode::kNotFound, "no such version");
  std::ifstream in(version_path(id, v, it->second.kind), std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "content missing for " + id.hex());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table Store::read_table(const DatasetId& id) const {
  auto rec = get(id);
  if (rec.encrypted) throw Error(ErrorCode::kInvalidArgument, "encrypted content is opaque");
  if (rec.kind == AssetKind::kModel || rec.kind == AssetKind::kReport) {
    throw Error(ErrorCode::kInvalidArgument, "asset is not tabular");
  }
  return parse_csv(read_content(id));
}

}  // namespace station
