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

#include "station/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace station {

using nlohmann::json;

namespace {

std::map<std::string, std::string> row_map(const Table& table, std::size_t r) {
  std::map<std::string, std::string> out;
  for (std::size_t c = 0; c < table.header.size(); ++c) out[table.header[c]] = table.rows[r][c];
  return out;
}

std::vector<std::string> hex_list(const std::vector<DatasetId>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(id.hex());
  return out;
}

bool reaches(const TaskCapsule& capsule, const DosResult& dos) {
  if (capsule.dos.metric == DosMetric::kHits) return dos.raw >= capsule.dos.threshold;
  return dos.dos >= capsule.dos.threshold;
}

}  // namespace

// ---------------------------------------------------------------------------
// BaselineClassifier

BaselineClassifier BaselineClassifier::train(const Table& table, std::string_view label_column) {
  auto label_idx = table.column_index(label_column);
  if (!label_idx) {
    throw Error(ErrorCode::kSchemaMismatch, "training data lacks label column " +
                                                std::string(label_column));
  }
  BaselineClassifier model;
  model.label_ = table.header[*label_idx];

  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!trim(table.rows[r][*label_idx]).empty()) rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::kSchemaMismatch, "training data has no labelled rows");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (auto r : rows) by_class[trim(table.rows[r][*label_idx])].push_back(r);

  std::vector<std::size_t> numeric_cols;
  std::vector<std::size_t> text_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *label_idx) continue;
    std::vector<std::string> values;
    for (auto r : rows) values.push_back(table.rows[r][c]);
    if (infer_dtype(values) != DType::kNumber) {
      text_cols.push_back(c);
      model.text_.push_back(table.header[c]);
      continue;
    }
    double sum = 0;
    std::size_t n = 0;
    for (const auto& v : values) {
      if (auto x = parse_number(trim(v))) {
        sum += *x;
        ++n;
      }
    }
    if (n == 0) continue;
    double mean = sum / n;
    double sq = 0;
    for (const auto& v : values) {
      if (auto x = parse_number(trim(v))) sq += (*x - mean) * (*x - mean);
    }
    double stddev = std::sqrt(sq / n);
    if (stddev == 0) continue;
    numeric_cols.push_back(c);
    model.numeric_.push_back({table.header[c], mean, stddev});
  }

  for (const auto& [label, members] : by_class) {
    ClassModel cm;
    cm.prior = static_cast<double>(members.size()) / rows.size();
    for (std::size_t f = 0; f < numeric_cols.size(); ++f) {
      double sum = 0;
      std::size_t n = 0;
      for (auto r : members) {
        if (auto x = parse_number(trim(table.rows[r][numeric_cols[f]]))) {
          sum += (*x - model.numeric_[f].mean) / model.numeric_[f].stddev;
          ++n;
        }
      }
      cm.centroid.push_back(n ? sum / n : 0.0);
    }
    for (auto c : text_cols) {
      std::map<std::string, std::size_t> counts;
      for (auto r : members) ++counts[normalize_value(table.rows[r][c], DType::kText)];
      std::string mode;
      std::size_t best = 0;
      for (const auto& [v, k] : counts) {
        if (k > best) {
          best = k;
          mode = v;
        }
      }
      cm.modes.push_back(mode);
    }
    model.classes_.emplace(label, std::move(cm));
  }
  return model;
}

std::string BaselineClassifier::predict(const std::map<std::string, std::string>& row) const {
  std::map<std::string, std::string> normalized;
  for (const auto& [k, v] : row) normalized[normalize_name(k)] = v;
  auto value = [&](const std::string& name) -> std::optional<std::string> {
    auto it = normalized.find(normalize_name(name));
    if (it == normalized.end()) return std::nullopt;
    return it->second;
  };
  std::vector<double> z;
  for (const auto& f : numeric_) {
    auto v = value(f.name);
    auto x = v ? parse_number(trim(*v)) : std::nullopt;
    z.push_back(x ? (*x - f.mean) / f.stddev : 0.0);
  }
  std::vector<std::string> text;
  for (const auto& name : text_) {
    auto v = value(name);
    text.push_back(v ? normalize_value(*v, DType::kText) : std::string());
  }

  const std::string* best_label = nullptr;
  std::tuple<double, double> best{0, 0};
  for (const auto& [label, cm] : classes_) {
    double sq = 0;
    for (std::size_t i = 0; i < z.size(); ++i) sq += (z[i] - cm.centroid[i]) * (z[i] - cm.centroid[i]);
    double d = std::sqrt(sq);
    for (std::size_t i = 0; i < text.size(); ++i) d += text[i] == cm.modes[i] ? 0.0 : 1.0;
    // Labels are visited in ascending order, so strict improvement keeps the
    // smaller label on a full tie.
    std::tuple<double, double> key{d, -cm.prior};
    if (!best_label || key < best) {
      best = key;
      best_label = &label;
    }
  }
  return best_label ? *best_label : std::string();
}

double BaselineClassifier::accuracy(const Table& test) const {
  auto label_idx = test.column_index(label_);
  if (!label_idx) throw Error(ErrorCode::kSchemaMismatch, "test data lacks label column " + label_);
  for (const auto& name : feature_columns()) {
    if (!test.column_index(name)) {
      throw Error(ErrorCode::kSchemaMismatch, "test data lacks feature column " + name);
    }
  }
  if (test.rows.empty()) return 0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.rows.size(); ++r) {
    auto predicted = predict(row_map(test, r));
    if (normalize_value(predicted, DType::kText) ==
        normalize_value(test.rows[r][*label_idx], DType::kText)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / test.rows.size();
}

std::vector<std::string> BaselineClassifier::classes() const {
  std::vector<std::string> out;
  for (const auto& [label, _] : classes_) out.push_back(label);
  return out;
}

std::vector<std::string> BaselineClassifier::feature_columns() const {
  std::vector<std::string> out;
  for (const auto& f : numeric_) out.push_back(f.name);
  out.insert(out.end(), text_.begin(), text_.end());
  return out;
}

std::string BaselineClassifier::to_json() const {
  json numeric = json::array();
  for (const auto& f : numeric_) {
    numeric.push_back({{"name", f.name}, {"mean", f.mean}, {"stddev", f.stddev}});
  }
  json classes = json::object();
  for (const auto& [label, cm] : classes_) {
    classes[label] = {{"centroid", cm.centroid}, {"modes", cm.modes}, {"prior", cm.prior}};
  }
  json j{{"model_class", "nearest_centroid"},
         {"label", label_},
         {"numeric", numeric},
         {"text", text_},
         {"classes", classes}};
  return j.dump();
}

BaselineClassifier BaselineClassifier::from_json(std::string_view text) {
  try {
    auto j = json::parse(text);
    BaselineClassifier model;
    model.label_ = j.at("label").get<std::string>();
    for (const auto& f : j.at("numeric")) {
      model.numeric_.push_back(
          {f.at("name").get<std::string>(), f.at("mean").get<double>(), f.at("stddev").get<double>()});
    }
    model.text_ = j.at("text").get<std::vector<std::string>>();
    for (const auto& [label, c] : j.at("classes").items()) {
      ClassModel cm;
      cm.centroid = c.at("centroid").get<std::vector<double>>();
      cm.modes = c.at("modes").get<std::vector<std::string>>();
      cm.prior = c.at("prior").get<double>();
      if (cm.centroid.size() != model.numeric_.size() || cm.modes.size() != model.text_.size()) {
        throw Error(ErrorCode::kMalformedDocument, "model class " + label + " has wrong arity");
      }
      model.classes_.emplace(label, std::move(cm));
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad model document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Degree of satisfaction

DosResult evaluate_dos(const TaskCapsule& capsule, const Table& input,
                       const std::map<std::string, Transform>& example_transforms) {
  switch (capsule.task_type) {
    case TaskType::kSearch: {
      std::set<std::string> hits;
      for (const auto& row : input.rows) {
        if (!row.empty()) hits.insert(row[0]);
      }
      double raw = static_cast<double>(hits.size());
      double threshold = std::max(capsule.dos.threshold, 1.0);
      return {std::min(raw / threshold, 1.0), raw};
    }
    case TaskType::kQbe: {
      const auto& q = capsule.qbe();
      std::vector<std::size_t> cols;
      std::vector<Transform> transforms;
      for (const auto& a : q.attributes) {
        auto idx = input.column_index(a);
        if (!idx) throw Error(ErrorCode::kSchemaMismatch, "input lacks attribute " + a);
        cols.push_back(*idx);
        auto it = example_transforms.find(normalize_name(a));
        transforms.push_back(it == example_transforms.end() ? Transform::kIdentity : it->second);
      }
      if (q.example_rows.empty()) return {0, 0};
      std::set<std::vector<std::string>> present;
      for (const auto& row : input.rows) {
        std::vector<std::string> key;
        for (auto c : cols) key.push_back(row[c]);
        present.insert(std::move(key));
      }
      std::size_t matched = 0;
      for (const auto& ex : q.example_rows) {
        std::vector<std::string> key;
        for (std::size_t i = 0; i < cols.size() && i < ex.size(); ++i) {
          auto t = apply_transform(transforms[i], ex[i]);
          key.push_back(t ? *t : trim(ex[i]));
        }
        if (present.count(key)) ++matched;
      }
      double cov = static_cast<double>(matched) / q.example_rows.size();
      return {cov, cov};
    }
    case TaskType::kClassify: {
      for (const auto& target : capsule.target_columns()) {
        if (!input.column_index(target)) {
          throw Error(ErrorCode::kSchemaMismatch, "input lacks column " + target);
        }
      }
      const auto& c = capsule.classify();
      auto model = BaselineClassifier::train(input, c.label_column);
      double acc = model.accuracy(c.test_table());
      return {acc, acc};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// ResultCache

void ResultCache::upsert(ResultCacheEntry entry) {
  std::unique_lock lock(mu_);
  auto& slot = entries_[entry.fingerprint];
  auto key = entry.assets;
  slot[key] = std::move(entry);
}

std::optional<ResultCacheEntry> ResultCache::find(const std::string& fingerprint,
                                                  const std::vector<DatasetId>& assets) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(fingerprint);
  if (it == entries_.end()) return std::nullopt;
  auto e = it->second.find(assets);
  if (e == it->second.end()) return std::nullopt;
  return e->second;
}

std::vector<ResultCacheEntry> ResultCache::entries(const std::string& fingerprint) const {
  std::shared_lock lock(mu_);
  std::vector<ResultCacheEntry> out;
  auto it = entries_.find(fingerprint);
  if (it == entries_.end()) return out;
  for (const auto& [_, e] : it->second) out.push_back(e);
  return out;
}

void ResultCache::purge(const std::set<DatasetId>& ids) {
  std::unique_lock lock(mu_);
  auto touches = [&](const ResultCacheEntry& e) {
    for (const auto& a : e.assets) {
      if (ids.count(a)) return true;
    }
    for (const auto& a : e.contributors) {
      if (ids.count(a)) return true;
    }
    return (e.product && ids.count(*e.product)) ||
           (e.training_table && ids.count(*e.training_table));
  };
  for (auto it = entries_.begin(); it != entries_.end();) {
    for (auto e = it->second.begin(); e != it->second.end();) {
      e = touches(e->second) ? it->second.erase(e) : std::next(e);
    }
    it = it->second.empty() ? entries_.erase(it) : std::next(it);
  }
}

std::set<DatasetId> ResultCache::referenced() const {
  std::shared_lock lock(mu_);
  std::set<DatasetId> out;
  for (const auto& [_, slot] : entries_) {
    for (const auto& [__, e] : slot) {
      out.insert(e.assets.begin(), e.assets.end());
      out.insert(e.contributors.begin(), e.contributors.end());
      if (e.product) out.insert(*e.product);
      if (e.training_table) out.insert(*e.training_table);
    }
  }
  return out;
}

std::size_t ResultCache::size() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, slot] : entries_) n += slot.size();
  return n;
}

// ---------------------------------------------------------------------------
// AuditLog

AuditLog::AuditLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void AuditLog::append(Timestamp at, const std::string& fingerprint,
                      const std::vector<DatasetId>& assets, std::string_view governance,
                      std::optional<double> dos, std::string_view outcome) {
  json j{{"timestamp", at},
         {"fingerprint", fingerprint},
         {"assets", hex_list(assets)},
         {"governance", governance},
         {"dos", dos ? json(*dos) : json(nullptr)},
         {"outcome", outcome}};
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to audit log " + path_.string());
}

std::string AuditLog::read() const {
  std::lock_guard lock(mu_);
  std::ifstream in(path_);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Executor

std::string_view release_state_name(ReleaseState state) {
  return state == ReleaseState::kSealed ? "sealed" : "released";
}

std::string_view outcome_status_name(ExecutionOutcome::Status status) {
  switch (status) {
    case ExecutionOutcome::Status::kSatisfied: return "satisfied";
    case ExecutionOutcome::Status::kBlocked: return "blocked";
    case ExecutionOutcome::Status::kUnsatisfied: return "unsatisfied";
  }
  return "unsatisfied";
}

Executor::Executor(Store& store, Catalog& catalog, DiscoveryIndex& index, PolicyEngine& policy,
                   Market& market, const Clock& clock, IdSource& ids, BlendConfig blend,
                   std::filesystem::path audit_path)
    : store_(store),
      catalog_(catalog),
      index_(index),
      policy_(policy),
      market_(market),
      clock_(clock),
      ids_(ids),
      blender_(store, index, blend),
      audit_(std::move(audit_path)) {}

std::function<bool(const DatasetId&)> Executor::admissible(const Principal& user,
                                                           const TaskCapsule& capsule,
                                                           const TrustConstraints& trust) const {
  auto graph = std::make_shared<ProvenanceGraph>(store_.provenance());
  const bool derives = capsule.task_type != TaskType::kSearch;
  return [this, user, trust, graph, derives, type = capsule.task_type](const DatasetId& id) {
    auto pol = policy_.policy(id);
    if (!pol || !policy_.discoverable_to(user, id)) return false;
    if (derives && !pol->derivation_allowed && !policy_.is_owner(user, id)) return false;
    if (policy_.peek_access(user, id, type) == AccessVerdict::Kind::kDeny) return false;
    if (!catalog_.contains(id)) return false;
    return catalog_.satisfies(trust, id, *graph);
  };
}

ExecutionOutcome Executor::execute(const TaskCapsule& capsule, const Principal& user,
                                   const ExecutionBudget& budget) {
  const auto fp = fingerprint(capsule);
  if (capsule.task_type == TaskType::kSearch) return execute_search(capsule, fp, user, budget);

  auto relaxed = capsule.trust;
  relaxed.require_why_profile = false;
  auto candidates = index_.discover(capsule, admissible(user, capsule, relaxed));

  // Speculation: candidates that satisfied this capsule before go first.
  std::set<std::vector<DatasetId>> promoted;
  for (const auto& e : cache_.entries(fp)) {
    if (e.outcome == CacheOutcome::kSatisfied) promoted.insert(e.assets);
  }
  std::stable_partition(candidates.begin(), candidates.end(),
                        [&](const Candidate& c) { return promoted.count(c.assets) != 0; });

  ExecutionOutcome out;
  std::vector<Ambiguity> blocks;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& candidate : candidates) {
    if (out.candidates_evaluated >= budget.max_candidates) break;
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed.count() > budget.max_seconds) break;
    ++out.candidates_evaluated;

    auto cached = cache_.find(fp, candidate.assets);
    if (cached && cached->outcome == CacheOutcome::kSatisfied && cached->product &&
        store_.contains(*cached->product)) {
      audit_.append(clock_.now(), fp, candidate.assets, "pass", cached->dos, "cached");
      out.status = ExecutionOutcome::Status::kSatisfied;
      out.best_dos = cached->dos;
      out.result = make_result(capsule, fp, user, *cached);
      return out;
    }

    Evaluation ev;
    try {
      ev = evaluate(candidate, capsule, fp, out.materializations);
    } catch (const Error& e) {
      audit_.append(clock_.now(), fp, candidate.assets, "n/a", std::nullopt,
                    "error:" + std::string(e.name()));
      continue;
    }
    if (ev.block) {
      blocks.push_back(std::move(*ev.block));
      continue;
    }
    if (!ev.entry) continue;
    out.best_dos = std::max(out.best_dos, ev.entry->dos);
    if (ev.entry->outcome == CacheOutcome::kSatisfied) {
      out.status = ExecutionOutcome::Status::kSatisfied;
      out.result = make_result(capsule, fp, user, *ev.entry);
      return out;
    }
  }

  if (!blocks.empty()) {
    out.task_ids = post_tasks(blocks, fp, user);
    if (!out.task_ids.empty()) out.status = ExecutionOutcome::Status::kBlocked;
  }
  return out;
}

ExecutionOutcome Executor::execute_search(const TaskCapsule& capsule, const std::string& fp,
                                          const Principal& user, const ExecutionBudget& budget) {
  auto candidates = index_.discover(capsule, admissible(user, capsule, capsule.trust));
  if (candidates.size() > budget.max_candidates) candidates.resize(budget.max_candidates);
  Table hits{{"asset"}, {}};
  std::vector<DatasetId> ids;
  for (const auto& c : candidates) {
    for (const auto& a : c.assets) {
      if (std::find(ids.begin(), ids.end(), a) == ids.end()) {
        ids.push_back(a);
        hits.rows.push_back({a.hex()});
      }
    }
  }
  auto dos = evaluate_dos(capsule, hits);
  ResultCacheEntry entry;
  entry.fingerprint = fp;
  entry.assets = ids;
  entry.dos = dos.dos;
  entry.outcome = reaches(capsule, dos) ? CacheOutcome::kSatisfied : CacheOutcome::kUnsatisfied;
  entry.at = clock_.now();
  entry.contributors = {ids.begin(), ids.end()};
  cache_.upsert(entry);
  audit_.append(entry.at, fp, ids, "n/a", dos.raw,
                entry.outcome == CacheOutcome::kSatisfied ? "satisfied" : "unsatisfied");

  ExecutionOutcome out;
  out.candidates_evaluated = candidates.size();
  out.best_dos = dos.dos;
  if (entry.outcome == CacheOutcome::kSatisfied) {
    out.status = ExecutionOutcome::Status::kSatisfied;
    out.result = make_result(capsule, fp, user, entry);
  }
  return out;
}

Executor::Evaluation Executor::evaluate(const Candidate& candidate, const TaskCapsule& capsule,
                                        const std::string& fp, std::size_t& materializations) {
  Evaluation ev;
  auto synthesized = blender_.synthesize(candidate, capsule);
  if (auto* amb = std::get_if<Ambiguity>(&synthesized)) {
    audit_.append(clock_.now(), fp, candidate.assets, "n/a", std::nullopt, "blocked");
    ev.block = *amb;
    return ev;
  }
  const auto& plan = std::get<BlendPlan>(synthesized);

  if (capsule.trust.require_why_profile) {
    Ambiguity missing;
    missing.kind = Ambiguity::Kind::kMissingProfile;
    missing.fingerprint = fp;
    for (const auto& a : plan.inputs) {
      for (const auto& origin : store_.original_ancestors(a)) {
        auto profile = catalog_.get(origin);
        if (profile && !trim(profile->why.text).empty()) continue;
        auto rec = store_.get(origin);
        missing.alternatives.push_back(
            {"dataset '" + rec.name + "' (" + origin.hex() + ") has no why-profile", std::nullopt,
             origin});
      }
    }
    if (!missing.alternatives.empty()) {
      audit_.append(clock_.now(), fp, candidate.assets, "n/a", std::nullopt, "blocked");
      ev.block = std::move(missing);
      return ev;
    }
  }

  if (!policy_.check_governance(Blender::governance_input(plan, capsule)).empty()) {
    audit_.append(clock_.now(), fp, candidate.assets, "violation", std::nullopt, "skipped");
    return ev;
  }
  auto table_id = blender_.materialize(plan, store_, policy_, capsule);
  ++materializations;
  auto table = store_.read_table(table_id);
  std::map<std::string, Transform> example_transforms;
  for (const auto& m : plan.mappings) {
    example_transforms[normalize_name(m.target)] = m.transforms.example;
  }
  auto dos = evaluate_dos(capsule, table, example_transforms);

  ResultCacheEntry entry;
  entry.fingerprint = fp;
  entry.assets = candidate.assets;
  entry.dos = dos.dos;
  entry.outcome = reaches(capsule, dos) ? CacheOutcome::kSatisfied : CacheOutcome::kUnsatisfied;
  entry.at = clock_.now();
  entry.product = table_id;
  entry.contributors = {plan.inputs.begin(), plan.inputs.end()};

  if (capsule.task_type == TaskType::kClassify && entry.outcome == CacheOutcome::kSatisfied) {
    auto model = BaselineClassifier::train(table, capsule.classify().label_column);
    DerivedRequest req;
    req.kind = AssetKind::kModel;
    req.parents = plan.inputs;
    req.producing_op = "executor.train";
    req.plan_summary = plan.summary();
    req.content = model.to_json();
    entry.product = store_.register_derived(req);
    entry.training_table = table_id;
  }
  cache_.upsert(entry);
  audit_.append(entry.at, fp, candidate.assets, "pass", dos.dos,
                entry.outcome == CacheOutcome::kSatisfied ? "satisfied" : "unsatisfied");
  ev.entry = std::move(entry);
  return ev;
}

std::vector<std::string> Executor::post_tasks(const std::vector<Ambiguity>& blocks,
                                              const std::string& fp, const Principal& user) {
  auto name_of = [&](const DatasetId& id) {
    auto rec = store_.find(id);
    return rec && !rec->name.empty() ? rec->name : id.hex();
  };
  std::vector<TaskSpec> specs;
  for (const auto& b : blocks) {
    if (b.kind == Ambiguity::Kind::kJoinChoice) {
      const auto& first = *b.alternatives.at(0).join;
      specs.push_back(join_task(b, name_of(first.left.asset), name_of(first.right.asset)));
      continue;
    }
    for (const auto& alt : b.alternatives) {
      if (!alt.dataset) continue;
      std::vector<std::string> columns;
      for (const auto& c : store_.get(*alt.dataset).schema) columns.push_back(c.name);
      specs.push_back(why_task(*alt.dataset, name_of(*alt.dataset), columns));
    }
  }
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& spec : specs) {
    if (!seen.insert(spec.key()).second) continue;
    try {
      auto id = market_.generate(spec, user.user, fp).id;
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientEscrowFunds) throw;
    }
  }
  return ids;
}

TaskResult Executor::make_result(const TaskCapsule& capsule, const std::string& fp,
                                 const Principal& user, const ResultCacheEntry& entry) {
  TaskResult r;
  r.id = ids_.next_token("res");
  r.fingerprint = fp;
  r.user = user.user;
  r.task_type = capsule.task_type;
  r.product = entry.product;
  r.training_table = entry.training_table;
  r.dos = {entry.dos, entry.dos};
  r.contributors = entry.contributors;
  r.created_at = clock_.now();
  if (capsule.task_type == TaskType::kSearch) {
    r.hits = entry.assets;
    r.dos.raw = static_cast<double>(entry.assets.size());
  }
  std::unique_lock lock(mu_);
  results_[r.id] = r;
  return r;
}

std::optional<TaskResult> Executor::result(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = results_.find(id);
  if (it == results_.end()) return std::nullopt;
  return it->second;
}

void Executor::purge(const std::set<DatasetId>& deleted) {
  cache_.purge(deleted);
  std::unique_lock lock(mu_);
  for (auto it = results_.begin(); it != results_.end();) {
    std::set<DatasetId> hit;
    for (const auto& c : it->second.contributors) {
      if (deleted.count(c)) hit.insert(c);
    }
    bool product_gone = it->second.product && deleted.count(*it->second.product);
    if (hit.empty() && !product_gone) {
      ++it;
      continue;
    }
    revoked_results_[it->first] = {it->second.user, std::move(hit)};
    it = results_.erase(it);
  }
}

ReleasedContent Executor::content_of(const TaskResult& r) const {
  switch (r.task_type) {
    case TaskType::kSearch: {
      std::string body = "[";
      for (std::size_t i = 0; i < r.hits.size(); ++i) {
        auto profile = catalog_.get(r.hits[i]);
        if (!profile) continue;
        if (body.size() > 1) body += ",";
        body += public_record(*profile);
      }
      body += "]";
      return {"application/json", body};
    }
    case TaskType::kQbe:
      return {"text/csv", store_.read_content(*r.product)};
    case TaskType::kClassify: {
      auto model = BaselineClassifier::from_json(store_.read_content(*r.product));
      json j{{"model", r.product->hex()},
             {"accuracy", r.dos.dos},
             {"label_column", model.label_column()},
             {"features", model.feature_columns()},
             {"predict", "/models/" + r.product->hex() + "/predict"}};
      return {"application/json", j.dump()};
    }
  }
  return {};
}

ReleaseOutcome Executor::release(const std::string& result_id, const Principal& user,
                                 const std::vector<std::string>& tokens) {
  ReleaseOutcome out;
  TaskResult r;
  {
    std::unique_lock lock(mu_);
    if (auto rv = revoked_results_.find(result_id); rv != revoked_results_.end()) {
      if (rv->second.first != user.user) throw Error(ErrorCode::kNotFound, "no result " + result_id);
      for (const auto& d : rv->second.second) out.denials.push_back({d, "Revoked", std::nullopt});
      if (out.denials.empty()) out.denials.push_back({DatasetId{}, "Revoked", std::nullopt});
      revoked_results_.erase(rv);
      return out;
    }
    auto it = results_.find(result_id);
    if (it == results_.end() || it->second.user != user.user) {
      throw Error(ErrorCode::kNotFound, "no result " + result_id);
    }
    r = it->second;
    std::vector<ReleaseDenial> gone;
    for (const auto& c : r.contributors) {
      if (!store_.contains(c) || policy_.is_revoked(c)) gone.push_back({c, "Revoked", std::nullopt});
    }
    if (r.product && !store_.contains(*r.product) && gone.empty()) {
      gone.push_back({*r.product, "Revoked", std::nullopt});
    }
    if (!gone.empty()) {
      results_.erase(it);
      out.denials = std::move(gone);
      return out;
    }
  }

  std::vector<DatasetId> brokered;
  std::vector<DatasetId> dp;
  for (const auto& c : r.contributors) {
    auto pol = policy_.policy(c);
    if (!pol) {
      out.denials.push_back({c, "Closed", std::nullopt});
      continue;
    }
    if (pol->dp_filter) dp.push_back(c);
    if (policy_.is_owner(user, c)) continue;
    auto kind = policy_.peek_access(user, c, r.task_type);
    switch (pol->access) {
      case AccessMode::kOpen:
        if (kind == AccessVerdict::Kind::kDeny) out.denials.push_back({c, "Denied", std::nullopt});
        break;
      case AccessMode::kClosed: out.denials.push_back({c, "Closed", std::nullopt}); break;
      case AccessMode::kBrokered:
        if (kind == AccessVerdict::Kind::kDeny) {
          out.denials.push_back({c, "Denied", std::nullopt});
        } else {
          brokered.push_back(c);
        }
        break;
    }
  }
  if (r.task_type == TaskType::kClassify) {
    for (const auto& d : dp) out.denials.push_back({d, "DpModelBlocked", std::nullopt});
  }
  if (!out.denials.empty()) return out;

  // Group brokered contributors under the first presented token covering
  // each, taking tokens issued to the caller before any other.
  std::map<std::size_t, std::set<DatasetId>> groups;
  bool unreadable = false;
  std::vector<std::optional<CapabilityToken>> peeked;
  for (const auto& t : tokens) {
    peeked.push_back(policy_.peek_token(t));
    if (!peeked.back()) unreadable = true;
  }
  for (const auto& d : brokered) {
    std::optional<std::size_t> chosen;
    for (bool own : {true, false}) {
      for (std::size_t i = 0; i < peeked.size() && !chosen; ++i) {
        if (peeked[i] && peeked[i]->dataset_ids.count(d) &&
            (!own || peeked[i]->subject == user.user)) {
          chosen = i;
        }
      }
    }
    if (chosen) {
      groups[*chosen].insert(d);
      continue;
    }
    if (unreadable) {
      out.denials.push_back({d, "BadMac", std::nullopt});
      continue;
    }
    auto verdict = policy_.evaluate_access(user, d, r.task_type, r.fingerprint);
    if (verdict.kind == AccessVerdict::Kind::kNeedsApproval) {
      out.denials.push_back({d, "NeedsApproval", verdict.request_id});
    } else if (verdict.kind == AccessVerdict::Kind::kAllow) {
      std::optional<std::string> approved;
      for (const auto& req : policy_.requests_of(user.user)) {
        if (req.dataset == d && req.status == RequestStatus::kApproved) approved = req.id;
      }
      out.denials.push_back({d, "TokenRequired", approved});
    } else {
      out.denials.push_back({d, "Denied", std::nullopt});
    }
  }
  if (!out.denials.empty()) return out;
  for (const auto& [i, needed] : groups) {
    auto verdict = policy_.verify_and_consume(tokens[i], user.user, needed);
    if (!verdict.allowed) {
      for (const auto& d : needed) {
        out.denials.push_back({d, std::string(deny_reason_name(verdict.reason)), std::nullopt});
      }
    }
  }
  if (!out.denials.empty()) return out;

  if (!dp.empty() && r.task_type == TaskType::kQbe) {
    double value = static_cast<double>(store_.read_table(*r.product).rows.size());
    for (const auto& d : dp) {
      try {
        value = policy_.apply_dp(d, value, 1.0, policy_.policy(d)->dp_filter->epsilon_per_query);
      } catch (const Error& e) {
        out.denials.push_back({d, std::string(e.name()), std::nullopt});
        return out;
      }
    }
    out.content = {"application/json", json{{"row_count", value}, {"noised", true}}.dump()};
  } else {
    out.content = content_of(r);
  }
  out.released = true;
  for (const auto& c : r.contributors) catalog_.record_access(c, user.user);
  std::unique_lock lock(mu_);
  if (auto it = results_.find(result_id); it != results_.end()) {
    it->second.state = ReleaseState::kReleased;
  }
  return out;
}

std::string Executor::predict(const DatasetId& model, const Principal& user,
                              const std::map<std::string, std::string>& row) {
  auto rec = store_.find(model);
  if (!rec) {
    if (store_.tombstone(model)) throw Error(ErrorCode::kRevoked, "model was deleted");
    throw Error(ErrorCode::kNotFound, "no model " + model.hex());
  }
  if (rec->kind != AssetKind::kModel) throw Error(ErrorCode::kNotFound, "no model " + model.hex());
  bool served = false;
  {
    std::shared_lock lock(mu_);
    for (const auto& [_, r] : results_) {
      if (r.user == user.user && r.product == model && r.state == ReleaseState::kReleased) {
        served = true;
      }
    }
  }
  if (!served) throw Error(ErrorCode::kAccessDenied, "model has not been released to " + user.user);
  return BaselineClassifier::from_json(store_.read_content(model)).predict(row);
}

}  // namespace station
