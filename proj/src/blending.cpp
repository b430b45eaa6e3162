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

#include "station/blending.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace station {

std::string_view transform_name(Transform t) {
  switch (t) {
    case Transform::kIdentity: return "identity";
    case Transform::kTrim: return "trim";
    case Transform::kLowercase: return "lowercase";
    case Transform::kParseNumber: return "parse_number";
    case Transform::kParseDateIso: return "parse_date_iso";
    case Transform::kParseDateUs: return "parse_date_us";
  }
  return "identity";
}

std::optional<Transform> parse_transform(std::string_view name) {
  for (auto t : kTransforms) {
    if (transform_name(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<std::string> apply_transform(Transform t, std::string_view value) {
  std::optional<std::string> out;
  switch (t) {
    case Transform::kIdentity: out = std::string(value); break;
    case Transform::kTrim: out = trim(value); break;
    case Transform::kLowercase: out = to_lower(value); break;
    case Transform::kParseNumber:
      if (auto n = parse_number(trim(value))) out = format_number(*n);
      break;
    case Transform::kParseDateIso: out = parse_iso_date(trim(value)); break;
    case Transform::kParseDateUs: out = parse_us_date(trim(value)); break;
  }
  if (out && out->empty()) return std::nullopt;
  return out;
}

std::string_view ambiguity_kind_name(Ambiguity::Kind kind) {
  return kind == Ambiguity::Kind::kJoinChoice ? "join_choice" : "missing_profile";
}

namespace {

using ValueSet = std::unordered_set<std::string>;

ValueSet transformed_set(const std::vector<std::string>& values, Transform t) {
  ValueSet out;
  for (const auto& v : values) {
    if (auto x = apply_transform(t, v)) out.insert(std::move(*x));
  }
  return out;
}

double jaccard(const ValueSet& a, const ValueSet& b) {
  if (a.empty() || b.empty()) return 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t inter = 0;
  for (const auto& v : small) inter += large.count(v);
  return static_cast<double>(inter) / (a.size() + b.size() - inter);
}

double fraction_matched(const std::vector<std::string>& values, Transform t, const ValueSet& source) {
  if (values.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& v : values) {
    auto x = apply_transform(t, v);
    if (x && source.count(*x)) ++hit;
  }
  return static_cast<double>(hit) / values.size();
}

double fraction_numeric(const std::vector<std::string>& values, Transform t) {
  if (values.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& v : values) {
    auto x = apply_transform(t, v);
    if (x && parse_number(*x)) ++hit;
  }
  return static_cast<double>(hit) / values.size();
}

bool all_numeric(const std::vector<std::string>& values, Transform t) {
  bool any = false;
  for (const auto& v : values) {
    if (trim(v).empty()) continue;
    auto x = apply_transform(t, v);
    if (!x || !parse_number(*x)) return false;
    any = true;
  }
  return any;
}

std::string asset_label(const Store& store, const DatasetId& id) {
  auto rec = store.find(id);
  std::string name = rec && !rec->name.empty() ? rec->name : "unnamed";
  return "'" + name + "' (" + id.hex() + ")";
}

std::string ref_text(const ColumnRef& r) { return r.asset.hex() + "." + r.column; }

}  // namespace

double match_fraction(const std::vector<std::string>& values, const std::vector<std::string>& source,
                      TransformPair pair, bool numeric_feature) {
  if (numeric_feature) {
    return all_numeric(source, pair.source) ? fraction_numeric(values, pair.example) : 0.0;
  }
  return fraction_matched(values, pair.example, transformed_set(source, pair.source));
}

std::string BlendPlan::summary() const {
  std::vector<std::string> parts;
  if (join) {
    parts.push_back("join(" + ref_text(join->left) + "~" +
                    std::string(transform_name(join->left_transform)) + ", " +
                    ref_text(join->right) + "~" +
                    std::string(transform_name(join->right_transform)) + ")");
  }
  for (const auto& m : mappings) {
    std::string s = "map(" + m.target + "<-" + ref_text(m.source) + "~" +
                    std::string(transform_name(m.transforms.source));
    if (m.transforms.example != Transform::kIdentity) {
      s += ":" + std::string(transform_name(m.transforms.example));
    }
    parts.push_back(s + ")");
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

Blender::Blender(const Store& store, const DiscoveryIndex& index, BlendConfig config)
    : store_(store), index_(index), config_(config) {}

SynthesisResult Blender::synthesize(const Candidate& candidate, const TaskCapsule& capsule) const {
  if (candidate.assets.empty() || candidate.assets.size() > 2) {
    throw Error(ErrorCode::kNoViablePlan, "candidates have one or two inputs");
  }
  std::map<DatasetId, Table> tables;
  std::map<DatasetId, AssetRecord> records;
  for (const auto& id : candidate.assets) {
    tables.emplace(id, store_.read_table(id));
    records.emplace(id, store_.get(id));
  }

  BlendPlan plan;
  plan.inputs = candidate.assets;

  // Capsule-side values per target column.
  auto targets = capsule.target_columns();
  std::vector<std::vector<std::string>> wanted(targets.size());
  std::optional<std::size_t> label;
  if (capsule.task_type == TaskType::kQbe) {
    for (const auto& row : capsule.qbe().example_rows) {
      for (std::size_t i = 0; i < row.size(); ++i) wanted[i].push_back(row[i]);
    }
  } else if (capsule.task_type == TaskType::kClassify) {
    auto t = capsule.classify().test_table();
    for (std::size_t i = 0; i < targets.size(); ++i) wanted[i] = t.column(i);
    label = t.column_index(capsule.classify().label_column);
  }

  double total = 0;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::optional<ColumnMapping> chosen;
    for (const auto& id : candidate.assets) {
      const auto& table = tables.at(id);
      auto col = table.column_index(targets[ti]);
      if (!col) continue;
      auto source = table.column(*col);
      bool numeric = capsule.task_type == TaskType::kClassify && label != ti &&
                     *col < records.at(id).schema.size() &&
                     records.at(id).schema[*col].dtype == DType::kNumber;
      std::array<ValueSet, kTransforms.size()> source_sets;
      if (!numeric) {
        for (std::size_t k = 0; k < kTransforms.size(); ++k) {
          source_sets[k] = transformed_set(source, kTransforms[k]);
        }
      }
      for (auto ex : kTransforms) {
        for (std::size_t k = 0; k < kTransforms.size() && !chosen; ++k) {
          TransformPair pair{ex, kTransforms[k]};
          double m = numeric ? (all_numeric(source, pair.source) ? fraction_numeric(wanted[ti], ex) : 0)
                             : fraction_matched(wanted[ti], ex, source_sets[k]);
          if (m >= config_.match_fraction) {
            chosen = ColumnMapping{targets[ti], {id, table.header[*col]}, pair, m};
          }
        }
        if (chosen) break;
      }
      if (chosen) break;
    }
    if (!chosen) {
      throw Error(ErrorCode::kNoViablePlan,
                  "no transform reaches the match fraction for column '" + targets[ti] + "'");
    }
    total += chosen->match;
    plan.mappings.push_back(std::move(*chosen));
  }
  plan.validation = targets.empty() ? 1.0 : total / targets.size();

  if (candidate.assets.size() == 1) return plan;

  const auto& left_id = candidate.assets[0];
  const auto& right_id = candidate.assets[1];
  auto options = candidate.join_options;
  if (options.empty()) options = index_.edges_between(left_id, right_id);
  std::vector<JoinSpec> scored;
  for (const auto& edge : options) {
    auto l = edge.a.asset == left_id ? edge.a : edge.b;
    auto r = edge.a.asset == left_id ? edge.b : edge.a;
    const auto& lt = tables.at(left_id);
    const auto& rt = tables.at(right_id);
    auto lc = lt.column_index(l.column);
    auto rc = rt.column_index(r.column);
    if (!lc || !rc) continue;
    auto lvals = lt.column(*lc);
    auto rvals = rt.column(*rc);
    std::array<ValueSet, kTransforms.size()> rsets;
    for (std::size_t k = 0; k < kTransforms.size(); ++k) rsets[k] = transformed_set(rvals, kTransforms[k]);
    std::optional<JoinSpec> best;
    for (auto t1 : kTransforms) {
      auto lset = transformed_set(lvals, t1);
      for (std::size_t k = 0; k < kTransforms.size(); ++k) {
        double j = jaccard(lset, rsets[k]);
        if (j > 0 && (!best || j > best->score)) best = JoinSpec{l, r, t1, kTransforms[k], j};
      }
    }
    if (best) scored.push_back(*best);
  }
  if (scored.empty()) throw Error(ErrorCode::kNoViablePlan, "no joinable key columns");
  std::sort(scored.begin(), scored.end(), [](const JoinSpec& a, const JoinSpec& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.left, a.right) < std::tie(b.left, b.right);
  });

  if (auto note = index_.annotation(left_id, right_id)) {
    for (const auto& s : scored) {
      if (s.left == note->first && s.right == note->second) {
        plan.join = s;
        return plan;
      }
    }
  }
  std::vector<JoinSpec> tied;
  for (const auto& s : scored) {
    if (scored.front().score - s.score < config_.tie_tolerance) tied.push_back(s);
  }
  if (tied.size() >= 2) {
    Ambiguity amb;
    amb.kind = Ambiguity::Kind::kJoinChoice;
    amb.fingerprint = fingerprint(capsule);
    for (const auto& s : tied) {
      char score[16];
      std::snprintf(score, sizeof score, "%.2f", s.score);
      amb.alternatives.push_back(Ambiguity::Alternative{
          asset_label(store_, s.left.asset) + " column '" + s.left.column + "' = " +
              asset_label(store_, s.right.asset) + " column '" + s.right.column + "' (overlap " +
              score + ")",
          s, std::nullopt});
    }
    return amb;
  }
  plan.join = scored.front();
  return plan;
}

Table Blender::execute_plan(const BlendPlan& plan) const {
  std::map<DatasetId, Table> tables;
  for (const auto& id : plan.inputs) tables.emplace(id, store_.read_table(id));
  Table out;
  struct Source {
    bool right;
    std::size_t col;
    Transform t;
  };
  std::vector<Source> sources;
  for (const auto& m : plan.mappings) {
    out.header.push_back(m.target);
    const auto& t = tables.at(m.source.asset);
    auto col = t.column_index(m.source.column);
    if (!col) throw Error(ErrorCode::kSchemaMismatch, "missing column " + m.source.column);
    bool right = plan.inputs.size() == 2 && m.source.asset == plan.inputs[1];
    sources.push_back({right, *col, m.transforms.source});
  }
  auto emit = [&](const std::vector<std::string>& l, const std::vector<std::string>* r) {
    std::vector<std::string> row;
    row.reserve(sources.size());
    for (const auto& s : sources) {
      const auto& raw = s.right ? (*r)[s.col] : l[s.col];
      row.push_back(apply_transform(s.t, raw).value_or(raw));
    }
    out.rows.push_back(std::move(row));
  };

  const auto& left = tables.at(plan.inputs[0]);
  if (!plan.join) {
    for (const auto& row : left.rows) emit(row, nullptr);
    return out;
  }
  const auto& right = tables.at(plan.inputs[1]);
  auto lc = left.column_index(plan.join->left.column);
  auto rc = right.column_index(plan.join->right.column);
  if (!lc || !rc) throw Error(ErrorCode::kSchemaMismatch, "missing join column");
  std::unordered_map<std::string, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < right.rows.size(); ++i) {
    if (auto k = apply_transform(plan.join->right_transform, right.rows[i][*rc])) {
      by_key[*k].push_back(i);
    }
  }
  for (const auto& row : left.rows) {
    auto k = apply_transform(plan.join->left_transform, row[*lc]);
    if (!k) continue;
    auto it = by_key.find(*k);
    if (it == by_key.end()) continue;
    for (auto i : it->second) emit(row, &right.rows[i]);
  }
  return out;
}

GovernanceInput Blender::governance_input(const BlendPlan& plan, const TaskCapsule& capsule) {
  GovernanceInput in;
  in.task_type = capsule.task_type;
  if (capsule.task_type == TaskType::kClassify) in.model_class = capsule.classify().model_class;
  for (const auto& id : plan.inputs) {
    GovernanceInput::Source s{id, {}};
    for (const auto& m : plan.mappings) {
      if (m.source.asset == id) s.columns.push_back(m.source.column);
    }
    if (plan.join) {
      if (plan.join->left.asset == id) s.columns.push_back(plan.join->left.column);
      if (plan.join->right.asset == id) s.columns.push_back(plan.join->right.column);
    }
    in.sources.push_back(std::move(s));
  }
  return in;
}

DatasetId Blender::materialize(const BlendPlan& plan, Store& store, const PolicyEngine& policy,
                               const TaskCapsule& capsule) const {
  auto violations = policy.check_governance(governance_input(plan, capsule));
  if (!violations.empty()) {
    std::vector<std::string> details;
    for (const auto& v : violations) {
      details.push_back(std::string(violation_kind_name(v.kind)) + ": " + v.detail);
    }
    throw Error(ErrorCode::kGovernanceViolation, "plan violates governance policy", details);
  }
  auto table = execute_plan(plan);
  if (table.rows.empty()) throw Error(ErrorCode::kJoinEmpty, "plan produced no rows");
  DerivedRequest req;
  req.kind = AssetKind::kTable;
  req.parents = plan.inputs;
  req.producing_op = plan.join ? "blend.join" : "blend.project";
  req.plan_summary = plan.summary();
  req.content = write_csv(table);
  req.schema = infer_schema(table);
  return store.register_derived(req);
}

}  // namespace station
