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

#include "station/capsule.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "station/crypto.hpp"

namespace station {

using nlohmann::json;

std::string_view dos_metric_name(DosMetric metric) {
  switch (metric) {
    case DosMetric::kAccuracy: return "accuracy";
    case DosMetric::kCoverage: return "coverage";
    case DosMetric::kHits: return "hits";
  }
  return "accuracy";
}

DosMetric metric_for(TaskType type) {
  switch (type) {
    case TaskType::kSearch: return DosMetric::kHits;
    case TaskType::kQbe: return DosMetric::kCoverage;
    case TaskType::kClassify: return DosMetric::kAccuracy;
  }
  return DosMetric::kHits;
}

std::vector<std::string> TaskCapsule::target_columns() const {
  switch (task_type) {
    case TaskType::kQbe: return qbe().attributes;
    case TaskType::kClassify: return classify().test_table().header;
    case TaskType::kSearch: return {};
  }
  return {};
}

namespace {

struct Violations {
  std::vector<std::pair<ErrorCode, std::string>> items;

  void add(ErrorCode code, std::string message) { items.emplace_back(code, std::move(message)); }

  [[noreturn]] void raise() const {
    std::vector<std::string> details;
    for (const auto& [code, msg] : items) {
      details.push_back(std::string(error_name(code)) + ": " + msg);
    }
    throw Error(items.front().first, items.front().second, std::move(details));
  }
};

std::optional<std::vector<std::string>> string_list(const json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) return std::nullopt;
    out.push_back(trim(v.get<std::string>()));
  }
  return out;
}

SearchPayload parse_search(const json& p, Violations& v) {
  SearchPayload out;
  auto kws = p.contains("keywords") ? string_list(p["keywords"]) : std::nullopt;
  if (!kws || kws->empty()) {
    v.add(ErrorCode::kPayloadMismatch, "search payload needs a non-empty keywords list");
    return out;
  }
  for (auto& k : *kws) {
    if (k.empty()) {
      v.add(ErrorCode::kPayloadMismatch, "search keywords must be non-empty");
    } else {
      out.keywords.push_back(std::move(k));
    }
  }
  return out;
}

QbePayload parse_qbe(const json& p, Violations& v) {
  QbePayload out;
  auto attrs = p.contains("attributes") ? string_list(p["attributes"]) : std::nullopt;
  if (!attrs || attrs->empty()) {
    v.add(ErrorCode::kPayloadMismatch, "qbe payload needs a non-empty attributes list");
  } else {
    std::set<std::string> seen;
    for (const auto& a : *attrs) {
      if (a.empty()) v.add(ErrorCode::kPayloadMismatch, "qbe attribute names must be non-empty");
      if (!seen.insert(normalize_name(a)).second) {
        v.add(ErrorCode::kPayloadMismatch, "duplicate qbe attribute '" + a + "'");
      }
    }
    out.attributes = std::move(*attrs);
  }
  if (!p.contains("example_rows") || !p["example_rows"].is_array() || p["example_rows"].empty()) {
    v.add(ErrorCode::kPayloadMismatch, "qbe payload needs at least one example row");
    return out;
  }
  for (std::size_t i = 0; i < p["example_rows"].size(); ++i) {
    auto row = string_list(p["example_rows"][i]);
    if (!row) {
      v.add(ErrorCode::kPayloadMismatch, "example row " + std::to_string(i) + " is not a string list");
      continue;
    }
    if (row->size() != out.attributes.size()) {
      v.add(ErrorCode::kPayloadMismatch, "example row " + std::to_string(i) + " has " +
                                             std::to_string(row->size()) + " values for " +
                                             std::to_string(out.attributes.size()) +
                                             " attributes");
    }
    out.example_rows.push_back(std::move(*row));
  }
  return out;
}

ClassifyPayload parse_classify(const json& p, Violations& v) {
  ClassifyPayload out;
  if (!p.contains("n_classes") || !p["n_classes"].is_number_integer() ||
      p["n_classes"].get<std::int64_t>() < 2) {
    v.add(ErrorCode::kPayloadMismatch, "n_classes must be an integer >= 2");
  } else {
    out.n_classes = p["n_classes"].get<int>();
  }
  if (!p.contains("label_column") || !p["label_column"].is_string() ||
      trim(p["label_column"].get<std::string>()).empty()) {
    v.add(ErrorCode::kPayloadMismatch, "label_column must be a non-empty string");
  } else {
    out.label_column = trim(p["label_column"].get<std::string>());
  }
  if (p.contains("model_class")) {
    if (!p["model_class"].is_string() || trim(p["model_class"].get<std::string>()).empty()) {
      v.add(ErrorCode::kPayloadMismatch, "model_class must be a non-empty string");
    } else {
      out.model_class = trim(p["model_class"].get<std::string>());
    }
  }
  if (!p.contains("test_data") || !p["test_data"].is_string()) {
    v.add(ErrorCode::kPayloadMismatch, "test_data must be inline CSV text");
    return out;
  }
  Table t;
  try {
    t = parse_csv(p["test_data"].get<std::string>());
  } catch (const Error& e) {
    v.add(ErrorCode::kPayloadMismatch, std::string("test_data: ") + e.what());
    return out;
  }
  for (auto& h : t.header) h = trim(h);
  for (auto& row : t.rows) {
    for (auto& cell : row) cell = trim(cell);
  }
  out.test_data = write_csv(t);
  if (t.rows.size() < 2) v.add(ErrorCode::kPayloadMismatch, "test_data needs at least 2 rows");
  if (out.label_column.empty()) return out;
  auto label = t.column_index(out.label_column);
  if (!label) {
    v.add(ErrorCode::kPayloadMismatch, "test_data has no column '" + out.label_column + "'");
    return out;
  }
  if (t.header.size() < 2) v.add(ErrorCode::kPayloadMismatch, "test_data has no feature columns");
  std::set<std::string> labels;
  for (const auto& row : t.rows) labels.insert(row[*label]);
  if (static_cast<int>(labels.size()) > out.n_classes) {
    v.add(ErrorCode::kPayloadMismatch, "test_data has " + std::to_string(labels.size()) +
                                           " labels for n_classes=" +
                                           std::to_string(out.n_classes));
  }
  return out;
}

TrustConstraints parse_trust(const json& t, Violations& v) {
  TrustConstraints out;
  if (!t.is_object()) {
    v.add(ErrorCode::kMalformedDocument, "trust must be an object");
    return out;
  }
  for (const auto& [key, _] : t.items()) {
    if (key != "creators_allow" && key != "created_after" && key != "require_why_profile" &&
        key != "max_provenance_depth") {
      v.add(ErrorCode::kMalformedDocument, "unknown trust field '" + key + "'");
    }
  }
  if (t.contains("creators_allow") && !t["creators_allow"].is_null()) {
    auto list = string_list(t["creators_allow"]);
    if (!list) {
      v.add(ErrorCode::kMalformedDocument, "creators_allow must be a list of key fingerprints");
    } else {
      out.creators_allow = std::set<std::string>(list->begin(), list->end());
    }
  }
  if (t.contains("created_after") && !t["created_after"].is_null()) {
    if (!t["created_after"].is_number_integer()) {
      v.add(ErrorCode::kMalformedDocument, "created_after must be an integer timestamp");
    } else {
      out.created_after = t["created_after"].get<Timestamp>();
    }
  }
  if (t.contains("require_why_profile")) {
    if (!t["require_why_profile"].is_boolean()) {
      v.add(ErrorCode::kMalformedDocument, "require_why_profile must be a boolean");
    } else {
      out.require_why_profile = t["require_why_profile"].get<bool>();
    }
  }
  if (t.contains("max_provenance_depth") && !t["max_provenance_depth"].is_null()) {
    const auto& d = t["max_provenance_depth"];
    if (!d.is_number_integer() || d.get<std::int64_t>() < 0) {
      v.add(ErrorCode::kMalformedDocument, "max_provenance_depth must be an integer >= 0");
    } else {
      out.max_provenance_depth = d.get<int>();
    }
  }
  return out;
}

DosSpec parse_dos(const json& d, TaskType type, Violations& v) {
  DosSpec out;
  out.metric = metric_for(type);
  if (!d.is_object() || !d.contains("metric") || !d["metric"].is_string() ||
      !d.contains("threshold") || !d["threshold"].is_number()) {
    v.add(ErrorCode::kMalformedDocument, "dos needs a string metric and a numeric threshold");
    return out;
  }
  auto metric = d["metric"].get<std::string>();
  if (metric != dos_metric_name(out.metric)) {
    v.add(ErrorCode::kDosMismatch, "metric '" + metric + "' does not apply to " +
                                       std::string(task_type_name(type)) + " capsules (expected " +
                                       std::string(dos_metric_name(out.metric)) + ")");
  }
  out.threshold = d["threshold"].get<double>();
  if (out.metric == DosMetric::kHits) {
    if (out.threshold < 1 || out.threshold != std::floor(out.threshold)) {
      v.add(ErrorCode::kDosMismatch, "hits threshold must be an integer >= 1");
    }
  } else if (!(out.threshold >= 0 && out.threshold <= 1)) {
    v.add(ErrorCode::kDosMismatch, "threshold must lie in [0,1]");
  }
  return out;
}

json payload_json(const TaskCapsule& c) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SearchPayload>) {
          return json{{"keywords", p.keywords}};
        } else if constexpr (std::is_same_v<P, QbePayload>) {
          return json{{"attributes", p.attributes}, {"example_rows", p.example_rows}};
        } else {
          return json{{"n_classes", p.n_classes},
                      {"label_column", p.label_column},
                      {"test_data", p.test_data},
                      {"model_class", p.model_class}};
        }
      },
      c.payload);
}

json capsule_json(const TaskCapsule& c, bool with_submitter) {
  json trust = json::object();
  if (c.trust.creators_allow) trust["creators_allow"] = *c.trust.creators_allow;
  if (c.trust.created_after) trust["created_after"] = *c.trust.created_after;
  trust["require_why_profile"] = c.trust.require_why_profile;
  if (c.trust.max_provenance_depth) trust["max_provenance_depth"] = *c.trust.max_provenance_depth;
  json dos{{"metric", dos_metric_name(c.dos.metric)}};
  if (c.dos.metric == DosMetric::kHits) {
    dos["threshold"] = static_cast<std::int64_t>(c.dos.threshold);
  } else {
    dos["threshold"] = c.dos.threshold;
  }
  json j{{"task_type", task_type_name(c.task_type)},
         {"payload", payload_json(c)},
         {"dos", std::move(dos)},
         {"trust", std::move(trust)}};
  if (with_submitter && !c.submitter.empty()) j["submitter"] = c.submitter;
  return j;
}

}  // namespace

TaskCapsule parse_capsule(std::string_view document) {
  Violations v;
  json doc = json::parse(document, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    v.add(ErrorCode::kMalformedDocument, "capsule is not a JSON object");
    v.raise();
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "task_type" && key != "payload" && key != "dos" && key != "trust" &&
        key != "submitter") {
      v.add(ErrorCode::kMalformedDocument, "unknown field '" + key + "'");
    }
  }
  for (auto key : {"task_type", "payload", "dos"}) {
    if (!doc.contains(key)) v.add(ErrorCode::kMalformedDocument, std::string("missing field '") + key + "'");
  }
  TaskCapsule c;
  std::optional<TaskType> type;
  if (doc.contains("task_type")) {
    if (doc["task_type"].is_string()) type = parse_task_type(doc["task_type"].get<std::string>());
    if (!type) v.add(ErrorCode::kUnknownTaskType, "task_type must be search, qbe or classify");
  }
  if (doc.contains("submitter")) {
    if (doc["submitter"].is_string()) {
      c.submitter = doc["submitter"].get<std::string>();
    } else {
      v.add(ErrorCode::kMalformedDocument, "submitter must be a string");
    }
  }
  if (doc.contains("trust")) c.trust = parse_trust(doc["trust"], v);
  if (type) {
    c.task_type = *type;
    if (doc.contains("payload")) {
      const auto& p = doc["payload"];
      if (!p.is_object()) {
        v.add(ErrorCode::kPayloadMismatch, "payload must be an object");
      } else if (*type == TaskType::kSearch) {
        c.payload = parse_search(p, v);
      } else if (*type == TaskType::kQbe) {
        c.payload = parse_qbe(p, v);
      } else {
        c.payload = parse_classify(p, v);
      }
    }
    if (doc.contains("dos")) c.dos = parse_dos(doc["dos"], *type, v);
  }
  if (!v.items.empty()) v.raise();
  return c;
}

std::string serialize_capsule(const TaskCapsule& capsule) {
  return capsule_json(capsule, true).dump();
}

std::string fingerprint(const TaskCapsule& capsule) {
  return crypto::sha256_hex(capsule_json(capsule, false).dump());
}

bool check_trust(const TrustConstraints& constraints, const DatasetId& asset,
                 const Catalog& catalog, const ProvenanceGraph& graph) {
  return catalog.satisfies(constraints, asset, graph);
}

}  // namespace station
