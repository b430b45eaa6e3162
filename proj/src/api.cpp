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

#include "station/api.hpp"

#include <filesystem>

#include "json.hpp"
#include "station/crypto.hpp"

namespace station {

using json = nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnauthenticated: return 401;
    case ErrorCode::kInsufficientEscrowFunds: return 402;
    case ErrorCode::kNotOwner:
    case ErrorCode::kForbidden:
    case ErrorCode::kAccessDenied:
    case ErrorCode::kSelfClaim:
    case ErrorCode::kNotClaimant:
    case ErrorCode::kGovernanceViolation:
    case ErrorCode::kBudgetExhausted: return 403;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kAlreadyDecided:
    case ErrorCode::kAlreadyClaimed:
    case ErrorCode::kTaskNotClaimed:
    case ErrorCode::kTaskClosed: return 409;
    case ErrorCode::kRevoked: return 410;
    case ErrorCode::kIoError: return 500;
    default: return 400;
  }
}

namespace {

ApiResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

ApiResponse error_response(const Error& e) {
  return json_response(http_status(e.code()), {{"error", std::string(e.name())},
                                               {"message", e.what()},
                                               {"details", e.details()}});
}

json parse_body(const ApiRequest& req) {
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, "request body must be a JSON object");
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad value for ") + key);
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing string field ") + key);
  }
  return j.at(key).get<std::string>();
}

DatasetId parse_id(const std::string& text) {
  auto id = DatasetId::parse(text);
  if (!id) throw Error(ErrorCode::kNotFound, "no asset " + text);
  return *id;
}

std::optional<std::string> query_value(const ApiRequest& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  return it->second;
}

json ids_json(const std::set<DatasetId>& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.hex());
  return out;
}

json submission_json(const Submission& s) {
  json j = {{"id", s.id},
            {"fingerprint", s.fingerprint},
            {"status", std::string(submission_status_name(s.status))},
            {"task_ids", s.task_ids},
            {"best_dos", s.best_dos},
            {"runs", s.runs},
            {"note", s.note}};
  j["result_id"] = s.result_id ? json(*s.result_id) : json(nullptr);
  return j;
}

json request_json(const AccessRequest& r) {
  json j = {{"id", r.id},
            {"requester", r.requester},
            {"dataset", r.dataset.hex()},
            {"capsule_fingerprint", r.capsule_fingerprint},
            {"status", std::string(request_status_name(r.status))}};
  if (r.decided_by) j["decided_by"] = *r.decided_by;
  if (r.token) j["token"] = *r.token;
  return j;
}

json task_json(const HumanTask& t) {
  json j = {{"id", t.id},
            {"kind", std::string(task_kind_name(t.kind))},
            {"description", t.description},
            {"price", t.price},
            {"status", std::string(task_status_name(t.status))},
            {"requester", t.requester},
            {"alternatives", t.alternatives.size()},
            {"created_at", t.created_at}};
  if (t.claimant) j["claimant"] = *t.claimant;
  if (t.dataset) j["dataset"] = t.dataset->hex();
  return j;
}

AccessPolicy policy_from(const std::string& text) {
  UploadPolicy p;
  AccessPolicy out;
  out.discoverable = p.discoverable;
  out.access = p.access;
  out.derivation_allowed = p.derivation_allowed;
  if (trim(text).empty()) return out;
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, "policy must be a JSON object");
  }
  std::vector<std::string> problems;
  for (const auto& [key, _] : j.items()) {
    if (key != "discoverable" && key != "access" && key != "derivation_allowed" &&
        key != "allowed_task_types" && key != "dp") {
      problems.push_back("unknown policy key '" + key + "'");
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, "invalid policy", problems);
  out.discoverable = field(j, "discoverable", out.discoverable);
  out.derivation_allowed = field(j, "derivation_allowed", out.derivation_allowed);
  if (j.contains("access")) {
    auto mode = parse_access_mode(field<std::string>(j, "access", ""));
    if (!mode) throw Error(ErrorCode::kInvalidArgument, "access must be open, brokered or closed");
    out.access = *mode;
  }
  for (const auto& name : field(j, "allowed_task_types", std::vector<std::string>{})) {
    auto t = parse_task_type(name);
    if (!t) throw Error(ErrorCode::kUnknownTaskType, "unknown task type '" + name + "'");
    out.allowed_task_types.insert(*t);
  }
  if (j.contains("dp")) {
    const auto& dp = j.at("dp");
    if (!dp.is_object()) throw Error(ErrorCode::kInvalidArgument, "dp must be an object");
    out.dp_filter = DpFilter{field(dp, "epsilon_total", 1.0), field(dp, "epsilon_per_query", 0.1)};
  }
  return out;
}

ProfileSeed metadata_from(const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, "metadata must be a JSON object");
  }
  ProfileSeed seed;
  if (j.contains("why")) seed.why = field<std::string>(j, "why", "");
  if (j.contains("schema")) {
    std::vector<ColumnSpec> schema;
    for (const auto& c : j.at("schema")) {
      auto dtype = parse_dtype(field<std::string>(c, "dtype", "text"));
      if (!dtype) throw Error(ErrorCode::kInvalidArgument, "unknown dtype");
      schema.push_back({required_string(c, "name"), *dtype});
    }
    seed.schema = std::move(schema);
  }
  return seed;
}

std::vector<std::string> parts_named(const ApiRequest& req, const std::string& name) {
  std::vector<std::string> out;
  for (const auto& p : req.parts) {
    if (p.name == name) out.push_back(p.content);
  }
  return out;
}

std::vector<const FormPart*> file_parts(const ApiRequest& req) {
  std::vector<const FormPart*> out;
  for (const auto& p : req.parts) {
    if (p.name == "csv") out.push_back(&p);
  }
  return out;
}

class Handler {
 public:
  Handler(Station& station, const ApiRequest& req, const UserIdentity& who)
      : station_(station), req_(req), who_(who), me_(who.principal()) {}

  void require(Role role) const {
    if (!who_.has(role)) {
      throw Error(ErrorCode::kForbidden,
                  "requires the " + std::string(role_name(role)) + " role");
    }
  }

  // POST /datasets: one or more csv parts, each with a signature part in
  // the same order; the policy, metadata and encrypted parts apply to all.
  ApiResponse upload() {
    require(Role::kContributor);
    auto files = file_parts(req_);
    auto signatures = parts_named(req_, "signature");
    auto names = parts_named(req_, "name");
    if (files.empty()) throw Error(ErrorCode::kInvalidArgument, "missing csv part");
    if (signatures.size() != files.size()) {
      throw Error(ErrorCode::kInvalidArgument, "each csv part needs one signature part");
    }
    if (!names.empty() && names.size() != files.size()) {
      throw Error(ErrorCode::kInvalidArgument, "name parts must match csv parts one to one");
    }
    auto policies = parts_named(req_, "policy");
    auto access = policy_from(policies.empty() ? "" : policies.front());
    auto encrypted_part = parts_named(req_, "encrypted");
    bool encrypted = !encrypted_part.empty() && trim(encrypted_part.front()) == "true";
    auto meta_part = parts_named(req_, "metadata");
    std::optional<ProfileSeed> metadata;
    if (!meta_part.empty()) metadata = metadata_from(meta_part.front());

    std::vector<IngestRequest> batch;
    for (std::size_t i = 0; i < files.size(); ++i) {
      IngestRequest r;
      r.content = files[i]->content;
      r.signature = trim(signatures[i]);
      r.owner_key = who_.key;
      r.encrypted = encrypted;
      r.metadata = metadata;
      r.name = names.empty() ? std::filesystem::path(files[i]->filename).stem().string()
                             : trim(names[i]);
      // Whole batch is checked before the first ingest.
      if (!crypto::verify_content(r.owner_key, r.signature, r.content)) {
        throw Error(ErrorCode::kSignatureInvalid, "signature does not verify",
                    {"part " + std::to_string(i) + (r.name.empty() ? "" : " (" + r.name + ")")});
      }
      if (!encrypted) parse_csv(r.content);
      batch.push_back(std::move(r));
    }
    UploadPolicy policy{access.discoverable, access.access, access.derivation_allowed,
                        access.allowed_task_types, access.dp_filter};
    json ids = json::array();
    for (const auto& r : batch) ids.push_back(station_.upload(me_, r, policy).hex());
    json body = {{"ids", ids}};
    if (ids.size() == 1) body["id"] = ids[0];
    return json_response(201, body);
  }

  ApiResponse update(const std::string& id) {
    require(Role::kContributor);
    auto files = file_parts(req_);
    auto signatures = parts_named(req_, "signature");
    if (files.size() != 1 || signatures.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "expected one csv part and one signature part");
    }
    auto dataset = parse_id(id);
    int version = station_.update(me_, dataset, files[0]->content, trim(signatures[0]));
    return json_response(200, {{"id", dataset.hex()}, {"version", version}});
  }

  ApiResponse forget(const std::string& id) {
    require(Role::kContributor);
    auto deleted = station_.forget(me_, parse_id(id));
    return json_response(200, {{"deleted", ids_json(deleted)}});
  }

  ApiResponse submit() {
    require(Role::kUser);
    auto capsule = parse_capsule(req_.body);
    auto s = station_.submit(me_, capsule);
    return json_response(202, submission_json(s));
  }

  ApiResponse submissions() {
    require(Role::kUser);
    json out = json::array();
    for (const auto& s : station_.submissions_of(me_)) out.push_back(submission_json(s));
    return json_response(200, {{"submissions", out}});
  }

  ApiResponse submission(const std::string& id) {
    require(Role::kUser);
    return json_response(200, submission_json(station_.submission(me_, id)));
  }

  ApiResponse result(const std::string& id) {
    std::vector<std::string> tokens;
    auto [lo, hi] = req_.query.equal_range("token");
    for (auto it = lo; it != hi; ++it) {
      for (const auto& t : split(it->second, ',')) {
        if (!trim(t).empty()) tokens.push_back(trim(t));
      }
    }
    auto out = station_.release(me_, id, tokens);
    if (out.released) return {200, out.content.media_type, out.content.body};
    json denials = json::array();
    std::vector<std::string> details;
    bool revoked = false;
    for (const auto& d : out.denials) {
      json j = {{"dataset", d.dataset.hex()}, {"reason", d.reason}};
      if (d.request_id) j["request_id"] = *d.request_id;
      denials.push_back(j);
      details.push_back(d.dataset.hex() + ": " + d.reason);
      revoked = revoked || d.reason == "Revoked";
    }
    auto first = out.denials.empty() ? std::string("AccessDenied") : out.denials.front().reason;
    return json_response(revoked ? 410 : 403, {{"error", revoked ? "Revoked" : first},
                                               {"message", "result " + id + " stays sealed"},
                                               {"details", details},
                                               {"denials", denials}});
  }

  ApiResponse predict(const std::string& id) {
    auto body = parse_body(req_);
    if (!body.contains("row") || !body.at("row").is_object()) {
      throw Error(ErrorCode::kInvalidArgument, "body needs a row object");
    }
    std::map<std::string, std::string> row;
    for (const auto& [k, v] : body.at("row").items()) {
      row[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    auto label = station_.predict(me_, parse_id(id), row);
    return json_response(200, {{"model", id}, {"label", label}});
  }

  ApiResponse search() {
    CatalogQuery q;
    q.keyword = query_value(req_, "keyword");
    auto [lo, hi] = req_.query.equal_range("creator");
    if (lo != hi) {
      std::set<std::string> creators;
      for (auto it = lo; it != hi; ++it) creators.insert(it->second);
      q.trust.creators_allow = creators;
    }
    if (auto v = query_value(req_, "created_after")) {
      auto n = parse_number(*v);
      if (!n) throw Error(ErrorCode::kInvalidArgument, "created_after must be a timestamp");
      q.trust.created_after = static_cast<Timestamp>(*n);
    }
    if (auto v = query_value(req_, "max_provenance_depth")) {
      auto n = parse_number(*v);
      if (!n) throw Error(ErrorCode::kInvalidArgument, "max_provenance_depth must be an integer");
      q.trust.max_provenance_depth = static_cast<int>(*n);
    }
    q.trust.require_why_profile = query_value(req_, "require_why_profile") == "true";
    json out = json::array();
    for (const auto& p : station_.search_catalog(me_, q)) out.push_back(json::parse(public_record(p)));
    return json_response(200, {{"results", out}});
  }

  ApiResponse access_requests() {
    json out = json::array();
    for (const auto& r : station_.access_requests(me_)) out.push_back(request_json(r));
    return json_response(200, {{"requests", out}});
  }

  ApiResponse request_access() {
    require(Role::kUser);
    auto body = parse_body(req_);
    auto type = parse_task_type(field<std::string>(body, "task_type", "qbe"));
    if (!type) throw Error(ErrorCode::kUnknownTaskType, "unknown task type");
    auto verdict = station_.request_access(me_, parse_id(required_string(body, "dataset")), *type,
                                           field<std::string>(body, "capsule_fingerprint", ""));
    const char* kind = verdict.kind == AccessVerdict::Kind::kAllow   ? "Allow"
                       : verdict.kind == AccessVerdict::Kind::kDeny ? "Deny"
                                                                     : "NeedsApproval";
    json j = {{"verdict", kind}};
    if (verdict.request_id) j["request_id"] = *verdict.request_id;
    return json_response(verdict.request_id ? 201 : 200, j);
  }

  ApiResponse decide(const std::string& id) {
    require(Role::kContributor);
    auto body = parse_body(req_);
    if (!body.contains("approve") || !body.at("approve").is_boolean()) {
      throw Error(ErrorCode::kInvalidArgument, "body needs a boolean approve field");
    }
    TokenGrant grant;
    if (body.contains("expiry")) grant.expiry = field<Timestamp>(body, "expiry", 0);
    if (body.contains("uses")) grant.uses = field<std::uint32_t>(body, "uses", 1);
    auto decision = station_.decide(me_, id, body.at("approve").get<bool>(), grant);
    auto r = decision.request;
    r.token.reset();
    return json_response(200, {{"request", request_json(r)}});
  }

  ApiResponse verify() {
    auto body = parse_body(req_);
    std::set<DatasetId> needed;
    for (const auto& id : field(body, "datasets", std::vector<std::string>{})) needed.insert(parse_id(id));
    auto verdict = station_.verify_token(required_string(body, "token"), me_, needed);
    json j = {{"allowed", verdict.allowed}};
    if (!verdict.allowed) j["reason"] = std::string(deny_reason_name(verdict.reason));
    if (verdict.token) j["datasets"] = ids_json(verdict.token->dataset_ids);
    return json_response(200, j);
  }

  ApiResponse tasks() {
    json out = json::array();
    for (const auto& t : station_.tasks_for(me_)) out.push_back(task_json(t));
    return json_response(200, {{"tasks", out}});
  }

  ApiResponse claim(const std::string& id) {
    return json_response(200, task_json(station_.claim(me_, id)));
  }

  ApiResponse answer(const std::string& id) {
    auto body = parse_body(req_);
    AnswerContent content;
    if (body.contains("alternative")) {
      auto alt = body.at("alternative");
      if (!alt.is_number_integer() || alt.get<long long>() < 0) {
        throw Error(ErrorCode::kInvalidAlternative, "alternative must be a non-negative integer");
      }
      content.alternative = alt.get<std::size_t>();
    }
    content.text = field<std::string>(body, "text", "");
    auto out = station_.answer(me_, id, content);
    json resumed = json::array();
    for (const auto& s : out.resumed) {
      resumed.push_back({{"id", s.id}, {"status", std::string(submission_status_name(s.status))}});
    }
    return json_response(200, {{"task", task_json(out.task)}, {"resumed", resumed}});
  }

  ApiResponse ledger() {
    return json_response(200, {{"user", who_.user}, {"balance", station_.balance(me_)}});
  }

  ApiResponse audit() {
    require(Role::kOwner);
    return {200, "application/x-ndjson", station_.audit_log()};
  }

 private:
  Station& station_;
  const ApiRequest& req_;
  const UserIdentity& who_;
  Principal me_;
};

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& s : split(path, '/')) {
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

}  // namespace

std::vector<std::string> Api::routes() {
  return {"POST /datasets",
          "PUT /datasets/{id}",
          "DELETE /datasets/{id}",
          "POST /capsules",
          "GET /capsules",
          "GET /capsules/{id}",
          "GET /results/{id}",
          "POST /models/{id}/predict",
          "GET /catalog/search",
          "GET /access-requests",
          "POST /access-requests",
          "POST /access-requests/{id}/decision",
          "POST /tokens/verify",
          "GET /tasks",
          "POST /tasks/{id}/claim",
          "POST /tasks/{id}/answer",
          "GET /ledger/me",
          "GET /audit"};
}

ApiResponse Api::handle(const ApiRequest& req) {
  try {
    const std::string prefix = "Bearer ";
    if (req.authorization.rfind(prefix, 0) != 0) {
      throw Error(ErrorCode::kUnauthenticated, "missing bearer credentials");
    }
    auto who = station_.authenticate(trim(req.authorization.substr(prefix.size())));
    if (!who) throw Error(ErrorCode::kUnauthenticated, "unknown credentials");

    Handler h(station_, req, *who);
    auto seg = segments(req.path);
    const auto& m = req.method;
    auto is = [&](std::initializer_list<const char*> shape) {
      if (seg.size() != shape.size()) return false;
      std::size_t i = 0;
      for (const char* s : shape) {
        if (std::string_view(s) != "{id}" && seg[i] != s) return false;
        ++i;
      }
      return true;
    };

    if (m == "POST" && is({"datasets"})) return h.upload();
    if (m == "PUT" && is({"datasets", "{id}"})) return h.update(seg[1]);
    if (m == "DELETE" && is({"datasets", "{id}"})) return h.forget(seg[1]);
    if (m == "POST" && is({"capsules"})) return h.submit();
    if (m == "GET" && is({"capsules"})) return h.submissions();
    if (m == "GET" && is({"capsules", "{id}"})) return h.submission(seg[1]);
    if (m == "GET" && is({"results", "{id}"})) return h.result(seg[1]);
    if (m == "POST" && is({"models", "{id}", "predict"})) return h.predict(seg[1]);
    if (m == "GET" && is({"catalog", "search"})) return h.search();
    if (m == "GET" && is({"access-requests"})) return h.access_requests();
    if (m == "POST" && is({"access-requests"})) return h.request_access();
    if (m == "POST" && is({"access-requests", "{id}", "decision"})) return h.decide(seg[1]);
    if (m == "POST" && is({"tokens", "verify"})) return h.verify();
    if (m == "GET" && is({"tasks"})) return h.tasks();
    if (m == "POST" && is({"tasks", "{id}", "claim"})) return h.claim(seg[1]);
    if (m == "POST" && is({"tasks", "{id}", "answer"})) return h.answer(seg[1]);
    if (m == "GET" && is({"ledger", "me"})) return h.ledger();
    if (m == "GET" && is({"audit"})) return h.audit();
    throw Error(ErrorCode::kNotFound, "no route " + m + " " + req.path);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::kIoError, e.what()));
  }
}

}  // namespace station
