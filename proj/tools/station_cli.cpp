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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "station/common.hpp"
#include "station/crypto.hpp"

namespace {

using json = nlohmann::json;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// "@path" reads a file; anything else is taken literally.
std::string literal_or_file(const std::string& v) {
  return !v.empty() && v[0] == '@' ? read_file(v.substr(1)) : v;
}

std::string url_encode(const std::string& s) {
  std::string out;
  const char* hex = "0123456789ABCDEF";
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

class Remote {
 public:
  Remote() : client_(env_or("STATION_URL", "http://127.0.0.1:8080")) {
    auto identity = env_or("STATION_IDENTITY", "");
    if (identity.empty()) throw std::runtime_error("STATION_IDENTITY is not set");
    client_.set_bearer_token_auth(identity);
    client_.set_read_timeout(120, 0);
  }

  int get(const std::string& path) { return report(client_.Get(path)); }
  int del(const std::string& path) { return report(client_.Delete(path)); }
  int post(const std::string& path, const std::string& body) {
    return report(client_.Post(path, body, "application/json"));
  }
  int post_form(const std::string& path, const httplib::MultipartFormDataItems& items) {
    return report(client_.Post(path, items));
  }
  int put_form(const std::string& path, const httplib::MultipartFormDataItems& items) {
    return report(client_.Put(path, items));
  }

 private:
  static int report(const httplib::Result& res) {
    if (!res) {
      std::cerr << "station: request failed: " << httplib::to_string(res.error()) << '\n';
      return 2;
    }
    bool ok = res->status >= 200 && res->status < 300;
    (ok ? std::cout : std::cerr) << res->body << (res->body.empty() || res->body.back() == '\n' ? "" : "\n");
    return ok ? 0 : 1;
  }

  httplib::Client client_;
};

std::string signing_key(const std::string& key_file) {
  auto key = key_file.empty() ? env_or("STATION_SIGNING_KEY", "") : station::trim(read_file(key_file));
  if (key.size() != 128) {
    throw std::runtime_error("a 128-hex-char signing key is required (--key-file or STATION_SIGNING_KEY)");
  }
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data station client. Reads the bearer secret from STATION_IDENTITY and the base URL "
               "from STATION_URL (default http://127.0.0.1:8080)."};
  app.name("station");
  app.require_subcommand(1);
  int rc = 0;

  auto* keygen = app.add_subcommand("keygen", "Print a fresh contributor key pair");

  std::vector<std::string> files, names;
  std::string policy, metadata, key_file;
  bool encrypted = false;
  auto* upload = app.add_subcommand("upload", "Sign and upload one or more CSV files");
  upload->add_option("files", files, "CSV files")->required()->check(CLI::ExistingFile);
  upload->add_option("--name", names, "Dataset name per file (default: file stem)");
  upload->add_option("--policy", policy, "Access policy JSON, or @file");
  upload->add_option("--metadata", metadata, "Profile seed JSON, or @file");
  upload->add_flag("--encrypted", encrypted, "Store the files as opaque encrypted blobs");
  upload->add_option("--key-file", key_file, "Signing key file (default: STATION_SIGNING_KEY)");

  std::string id, file;
  auto* update = app.add_subcommand("update", "Replace a dataset with a new signed version");
  update->add_option("id", id, "Dataset id")->required();
  update->add_option("file", file, "CSV file")->required()->check(CLI::ExistingFile);
  update->add_option("--key-file", key_file, "Signing key file (default: STATION_SIGNING_KEY)");

  auto* del = app.add_subcommand("delete", "Delete a dataset and everything derived from it");
  del->add_option("id", id, "Dataset id")->required();

  auto* capsule = app.add_subcommand("capsule", "Submit a task capsule");
  capsule->add_option("file", file, "Capsule JSON document")->required()->check(CLI::ExistingFile);

  std::string sub_id;
  auto* status = app.add_subcommand("status", "Show one submission, or all of yours");
  status->add_option("id", sub_id, "Submission id");

  std::vector<std::string> tokens;
  auto* result = app.add_subcommand("result", "Fetch a sealed result");
  result->add_option("id", id, "Result id")->required();
  result->add_option("--token", tokens, "Capability token (repeatable)");

  std::vector<std::string> row;
  auto* predict = app.add_subcommand("predict", "Predict a label with a released model");
  predict->add_option("model", id, "Model id")->required();
  predict->add_option("--row", row, "Feature as column=value (repeatable)")->required();

  std::string keyword;
  std::vector<std::string> creators;
  bool require_why = false;
  auto* search = app.add_subcommand("search", "Search the catalog");
  search->add_option("--keyword", keyword, "Keyword");
  search->add_option("--creator", creators, "Allowed creator (repeatable)");
  search->add_flag("--require-why", require_why, "Only assets with a why profile");

  auto* requests = app.add_subcommand("requests", "List access requests you made or must decide");

  std::string task_type = "qbe";
  auto* request = app.add_subcommand("request", "Ask a dataset owner for access");
  request->add_option("dataset", id, "Dataset id")->required();
  request->add_option("--task-type", task_type, "search, qbe or classify")->capture_default_str();

  bool deny = false;
  std::optional<std::int64_t> expiry;
  std::optional<std::uint32_t> uses;
  auto* approve = app.add_subcommand("approve", "Decide an access request on your dataset");
  approve->add_option("request", id, "Request id")->required();
  approve->add_flag("--deny", deny, "Deny instead of approving");
  approve->add_option("--expiry", expiry, "Token expiry (unix seconds)");
  approve->add_option("--uses", uses, "Token use limit");

  std::string token;
  std::vector<std::string> datasets;
  auto* verify = app.add_subcommand("verify", "Verify and consume a capability token");
  verify->add_option("token", token, "Token")->required();
  verify->add_option("--dataset", datasets, "Dataset the token must cover (repeatable)");

  auto* tasks = app.add_subcommand("tasks", "List human tasks open to you");
  auto* claim = app.add_subcommand("claim", "Claim a human task");
  claim->add_option("id", id, "Task id")->required();

  std::optional<std::size_t> alternative;
  std::string text;
  auto* answer = app.add_subcommand("answer", "Answer a claimed task");
  answer->add_option("id", id, "Task id")->required();
  auto* alt_opt = answer->add_option("--alternative", alternative, "Chosen join alternative");
  answer->add_option("--text", text, "Why-profile text")->excludes(alt_opt);

  auto* ledger = app.add_subcommand("ledger", "Show your credit balance");
  auto* audit = app.add_subcommand("audit", "Print the audit log (station owner only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (keygen->parsed()) {
      auto kp = station::crypto::generate_keypair();
      std::cout << "public_key = " << kp.public_key << "\nsecret_key = " << kp.secret_key << '\n';
      return 0;
    }
    Remote remote;
    if (upload->parsed()) {
      if (!names.empty() && names.size() != files.size()) {
        throw std::runtime_error("--name must be given once per file");
      }
      auto key = signing_key(key_file);
      httplib::MultipartFormDataItems items;
      for (std::size_t i = 0; i < files.size(); ++i) {
        auto content = read_file(files[i]);
        auto name = names.empty() ? std::filesystem::path(files[i]).stem().string() : names[i];
        items.push_back({"csv", content, name + ".csv", "text/csv"});
        items.push_back({"signature", station::crypto::sign_content(key, content), "", ""});
        items.push_back({"name", name, "", ""});
      }
      if (!policy.empty()) items.push_back({"policy", literal_or_file(policy), "", ""});
      if (!metadata.empty()) items.push_back({"metadata", literal_or_file(metadata), "", ""});
      if (encrypted) items.push_back({"encrypted", "true", "", ""});
      rc = remote.post_form("/datasets", items);
    } else if (update->parsed()) {
      auto content = read_file(file);
      httplib::MultipartFormDataItems items{
          {"csv", content, std::filesystem::path(file).filename().string(), "text/csv"},
          {"signature", station::crypto::sign_content(signing_key(key_file), content), "", ""}};
      rc = remote.put_form("/datasets/" + url_encode(id), items);
    } else if (del->parsed()) {
      rc = remote.del("/datasets/" + url_encode(id));
    } else if (capsule->parsed()) {
      rc = remote.post("/capsules", read_file(file));
    } else if (status->parsed()) {
      rc = remote.get(sub_id.empty() ? "/capsules" : "/capsules/" + url_encode(sub_id));
    } else if (result->parsed()) {
      std::string path = "/results/" + url_encode(id);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        path += (i ? "&token=" : "?token=") + url_encode(tokens[i]);
      }
      rc = remote.get(path);
    } else if (predict->parsed()) {
      json r = json::object();
      for (const auto& kv : row) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("--row expects column=value");
        r[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      rc = remote.post("/models/" + url_encode(id) + "/predict", json{{"row", r}}.dump());
    } else if (search->parsed()) {
      std::vector<std::string> q;
      if (!keyword.empty()) q.push_back("keyword=" + url_encode(keyword));
      for (const auto& c : creators) q.push_back("creator=" + url_encode(c));
      if (require_why) q.push_back("require_why_profile=true");
      std::string path = "/catalog/search";
      for (std::size_t i = 0; i < q.size(); ++i) path += (i ? "&" : "?") + q[i];
      rc = remote.get(path);
    } else if (requests->parsed()) {
      rc = remote.get("/access-requests");
    } else if (request->parsed()) {
      rc = remote.post("/access-requests", json{{"dataset", id}, {"task_type", task_type}}.dump());
    } else if (approve->parsed()) {
      json body = {{"approve", !deny}};
      if (expiry) body["expiry"] = *expiry;
      if (uses) body["uses"] = *uses;
      rc = remote.post("/access-requests/" + url_encode(id) + "/decision", body.dump());
    } else if (verify->parsed()) {
      rc = remote.post("/tokens/verify", json{{"token", token}, {"datasets", datasets}}.dump());
    } else if (tasks->parsed()) {
      rc = remote.get("/tasks");
    } else if (claim->parsed()) {
      rc = remote.post("/tasks/" + url_encode(id) + "/claim", "{}");
    } else if (answer->parsed()) {
      json body = json::object();
      if (alternative) body["alternative"] = *alternative;
      if (!text.empty()) body["text"] = text;
      rc = remote.post("/tasks/" + url_encode(id) + "/answer", body.dump());
    } else if (ledger->parsed()) {
      rc = remote.get("/ledger/me");
    } else if (audit->parsed()) {
      rc = remote.get("/audit");
    }
  } catch (const std::exception& e) {
    std::cerr << "station: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
