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

#include "station/demo.hpp"

#include <fstream>
#include <sstream>

#include "station/crypto.hpp"
#include "station/station.hpp"

namespace station {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct DemoDataset {
  const char* file;
  const char* owner;
  AccessMode access;
  bool discoverable;
  bool dp;
};

// Ownership and policies of the demo corpus.
constexpr DemoDataset kCorpus[] = {
    {"deliveries.csv", "alice", AccessMode::kOpen, true, false},
    {"contacts.csv", "bob", AccessMode::kBrokered, true, false},
    {"employees.csv", "alice", AccessMode::kOpen, true, false},
    {"salaries.csv", "bob", AccessMode::kBrokered, true, false},
    {"cities.csv", "alice", AccessMode::kOpen, true, false},
    {"orders.csv", "alice", AccessMode::kOpen, true, false},
    {"shipments.csv", "alice", AccessMode::kOpen, true, false},
    {"flowers.csv", "alice", AccessMode::kOpen, true, false},
    {"survey.csv", "bob", AccessMode::kOpen, true, true},
    {"secret_accounts.csv", "bob", AccessMode::kClosed, false, false},
};

}  // namespace

DemoReport run_demo(const fs::path& workdir, const fs::path& data_dir,
                    const fs::path& capsule_path) {
  DemoReport report;
  auto step = [&](std::string name, std::string detail) {
    report.steps.push_back({std::move(name), std::move(detail)});
  };

  fs::create_directories(workdir / "store");
  {
    std::ofstream key(workdir / "station.key");
    key << crypto::sha256_hex("station demo token secret") << '\n';
  }
  StationConfig cfg;
  cfg.store_root = workdir / "store";
  cfg.key_file = workdir / "station.key";
  cfg.dp_seed = 7;
  cfg.id_seed = 11;
  cfg.clock_start = 1'760'000'000;
  std::map<std::string, crypto::KeyPair> keys;
  for (const char* name : {"alice", "bob"}) {
    keys[name] = crypto::keypair_from_label(name);
    cfg.users[name] = {name, {Role::kContributor}, keys[name].public_key,
                       std::string("secret-") + name, 0};
  }
  cfg.users["carol"] = {"carol", {Role::kUser}, "", "secret-carol", 100};
  cfg.users["dave"] = {"dave", {Role::kUser}, "", "secret-dave", 0};
  Station station(cfg);
  auto tick = [&] { station.manual_clock()->advance(60); };
  auto principal = [&](const std::string& name) { return cfg.users.at(name).principal(); };

  for (const auto& d : kCorpus) {
    auto content = slurp(data_dir / d.file);
    IngestRequest req;
    req.content = content;
    req.owner_key = keys.at(d.owner).public_key;
    req.signature = crypto::sign_content(keys.at(d.owner).secret_key, content);
    req.name = fs::path(d.file).stem().string();
    UploadPolicy pol;
    pol.access = d.access;
    pol.discoverable = d.discoverable;
    if (d.dp) pol.dp_filter = DpFilter{1.0, 0.1};
    auto id = station.upload(principal(d.owner), req, pol);
    step("upload", req.name + " " + id.hex() + " " + std::string(access_mode_name(d.access)));
    tick();
  }

  auto capsule = parse_capsule(slurp(capsule_path));
  auto carol = principal("carol");
  auto sub = station.submit(carol, capsule);
  step("capsule", sub.id + " " + std::string(submission_status_name(sub.status)));
  tick();
  if (sub.status != SubmissionStatus::kBlocked || sub.task_ids.size() != 1) {
    report.audit_log = station.audit_log();
    return report;
  }

  auto dave = principal("dave");
  auto task = station.claim(dave, sub.task_ids[0]);
  step("claim", task.id + " by dave");
  tick();
  auto answered = station.answer(dave, task.id, {0, ""});
  sub = station.submission(carol, sub.id);
  step("answer", task.id + " alternative 0; capsule " +
                     std::string(submission_status_name(sub.status)));
  tick();
  if (sub.status != SubmissionStatus::kSatisfied || !sub.result_id) {
    report.audit_log = station.audit_log();
    return report;
  }

  auto first = station.release(carol, *sub.result_id, {});
  std::string request_id;
  for (const auto& d : first.denials) {
    if (d.reason == "NeedsApproval" && d.request_id) request_id = *d.request_id;
  }
  step("release", "sealed, " + std::to_string(first.denials.size()) + " approval(s) pending");
  tick();
  if (first.released || request_id.empty()) {
    report.audit_log = station.audit_log();
    return report;
  }

  auto decision = station.decide(principal("bob"), request_id, true, TokenGrant{std::nullopt, 1});
  step("approve", request_id + " by bob, one-time token");
  tick();

  auto second = station.release(carol, *sub.result_id, {*decision.token});
  step("release", second.released ? "released" : "sealed");
  tick();
  auto third = station.release(carol, *sub.result_id, {*decision.token});
  step("release", third.released ? "released"
                                 : "sealed: " + (third.denials.empty() ? std::string("?")
                                                                        : third.denials[0].reason));
  step("ledger", "carol " + std::to_string(station.balance(carol)) + ", dave " +
                     std::to_string(station.balance(dave)));

  report.released_body = second.content.body;
  report.audit_log = station.audit_log();
  report.completed = second.released && !third.released &&
                     station.balance(dave) == cfg.prices.join_disambiguation;
  return report;
}

}  // namespace station
