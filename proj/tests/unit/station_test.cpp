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

#include "station/station.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "station/demo.hpp"
#include "support/station_harness.hpp"

namespace station {
namespace {

using testing::StationHarness;
using testing::TempDir;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

// ---------------------------------------------------------------------------
// Configuration

constexpr const char* kMinimalConfig =
    "# comment\n"
    "store_root = store\n"
    "key_file = /abs/station.key\n"
    "discovery.join_threshold = 0.6\n"
    "market.price.join_disambiguation = 12\n"
    "governance.retention_seconds = 3600\n"
    "clock.start = 42\n"
    "user.carol.roles = user\n"
    "user.carol.secret = xyz\n"
    "user.carol.credit = 5\n";

TEST(ConfigTest, ParsesKeysAndResolvesRelativePaths) {
  auto cfg = parse_config(kMinimalConfig, "/etc/station");
  EXPECT_EQ(cfg.store_root, std::filesystem::path("/etc/station/store"));
  EXPECT_EQ(cfg.key_file, std::filesystem::path("/abs/station.key"));
  EXPECT_EQ(cfg.discovery.join_threshold, 0.6);
  EXPECT_EQ(cfg.discovery.w_coverage, 0.4);
  EXPECT_EQ(cfg.blend.match_fraction, 0.8);
  EXPECT_EQ(cfg.prices.join_disambiguation, 12);
  EXPECT_EQ(cfg.prices.why_profile_request, 50);
  EXPECT_EQ(cfg.claim_ttl_seconds, 86400);
  EXPECT_EQ(cfg.retention_seconds, 3600);
  EXPECT_EQ(cfg.clock_start, 42);
  EXPECT_EQ(cfg.listen_host, "127.0.0.1");
  const auto& carol = cfg.users.at("carol");
  EXPECT_TRUE(carol.has(Role::kUser));
  EXPECT_FALSE(carol.has(Role::kOwner));
  EXPECT_EQ(carol.credit, 5);
}

TEST(ConfigTest, ListsEveryProblem) {
  try {
    parse_config("store_root = s\nkey_file = k\nbogus = 1\nblend.tie_tolerance = x\nnot a pair\n"
                 "user.u.roles = wizard\nuser.u.secret = a\n",
                 "/");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_EQ(e.details().size(), 4u);
  }
  EXPECT_EQ(code_of([] { parse_config("store_root = s\nkey_file = k\nblend.match_fraction = 2\n", "/"); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] {
              parse_config("store_root = s\nkey_file = k\nuser.a.roles = user\nuser.a.secret = x\n"
                           "user.b.roles = user\nuser.b.secret = x\n",
                           "/");
            }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] {
              parse_config("store_root = s\nkey_file = k\nuser.a.roles = contributor\nuser.a.secret = x\n",
                           "/");
            }),
            ErrorCode::kInvalidConfig);
}

TEST(ConfigTest, ShippedExampleParses) {
  std::ifstream in(std::string(STATION_SOURCE_DIR) + "/config/station.conf");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), std::string(STATION_SOURCE_DIR) + "/config");
  EXPECT_EQ(cfg.users.size(), 3u);
  EXPECT_EQ(read_pii_dictionary(*cfg.pii_dictionary), default_pii_dictionary());
}

TEST(ConfigTest, KeyFileRoundTripAndMissingPaths) {
  TempDir dir;
  auto key = dir.path() / "k";
  write_key_file(key);
  EXPECT_EQ(read_key_file(key).size(), 32u);
  std::ofstream(dir.path() / "bad") << "abc\n";
  EXPECT_EQ(code_of([&] { read_key_file(dir.path() / "bad"); }), ErrorCode::kInvalidConfig);
  std::ofstream(dir.path() / "station.conf") << "store_root = nowhere\nkey_file = k\n";
  EXPECT_EQ(code_of([&] { load_config(dir.path() / "station.conf"); }), ErrorCode::kInvalidConfig);
}

// ---------------------------------------------------------------------------
// Station wiring

TEST(StationTest, AuthenticatesBySecret) {
  StationHarness h;
  EXPECT_EQ(h.station->authenticate("s-carol")->user, "carol");
  EXPECT_FALSE(h.station->authenticate("s-caro"));
  EXPECT_FALSE(h.station->authenticate(""));
  EXPECT_EQ(h.station->balance(h.user("carol")), 1000);
}

TEST(StationTest, UploadsMustBeSignedByTheCaller) {
  StationHarness h;
  auto req = h.alice.upload("a,b\n1,2\n", "t");
  EXPECT_EQ(code_of([&] { h.station->upload(h.bob.principal(), req, {}); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { h.station->upload(h.user("carol"), req, {}); }), ErrorCode::kForbidden);
  req.content += "3,4\n";
  EXPECT_EQ(code_of([&] { h.station->upload(h.alice.principal(), req, {}); }),
            ErrorCode::kSignatureInvalid);
}

TEST(StationTest, CatalogSearchHidesUndiscoverableDatasets) {
  StationHarness h;
  h.add(h.alice, "name,city\nAnn,Oslo\n", "visible");
  auto hidden = h.add(h.bob, "name,city\nBo,Rome\n", "hidden", AccessMode::kClosed);
  auto names = [&](const Principal& who) {
    std::set<std::string> out;
    for (const auto& p : h.station->search_catalog(who, {})) out.insert(p.name);
    return out;
  };
  EXPECT_EQ(names(h.user("carol")), std::set<std::string>{"visible"});
  EXPECT_EQ(names(h.bob.principal()), (std::set<std::string>{"hidden", "visible"}));
  CatalogQuery q;
  q.keyword = "visible";
  EXPECT_EQ(h.station->search_catalog(h.user("carol"), q).size(), 1u);
  EXPECT_TRUE(h.station->catalog().contains(hidden));
}

TEST(StationTest, ForgetIsOwnerOnlyAndCascades) {
  StationHarness h;
  auto id = h.add(h.alice, "name,city\nAnn,Oslo\n", "people");
  TaskCapsule c;
  c.task_type = TaskType::kQbe;
  c.payload = QbePayload{{"name", "city"}, {{"Ann", "Oslo"}}};
  c.dos = {DosMetric::kCoverage, 1.0};
  auto sub = h.station->submit(h.user("carol"), c);
  ASSERT_EQ(sub.status, SubmissionStatus::kSatisfied);
  auto product = *h.station->executor().result(*sub.result_id)->product;

  EXPECT_EQ(code_of([&] { h.station->forget(h.bob.principal(), id); }), ErrorCode::kNotOwner);
  EXPECT_EQ(code_of([&] { h.station->forget(h.alice.principal(), product); }), ErrorCode::kNotOwner);
  auto gone = h.station->forget(h.alice.principal(), id);
  EXPECT_EQ(gone, (std::set<DatasetId>{id, product}));
  EXPECT_FALSE(h.station->catalog().contains(id));
  EXPECT_TRUE(h.station->store().tombstone(product).has_value());
  EXPECT_EQ(h.station->executor().cache().size(), 0u);
}

TEST(StationTest, RetentionDeletesOldDatasets) {
  StationHarness h([](StationConfig& c) { c.retention_seconds = 100; });
  auto old_id = h.add(h.alice, "a,b\n1,2\n", "old");
  h.tick(60);
  auto young = h.add(h.alice, "a,b\n3,4\n", "young");
  h.tick(50);
  EXPECT_EQ(h.station->enforce_retention(), std::set<DatasetId>{old_id});
  EXPECT_TRUE(h.station->store().contains(young));
}

TEST(StationTest, SubmissionsArePrivateToTheirUser) {
  StationHarness h;
  TaskCapsule c;
  c.task_type = TaskType::kSearch;
  c.payload = SearchPayload{{"nothing"}};
  c.dos = {DosMetric::kHits, 1};
  auto sub = h.station->submit(h.user("carol"), c);
  EXPECT_EQ(sub.status, SubmissionStatus::kUnsatisfied);
  EXPECT_EQ(h.station->submission(h.user("carol"), sub.id).id, sub.id);
  EXPECT_EQ(code_of([&] { h.station->submission(h.user("dave"), sub.id); }), ErrorCode::kNotFound);
  EXPECT_EQ(h.station->submissions_of(h.user("carol")).size(), 1u);
  EXPECT_TRUE(h.station->submissions_of(h.user("dave")).empty());
}

TEST(StationTest, RequesterSeesTokenOwnerDoesNot) {
  StationHarness h;
  auto id = h.add(h.bob, "name,city\nAnn,Oslo\n", "people", AccessMode::kBrokered);
  auto carol = h.user("carol");
  auto verdict = h.station->policy().evaluate_access(carol, id, TaskType::kQbe, "fp");
  ASSERT_TRUE(verdict.request_id);
  EXPECT_EQ(code_of([&] { h.station->decide(h.alice.principal(), *verdict.request_id, true, {}); }),
            ErrorCode::kNotOwner);
  h.station->decide(h.bob.principal(), *verdict.request_id, true, {});
  auto owner_view = h.station->access_requests(h.bob.principal());
  ASSERT_EQ(owner_view.size(), 1u);
  EXPECT_FALSE(owner_view[0].token);
  auto mine = h.station->access_requests(carol);
  ASSERT_EQ(mine.size(), 1u);
  ASSERT_TRUE(mine[0].token);
  EXPECT_TRUE(h.station->verify_token(*mine[0].token, carol, {id}).allowed);
  EXPECT_EQ(h.station->verify_token(*mine[0].token, h.user("dave"), {id}).reason,
            DenyReason::kWrongSubject);
}

TEST(DemoTest, CompletesAndIsDeterministic) {
  TempDir a, b;
  auto data = std::filesystem::path(STATION_SOURCE_DIR) / "data/demo";
  auto capsule = std::filesystem::path(STATION_SOURCE_DIR) / "docs/capsules/deliveries_qbe.json";
  auto first = run_demo(a.path() / "run", data, capsule);
  auto second = run_demo(b.path() / "run", data, capsule);
  EXPECT_TRUE(first.completed);
  EXPECT_FALSE(first.audit_log.empty());
  EXPECT_EQ(first.audit_log, second.audit_log);
  EXPECT_EQ(first.released_body, second.released_body);
}

}  // namespace
}  // namespace station
