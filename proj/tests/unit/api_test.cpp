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

#include <gtest/gtest.h>

#include <fstream>

#include "json.hpp"
#include "support/station_harness.hpp"

namespace station {
namespace {

using json = nlohmann::json;
using testing::Contributor;
using testing::StationHarness;

std::string read_source(const std::string& rel) {
  std::ifstream in(std::string(STATION_SOURCE_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr const char* kFlowers =
    "petal_length,petal_width,species\n"
    "1.4,0.2,setosa\n1.3,0.3,setosa\n1.5,0.2,setosa\n1.2,0.4,setosa\n"
    "4.5,1.5,versicolor\n4.1,1.3,versicolor\n4.7,1.4,versicolor\n4.4,1.6,versicolor\n";

constexpr const char* kClassify = R"({
  "task_type": "classify",
  "payload": {"n_classes": 2, "label_column": "species",
              "test_data": "petal_length,petal_width,species\n1.3,0.2,setosa\n4.6,1.5,versicolor\n"},
  "dos": {"metric": "accuracy", "threshold": 0.8}
})";

struct ApiFixture : ::testing::Test {
  StationHarness h;
  Api api{*h.station};

  ApiResponse call(const std::string& who, const std::string& method, const std::string& path,
                   const std::string& body = "", std::vector<FormPart> parts = {}) {
    ApiRequest req;
    req.method = method;
    auto q = path.find('?');
    req.path = path.substr(0, q);
    if (q != std::string::npos) {
      for (const auto& kv : split(path.substr(q + 1), '&')) {
        auto eq = kv.find('=');
        req.query.emplace(kv.substr(0, eq), eq == std::string::npos ? "" : kv.substr(eq + 1));
      }
    }
    if (!who.empty()) req.authorization = "Bearer s-" + who;
    req.body = body;
    req.parts = std::move(parts);
    return api.handle(req);
  }

  std::vector<FormPart> form(const Contributor& c, const std::string& csv, const std::string& name,
                             const std::string& policy = R"({"access":"open"})") {
    return {{"csv", name + ".csv", csv}, {"signature", "", c.sign(csv)}, {"policy", "", policy}};
  }

  std::string upload(const Contributor& c, const std::string& csv, const std::string& name,
                     const std::string& policy = R"({"access":"open"})") {
    auto r = call(c.name, "POST", "/datasets", "", form(c, csv, name, policy));
    EXPECT_EQ(r.status, 201) << r.body;
    return json::parse(r.body).at("id");
  }

  static json body(const ApiResponse& r) { return json::parse(r.body); }
};

TEST_F(ApiFixture, RequiresBearerCredentials) {
  EXPECT_EQ(call("", "GET", "/ledger/me").status, 401);
  EXPECT_EQ(call("nobody", "GET", "/ledger/me").status, 401);
  auto r = call("carol", "GET", "/nowhere");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body(r).at("error"), "NotFound");
}

TEST_F(ApiFixture, UploadReturnsIdsAndRejectsBadSignatures) {
  auto id = upload(h.alice, kFlowers, "flowers");
  EXPECT_TRUE(DatasetId::parse(id));
  auto parts = form(h.alice, "a,b\n1,2\n", "x");
  parts[1].content = h.alice.sign("something else");
  auto bad = call("alice", "POST", "/datasets", "", parts);
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(body(bad).at("error"), "SignatureInvalid");
  EXPECT_EQ(call("carol", "POST", "/datasets", "", form(h.alice, "a\n1\n", "y")).status, 403);
  auto policy = call("alice", "POST", "/datasets", "", form(h.alice, "a\n1\n", "z", R"({"acces":"open"})"));
  EXPECT_EQ(policy.status, 400);
}

TEST_F(ApiFixture, BulkUploadAppliesOnePolicyToEveryFile) {
  std::vector<FormPart> parts;
  for (int i = 0; i < 3; ++i) {
    std::string csv = "k,v\n" + std::to_string(i) + ",x\n";
    parts.push_back({"csv", "t" + std::to_string(i) + ".csv", csv});
    parts.push_back({"signature", "", h.alice.sign(csv)});
  }
  parts.push_back({"policy", "", R"({"access":"brokered"})"});
  auto r = call("alice", "POST", "/datasets", "", parts);
  ASSERT_EQ(r.status, 201) << r.body;
  auto ids = body(r).at("ids");
  ASSERT_EQ(ids.size(), 3u);
  for (const auto& id : ids) {
    EXPECT_EQ(h.station->policy().policy(*DatasetId::parse(id.get<std::string>()))->access,
              AccessMode::kBrokered);
  }
  EXPECT_EQ(h.station->catalog().get(*DatasetId::parse(ids[2].get<std::string>()))->name, "t2");

  // One bad signature rejects the whole batch.
  parts[3].content = h.alice.sign("tampered");
  auto before = h.station->store().list().size();
  EXPECT_EQ(call("alice", "POST", "/datasets", "", parts).status, 400);
  EXPECT_EQ(h.station->store().list().size(), before);
}

TEST_F(ApiFixture, CapsuleSubmissionAndPolling) {
  upload(h.alice, kFlowers, "flowers");
  auto r = call("carol", "POST", "/capsules", kClassify);
  ASSERT_EQ(r.status, 202) << r.body;
  auto sub = body(r);
  EXPECT_EQ(sub.at("fingerprint"), fingerprint(parse_capsule(kClassify)));
  EXPECT_EQ(sub.at("status"), "satisfied");
  auto polled = call("carol", "GET", "/capsules/" + sub.at("id").get<std::string>());
  EXPECT_EQ(body(polled), sub);
  EXPECT_EQ(body(call("carol", "GET", "/capsules")).at("submissions").size(), 1u);
  EXPECT_EQ(call("dave", "GET", "/capsules/" + sub.at("id").get<std::string>()).status, 404);

  auto bad = call("carol", "POST", "/capsules", R"({"task_type":"qbe","payload":{},"dos":{}})");
  EXPECT_EQ(bad.status, 400);
  EXPECT_FALSE(body(bad).at("details").empty());
}

TEST_F(ApiFixture, BlockedCapsuleListsTasksAndAnswerPaysTheWorker) {
  upload(h.alice, read_source("data/demo/deliveries.csv"), "deliveries");
  upload(h.bob, read_source("data/demo/contacts.csv"), "contacts");
  auto sub = body(call("carol", "POST", "/capsules", read_source("docs/capsules/deliveries_qbe.json")));
  ASSERT_EQ(sub.at("status"), "blocked");
  ASSERT_EQ(sub.at("task_ids").size(), 1u);
  std::string task = sub.at("task_ids")[0];

  EXPECT_TRUE(body(call("carol", "GET", "/tasks")).at("tasks").empty());
  auto visible = body(call("dave", "GET", "/tasks")).at("tasks");
  ASSERT_EQ(visible.size(), 1u);
  EXPECT_EQ(visible[0].at("price"), 30);
  EXPECT_EQ(visible[0].at("kind"), "join_disambiguation");

  EXPECT_EQ(call("carol", "POST", "/tasks/" + task + "/claim").status, 403);
  EXPECT_EQ(call("dave", "POST", "/tasks/" + task + "/claim").status, 200);
  EXPECT_EQ(call("alice", "POST", "/tasks/" + task + "/claim").status, 409);
  auto before = body(call("dave", "GET", "/ledger/me")).at("balance").get<int>();
  auto ans = call("dave", "POST", "/tasks/" + task + "/answer", R"({"alternative": 0})");
  ASSERT_EQ(ans.status, 200) << ans.body;
  EXPECT_EQ(body(ans).at("resumed")[0].at("status"), "satisfied");
  EXPECT_EQ(body(call("dave", "GET", "/ledger/me")).at("balance").get<int>(), before + 30);
  EXPECT_EQ(body(call("carol", "GET", "/capsules/" + sub.at("id").get<std::string>())).at("status"),
            "satisfied");
}

TEST_F(ApiFixture, ResultsAreMediated) {
  upload(h.bob, "name,city\nAnn,Oslo\nBo,Rome\n", "people", R"({"access":"brokered"})");
  const char* qbe = R"({"task_type":"qbe","payload":{"attributes":["name","city"],
      "example_rows":[["Ann","Oslo"]]},"dos":{"metric":"coverage","threshold":1.0}})";
  auto sub = body(call("carol", "POST", "/capsules", qbe));
  std::string result = sub.at("result_id");

  auto sealed = call("carol", "GET", "/results/" + result);
  EXPECT_EQ(sealed.status, 403);
  EXPECT_EQ(sealed.body.find("Ann"), std::string::npos);
  auto denial = body(sealed).at("denials")[0];
  EXPECT_EQ(denial.at("reason"), "NeedsApproval");
  std::string request = denial.at("request_id");

  auto pending = body(call("bob", "GET", "/access-requests")).at("requests");
  ASSERT_EQ(pending.size(), 1u);
  EXPECT_EQ(pending[0].at("status"), "pending");
  EXPECT_EQ(call("carol", "POST", "/access-requests/" + request + "/decision", R"({"approve":true})")
                .status,
            403);
  auto now = h.station->clock().now();
  auto decided = call("bob", "POST", "/access-requests/" + request + "/decision",
                      json{{"approve", true}, {"expiry", now + 50}}.dump());
  ASSERT_EQ(decided.status, 200) << decided.body;
  EXPECT_FALSE(body(decided).at("request").contains("token"));
  auto mine = body(call("carol", "GET", "/access-requests")).at("requests");
  std::string token = mine[0].at("token");

  auto open = call("carol", "GET", "/results/" + result + "?token=" + token);
  ASSERT_EQ(open.status, 200) << open.body;
  EXPECT_EQ(open.content_type, "text/csv");
  EXPECT_NE(open.body.find("Ann,Oslo"), std::string::npos);
  h.tick(51);
  auto expired = call("carol", "GET", "/results/" + result + "?token=" + token);
  EXPECT_EQ(expired.status, 403);
  EXPECT_EQ(body(expired).at("error"), "Expired");
}

TEST_F(ApiFixture, PredictionsAndRevocation) {
  auto flowers = upload(h.alice, kFlowers, "flowers");
  auto sub = body(call("carol", "POST", "/capsules", kClassify));
  std::string result = sub.at("result_id");
  auto handle = body(call("carol", "GET", "/results/" + result));
  std::string model = handle.at("model");
  auto predict = [&](const std::string& id) {
    return call("carol", "POST", "/models/" + id + "/predict",
                R"({"row":{"petal_length":4.2,"petal_width":"1.2"}})");
  };
  auto p = predict(model);
  ASSERT_EQ(p.status, 200) << p.body;
  EXPECT_EQ(body(p).at("label"), "versicolor");
  EXPECT_EQ(predict("00000000000000000000000000000000").status, 404);
  EXPECT_EQ(predict("not-an-id").status, 404);

  EXPECT_EQ(call("bob", "DELETE", "/datasets/" + flowers).status, 403);
  auto del = call("alice", "DELETE", "/datasets/" + flowers);
  ASSERT_EQ(del.status, 200);
  auto deleted = body(del).at("deleted");
  EXPECT_EQ(deleted.size(), 3u);  // dataset, training table, model
  EXPECT_NE(std::find(deleted.begin(), deleted.end(), model), deleted.end());
  auto gone = predict(model);
  EXPECT_EQ(gone.status, 410);
  EXPECT_EQ(body(gone).at("error"), "Revoked");
  EXPECT_EQ(call("carol", "GET", "/results/" + result).status, 410);
}

TEST_F(ApiFixture, UpdateSearchVerifyAndAudit) {
  auto id = upload(h.alice, "name,city\nAnn,Oslo\n", "people");
  std::string csv = "name,city\nAnn,Oslo\nBo,Rome\n";
  auto upd = call("alice", "PUT", "/datasets/" + id, "",
                  {{"csv", "people.csv", csv}, {"signature", "", h.alice.sign(csv)}});
  ASSERT_EQ(upd.status, 200) << upd.body;
  EXPECT_EQ(body(upd).at("version"), 2);
  EXPECT_EQ(call("bob", "PUT", "/datasets/" + id, "",
                 {{"csv", "people.csv", csv}, {"signature", "", h.bob.sign(csv)}})
                .status,
            403);

  auto found = body(call("carol", "GET", "/catalog/search?keyword=people")).at("results");
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].at("ext").at("asset_id"), id);
  EXPECT_EQ(found[0].at("what").at("row_count"), 2);
  EXPECT_TRUE(body(call("carol", "GET", "/catalog/search?require_why_profile=true")).at("results").empty());

  auto v = body(call("carol", "POST", "/tokens/verify", R"({"token":"garbage"})"));
  EXPECT_FALSE(v.at("allowed"));
  EXPECT_EQ(v.at("reason"), "BadMac");
  EXPECT_EQ(call("carol", "POST", "/tokens/verify", "{").status, 400);

  EXPECT_EQ(call("carol", "GET", "/audit").status, 403);
  auto audit = call("root", "GET", "/audit");
  EXPECT_EQ(audit.status, 200);
  EXPECT_EQ(audit.content_type, "application/x-ndjson");
}

TEST_F(ApiFixture, ExplicitAccessRequests) {
  auto id = upload(h.bob, "a,b\n1,2\n", "t", R"({"access":"brokered"})");
  auto r = call("carol", "POST", "/access-requests", json{{"dataset", id}}.dump());
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(body(r).at("verdict"), "NeedsApproval");
  auto hidden = upload(h.bob, "a,b\n1,2\n", "h", R"({"access":"closed","discoverable":false})");
  EXPECT_EQ(call("carol", "POST", "/access-requests", json{{"dataset", hidden}}.dump()).status, 404);
}

TEST(ApiRoutesTest, EveryRouteIsDispatched) {
  StationHarness h;
  Api api(*h.station);
  for (const auto& route : Api::routes()) {
    auto sp = route.find(' ');
    ApiRequest req;
    req.method = route.substr(0, sp);
    req.path = route.substr(sp + 1);
    auto at = req.path.find("{id}");
    if (at != std::string::npos) req.path.replace(at, 4, "00000000000000000000000000000000");
    req.authorization = "Bearer s-root";
    auto r = api.handle(req);
    // A route that exists never answers "no route".
    EXPECT_EQ(r.body.find("no route"), std::string::npos) << route;
  }
}

}  // namespace
}  // namespace station
