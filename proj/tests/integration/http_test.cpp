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

#include "station/http_server.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "support/station_harness.hpp"

namespace station {
namespace {

using testing::StationHarness;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.run(); });
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Client client(const std::string& secret) {
    httplib::Client c("127.0.0.1", port_);
    c.set_bearer_token_auth(secret);
    return c;
  }

  StationHarness h;
  Api api{*h.station};
  HttpServer server_{api};
  int port_ = 0;
  std::thread thread_;
};

TEST_F(HttpTest, MultipartUploadAndQueriesOverTheWire) {
  std::string a = "name,city\nAnn,Oslo\n", b = "name,city\nBo,Rome\n";
  httplib::MultipartFormDataItems items{
      {"csv", a, "first.csv", "text/csv"},  {"signature", h.alice.sign(a), "", ""},
      {"csv", b, "second.csv", "text/csv"}, {"signature", h.alice.sign(b), "", ""},
      {"policy", R"({"access":"open"})", "", ""}};
  auto alice = client("s-alice");
  auto res = alice.Post("/datasets", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201) << res->body;
  EXPECT_EQ(h.station->store().list().size(), 2u);
  EXPECT_NE(h.station->search_catalog(h.user("carol"), {}).size(), 0u);

  auto carol = client("s-carol");
  auto ledger = carol.Get("/ledger/me");
  ASSERT_TRUE(ledger);
  EXPECT_EQ(ledger->status, 200);
  EXPECT_EQ(ledger->body, R"({"balance":1000,"user":"carol"})");
  auto search = carol.Get("/catalog/search?keyword=first");
  ASSERT_TRUE(search);
  EXPECT_NE(search->body.find("\"first\""), std::string::npos);

  auto anon = httplib::Client("127.0.0.1", port_).Get("/tasks");
  ASSERT_TRUE(anon);
  EXPECT_EQ(anon->status, 401);
  EXPECT_EQ(anon->get_header_value("Content-Type"), "application/json");
}

TEST_F(HttpTest, ConcurrentClientsAreServed) {
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      auto c = client("s-dave");
      for (int i = 0; i < 10; ++i) {
        auto r = c.Get("/tasks");
        if (r && r->status == 200) ++ok;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 80);
}

}  // namespace
}  // namespace station
