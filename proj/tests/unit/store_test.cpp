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

#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "station/crypto.hpp"
#include "support/test_util.hpp"

namespace station {
namespace {

using testing::Contributor;
using testing::TempDir;

constexpr char kThreeColumns[] = "name,city,age\nann,chicago,31\nbob,boston,45\n";

class StoreTest : public ::testing::Test {
 protected:
  TempDir dir;
  ManualClock clock;
  IdSource ids{42};
  Store store{dir.path(), clock, ids};
  Contributor alice{"alice"};
  Contributor bob{"bob"};

  DatasetId derive(std::vector<DatasetId> parents, AssetKind kind = AssetKind::kTable) {
    DerivedRequest req;
    req.kind = kind;
    req.parents = std::move(parents);
    req.producing_op = "test.derive";
    req.content = "x\n1\n";
    return store.register_derived(req);
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

TEST_F(StoreTest, IngestSealsVersionOne) {
  auto id = store.ingest(alice.upload(kThreeColumns, "people"));
  auto rec = store.get(id);
  EXPECT_EQ(rec.version, 1);
  EXPECT_TRUE(rec.sealed);
  EXPECT_FALSE(rec.encrypted);
  EXPECT_EQ(rec.id.hex().size(), 32u);
  ASSERT_EQ(rec.schema.size(), 3u);
  EXPECT_EQ(rec.schema[2].dtype, DType::kNumber);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "assets" / id.hex() / "1.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "assets" / id.hex() / "meta"));
  EXPECT_EQ(rec.content_ref, "assets/" + id.hex() + "/1.csv");
}

TEST_F(StoreTest, SameContentTwiceGivesDistinctIds) {
  auto a = store.ingest(alice.upload(kThreeColumns));
  auto b = store.ingest(alice.upload(kThreeColumns));
  EXPECT_NE(a, b);
}

TEST_F(StoreTest, IngestErrors) {
  EXPECT_EQ(code_of([&] { store.ingest(alice.upload("a,b,c\n1,2,3\n1,2,3,4\n")); }),
            ErrorCode::kMalformedCsv);
  auto forged = alice.upload(kThreeColumns);
  forged.content += "eve,nowhere,1\n";
  EXPECT_EQ(code_of([&] { store.ingest(forged); }), ErrorCode::kSignatureInvalid);
  auto wrong_owner = alice.upload(kThreeColumns);
  wrong_owner.owner_key = bob.keys.public_key;
  EXPECT_EQ(code_of([&] { store.ingest(wrong_owner); }), ErrorCode::kSignatureInvalid);
  auto enc = alice.upload("\x01\x02opaque");
  enc.encrypted = true;
  EXPECT_EQ(code_of([&] { store.ingest(enc); }), ErrorCode::kEncryptedWithoutMetadata);
}

TEST_F(StoreTest, EncryptedDatasetTakesSchemaFromMetadata) {
  auto req = alice.upload(std::string("\x00\xff\x10 not csv", 11));
  req.encrypted = true;
  req.metadata = ProfileSeed{std::vector<ColumnSpec>{{"patient", DType::kText}}, std::nullopt};
  auto id = store.ingest(req);
  auto rec = store.get(id);
  EXPECT_TRUE(rec.encrypted);
  ASSERT_EQ(rec.schema.size(), 1u);
  EXPECT_EQ(rec.schema[0].name, "patient");
  EXPECT_EQ(code_of([&] { store.read_table(id); }), ErrorCode::kInvalidArgument);
}

TEST_F(StoreTest, UpdateIncrementsVersionAndKeepsHistory) {
  auto id = store.ingest(alice.upload(kThreeColumns));
  std::string v2 = "name,city,age\nann,chicago,32\n";
  EXPECT_EQ(store.update(id, v2, alice.keys.public_key, alice.sign(v2)), 2);
  std::string v3 = "name,city,age\nann,chicago,33\n";
  EXPECT_EQ(store.update(id, v3, alice.keys.public_key, alice.sign(v3)), 3);
  EXPECT_EQ(store.read_content(id, 1), kThreeColumns);
  EXPECT_EQ(store.read_content(id), v3);
  EXPECT_EQ(store.get(id).digest, crypto::sha256_hex(v3));
}

TEST_F(StoreTest, UpdateErrors) {
  auto id = store.ingest(alice.upload(kThreeColumns));
  std::string v2 = "name,city,age\n";
  EXPECT_EQ(code_of([&] { store.update(id, v2, bob.keys.public_key, bob.sign(v2)); }),
            ErrorCode::kNotOwner);
  EXPECT_EQ(code_of([&] { store.update(id, v2, alice.keys.public_key, bob.sign(v2)); }),
            ErrorCode::kSignatureInvalid);
  EXPECT_EQ(code_of([&] {
              store.update(ids.next_dataset_id(), v2, alice.keys.public_key, alice.sign(v2));
            }),
            ErrorCode::kNotFound);
}

TEST_F(StoreTest, SignatureVerifiesForEveryDataset) {
  auto id = store.ingest(alice.upload(kThreeColumns));
  std::string v2 = "name,city,age\nzed,paris,1\n";
  store.update(id, v2, alice.keys.public_key, alice.sign(v2));
  for (const auto& rec : store.list()) {
    EXPECT_TRUE(crypto::verify_content(rec.owner_key, rec.signature, store.read_content(rec.id)));
  }
}

TEST_F(StoreTest, RegisterDerivedRecordsEdges) {
  auto a = store.ingest(alice.upload(kThreeColumns));
  auto b = store.ingest(bob.upload(kThreeColumns));
  auto p = derive({a, b});
  auto graph = store.provenance();
  EXPECT_EQ(graph.parents(p), (std::set<DatasetId>{a, b}));
  EXPECT_TRUE(store.get(p).sealed);
  // A model derived from P has A and B in its ancestry.
  auto m = derive({p}, AssetKind::kModel);
  EXPECT_EQ(store.ancestors(m), (std::set<DatasetId>{a, b, p}));
}

TEST_F(StoreTest, RegisterDerivedErrors) {
  auto a = store.ingest(alice.upload(kThreeColumns));
  auto self = store.allocate_id();
  DerivedRequest req;
  req.parents = {a, self};
  req.id = self;
  req.content = "x\n";
  EXPECT_EQ(code_of([&] { store.register_derived(req); }), ErrorCode::kCycleDetected);
  EXPECT_EQ(code_of([&] { derive({ids.next_dataset_id()}); }), ErrorCode::kUnknownParent);
  EXPECT_EQ(code_of([&] { derive({}); }), ErrorCode::kUnknownParent);
}

TEST_F(StoreTest, DescendantsOfChainAndDiamond) {
  auto d = store.ingest(alice.upload(kThreeColumns));
  EXPECT_TRUE(store.descendants(d).empty());
  auto p1 = derive({d});
  auto p2 = derive({p1});
  EXPECT_EQ(store.descendants(d), (std::set<DatasetId>{p1, p2}));

  auto root = store.ingest(alice.upload(kThreeColumns));
  auto q1 = derive({root});
  auto q2 = derive({root});
  auto q3 = derive({q1, q2});
  EXPECT_EQ(store.descendants(root), (std::set<DatasetId>{q1, q2, q3}));
  EXPECT_EQ(store.depth(q3), 2);
  EXPECT_EQ(code_of([&] { store.descendants(ids.next_dataset_id()); }), ErrorCode::kNotFound);
}

TEST_F(StoreTest, CascadeDeleteRemovesClosureAndLeavesTombstones) {
  auto leaf = store.ingest(alice.upload(kThreeColumns));
  EXPECT_EQ(store.cascade_delete(leaf, "rtbf"), (std::set<DatasetId>{leaf}));

  auto d = store.ingest(alice.upload(kThreeColumns));
  auto p1 = derive({d});
  auto p2 = derive({p1});
  EXPECT_EQ(store.cascade_delete(p1, "rtbf"), (std::set<DatasetId>{p1, p2}));
  EXPECT_TRUE(store.contains(d));
  EXPECT_EQ(store.cascade_delete(d, "rtbf"), (std::set<DatasetId>{d}));

  auto tomb = store.tombstone(p2);
  ASSERT_TRUE(tomb);
  EXPECT_EQ(tomb->reason, "rtbf");
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "assets" / p2.hex()));
  EXPECT_EQ(code_of([&] { store.get(p2); }), ErrorCode::kNotFound);
}

// Brute-force reachability over a plain edge list, independent of the
// store's adjacency maps.
std::set<int> reachable_from(int start, const std::vector<std::pair<int, int>>& child_parent) {
  std::set<int> seen{start};
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto [child, parent] : child_parent) {
      if (seen.count(parent) && !seen.count(child)) {
        seen.insert(child);
        grew = true;
      }
    }
  }
  return seen;
}

TEST_F(StoreTest, CascadeDeleteMatchesReachabilityOnRandomDags) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir local_dir;
    Store local(local_dir.path(), clock, ids);
    std::uniform_int_distribution<int> size_dist(2, 50);
    int n = size_dist(rng);
    std::vector<DatasetId> nodes;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      std::vector<int> parents;
      if (i > 0 && rng() % 4 != 0) {
        int k = 1 + static_cast<int>(rng() % 3);
        for (int j = 0; j < k; ++j) parents.push_back(static_cast<int>(rng() % i));
      }
      if (parents.empty()) {
        nodes.push_back(local.ingest(alice.upload(kThreeColumns)));
      } else {
        DerivedRequest req;
        for (int p : parents) {
          req.parents.push_back(nodes[p]);
          edges.emplace_back(i, p);
        }
        req.content = "x\n";
        nodes.push_back(local.register_derived(req));
      }
    }
    ASSERT_TRUE(local.provenance().is_acyclic());
    int victim = static_cast<int>(rng() % n);
    auto expected_idx = reachable_from(victim, edges);
    std::set<DatasetId> expected;
    for (int i : expected_idx) expected.insert(nodes[i]);
    EXPECT_EQ(local.cascade_delete(nodes[victim], "rtbf"), expected);
    EXPECT_TRUE(local.provenance().is_acyclic());
  }
}

}  // namespace
}  // namespace station
