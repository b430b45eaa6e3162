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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "support/station_harness.hpp"

namespace station {
namespace {

using testing::StationHarness;

std::string read_source(const std::string& rel) {
  std::ifstream in(std::string(STATION_SOURCE_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Independent nearest-centroid oracle: plain loops over raw rows.

std::vector<std::string> centroid_oracle(const std::vector<std::vector<double>>& train_x,
                                         const std::vector<std::string>& train_y,
                                         const std::vector<std::vector<double>>& test_x) {
  const std::size_t dims = train_x[0].size();
  const double n = static_cast<double>(train_x.size());
  std::vector<double> mean(dims, 0), sd(dims, 0);
  for (const auto& x : train_x) {
    for (std::size_t d = 0; d < dims; ++d) mean[d] += x[d] / n;
  }
  for (const auto& x : train_x) {
    for (std::size_t d = 0; d < dims; ++d) sd[d] += (x[d] - mean[d]) * (x[d] - mean[d]) / n;
  }
  for (auto& s : sd) s = std::sqrt(s);
  std::map<std::string, std::vector<double>> centroid;
  std::map<std::string, double> count;
  for (std::size_t i = 0; i < train_x.size(); ++i) {
    auto& c = centroid[train_y[i]];
    c.resize(dims, 0);
    for (std::size_t d = 0; d < dims; ++d) c[d] += (train_x[i][d] - mean[d]) / sd[d];
    count[train_y[i]] += 1;
  }
  for (auto& [label, c] : centroid) {
    for (auto& v : c) v /= count[label];
  }
  std::vector<std::string> out;
  for (const auto& x : test_x) {
    std::string best;
    double best_d = 1e300;
    for (const auto& [label, c] : centroid) {
      double s = 0;
      for (std::size_t d = 0; d < dims; ++d) {
        double z = (x[d] - mean[d]) / sd[d];
        s += (z - c[d]) * (z - c[d]);
      }
      if (std::sqrt(s) < best_d) {
        best_d = std::sqrt(s);
        best = label;
      }
    }
    out.push_back(best);
  }
  return out;
}

TEST(ClassifierTest, TwoClassPlaneFixture) {
  Table train = parse_csv("x,y,label\n0,0,A\n0,1,A\n10,10,B\n10,11,B\n");
  auto model = BaselineClassifier::train(train, "label");
  EXPECT_EQ(model.predict({{"x", "1"}, {"y", "0"}}), "A");
  EXPECT_EQ(model.accuracy(train), 1.0);
  // Frozen from the centroid oracle.
  auto oracle = centroid_oracle({{0, 0}, {0, 1}, {10, 10}, {10, 11}}, {"A", "A", "B", "B"},
                                {{1, 0}, {6, 6}, {4, 5}});
  EXPECT_EQ(oracle, (std::vector<std::string>{"A", "B", "A"}));
  EXPECT_EQ(model.predict({{"x", "6"}, {"y", "6"}}), oracle[1]);
  EXPECT_EQ(model.predict({{"x", "4"}, {"y", "5"}}), oracle[2]);
}

TEST(ClassifierTest, MatchesOracleOnRandomData) {
  std::mt19937 rng(4);
  std::normal_distribution<double> noise(0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> xs;
    std::vector<std::string> ys;
    std::string csv = "f0,f1,f2,cls\n";
    for (int i = 0; i < 12; ++i) {
      std::string label = std::string(1, static_cast<char>('a' + i % 3));
      double base = (i % 3) * 2.0;
      std::vector<double> x{base + noise(rng), -base + noise(rng), noise(rng)};
      for (auto& v : x) v = std::round(v * 100) / 100;
      xs.push_back(x);
      ys.push_back(label);
      csv += format_number(x[0]) + "," + format_number(x[1]) + "," + format_number(x[2]) + "," +
             label + "\n";
    }
    auto model = BaselineClassifier::train(parse_csv(csv), "cls");
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < 20; ++i) probes.push_back({noise(rng) * 2, noise(rng) * 2, noise(rng)});
    auto expected = centroid_oracle(xs, ys, probes);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      auto got = model.predict({{"f0", format_number(probes[i][0])},
                                {"f1", format_number(probes[i][1])},
                                {"f2", format_number(probes[i][2])}});
      EXPECT_EQ(got, expected[i]) << "trial " << trial << " probe " << i;
    }
  }
}

TEST(ClassifierTest, TiesPreferHigherPriorThenSmallerLabel) {
  // The midpoint 5 is equidistant from both centroids.
  auto uneven = BaselineClassifier::train(parse_csv("x,c\n0,b\n0,b\n10,a\n"), "c");
  auto probe = [&](const BaselineClassifier& m, double x) {
    return m.predict({{"x", format_number(x)}});
  };
  EXPECT_EQ(probe(uneven, 5), "b");
  auto even = BaselineClassifier::train(parse_csv("x,c\n0,b\n10,a\n"), "c");
  EXPECT_EQ(probe(even, 5), "a");
}

TEST(ClassifierTest, ConstantFeaturesDropAndTextUsesModes) {
  auto model = BaselineClassifier::train(
      parse_csv("k,color,c\n1,red,p\n1,red,p\n1,blue,p\n1,blue,q\n1,blue,q\n"), "c");
  EXPECT_EQ(model.feature_columns(), (std::vector<std::string>{"color"}));
  EXPECT_EQ(model.predict({{"color", "RED"}}), "p");
  EXPECT_EQ(model.predict({{"color", "blue"}}), "q");
}

TEST(ClassifierTest, SingleClassIsPerfectOnItself) {
  Table t = parse_csv("a,b,label\n1,2,only\n3,4,only\n5,1,only\n");
  EXPECT_EQ(BaselineClassifier::train(t, "label").accuracy(t), 1.0);
}

TEST(ClassifierTest, JsonRoundTripPredictsIdentically) {
  Table t = parse_csv("x,y,kind,c\n0,1,u,A\n2,1,v,A\n9,8,v,B\n7,9,w,B\n");
  auto model = BaselineClassifier::train(t, "c");
  auto copy = BaselineClassifier::from_json(model.to_json());
  EXPECT_EQ(copy.to_json(), model.to_json());
  for (double x = -2; x < 12; x += 1.5) {
    std::map<std::string, std::string> row{{"x", format_number(x)}, {"y", "4"}, {"kind", "v"}};
    EXPECT_EQ(copy.predict(row), model.predict(row));
  }
  EXPECT_THROW(BaselineClassifier::from_json("{"), Error);
}

TEST(ClassifierTest, MissingColumnsAreSchemaMismatch) {
  auto model = BaselineClassifier::train(parse_csv("x,c\n0,a\n1,b\n"), "c");
  try {
    model.accuracy(parse_csv("z,c\n0,a\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
  EXPECT_THROW(BaselineClassifier::train(parse_csv("x\n1\n"), "c"), Error);
}

// ---------------------------------------------------------------------------
// evaluate_dos

TaskCapsule qbe_capsule(std::vector<std::string> attrs, std::vector<std::vector<std::string>> rows,
                        double threshold = 1.0) {
  TaskCapsule c;
  c.task_type = TaskType::kQbe;
  c.payload = QbePayload{std::move(attrs), std::move(rows)};
  c.dos = {DosMetric::kCoverage, threshold};
  return c;
}

TEST(DosTest, QbeCountsMatchedExampleRows) {
  auto c = qbe_capsule({"name", "city"}, {{"Ann", "Oslo"}, {"Bo", "Rome"}, {"Cy", "Lima"}, {"Di", "Kyiv"}});
  Table input = parse_csv("name,city\nAnn,Oslo\nBo,Rome\nCy,Paris\n");
  EXPECT_EQ(evaluate_dos(c, input).dos, 0.5);
  // Attribute values must come from a single row.
  Table split = parse_csv("name,city\nAnn,Rome\nBo,Oslo\n");
  EXPECT_EQ(evaluate_dos(c, split).dos, 0.0);
  Table lower = parse_csv("name,city\nann,oslo\n");
  EXPECT_EQ(evaluate_dos(c, lower, {{"name", Transform::kLowercase}, {"city", Transform::kLowercase}})
                .dos,
            0.25);
  EXPECT_THROW(evaluate_dos(c, parse_csv("name\nAnn\n")), Error);
}

TEST(DosTest, SearchNormalizesHits) {
  TaskCapsule c;
  c.task_type = TaskType::kSearch;
  c.payload = SearchPayload{{"x"}};
  c.dos = {DosMetric::kHits, 4};
  auto r = evaluate_dos(c, parse_csv("asset\na\nb\nb\n"));
  EXPECT_EQ(r.raw, 2);
  EXPECT_EQ(r.dos, 0.5);
  EXPECT_EQ(evaluate_dos(c, parse_csv("asset\na\nb\nc\nd\ne\n")).dos, 1.0);
}

// ---------------------------------------------------------------------------
// Execution

constexpr const char* kFlowersTrain =
    "petal_length,petal_width,species\n"
    "1.4,0.2,setosa\n1.3,0.3,setosa\n1.5,0.2,setosa\n1.2,0.4,setosa\n"
    "4.5,1.5,versicolor\n4.1,1.3,versicolor\n4.7,1.4,versicolor\n4.4,1.6,versicolor\n";

TaskCapsule classify_capsule(double threshold = 0.8) {
  TaskCapsule c;
  c.task_type = TaskType::kClassify;
  ClassifyPayload p;
  p.label_column = "species";
  p.test_data =
      "petal_length,petal_width,species\n1.3,0.2,setosa\n1.6,0.3,setosa\n4.3,1.4,versicolor\n"
      "4.6,1.5,versicolor\n";
  c.payload = p;
  c.dos = {DosMetric::kAccuracy, threshold};
  return c;
}

TEST(ExecuteTest, ClassifyOnSeparableFixtureIsSatisfiedWithOracleAccuracy) {
  StationHarness h;
  auto flowers = h.add(h.alice, kFlowersTrain, "flowers");
  auto capsule = classify_capsule();
  auto out = h.station->executor().execute(capsule, h.user("carol"));
  ASSERT_EQ(out.status, ExecutionOutcome::Status::kSatisfied);
  ASSERT_TRUE(out.result);
  EXPECT_EQ(out.result->dos.dos, 1.0);

  auto expected = centroid_oracle(
      {{1.4, 0.2}, {1.3, 0.3}, {1.5, 0.2}, {1.2, 0.4}, {4.5, 1.5}, {4.1, 1.3}, {4.7, 1.4}, {4.4, 1.6}},
      {"setosa", "setosa", "setosa", "setosa", "versicolor", "versicolor", "versicolor", "versicolor"},
      {{1.3, 0.2}, {1.6, 0.3}, {4.3, 1.4}, {4.6, 1.5}});
  EXPECT_EQ(expected, (std::vector<std::string>{"setosa", "setosa", "versicolor", "versicolor"}));

  // Contributing ids equal the provenance parents of both derived artifacts.
  EXPECT_EQ(out.result->contributors, std::set<DatasetId>{flowers});
  auto& store = h.station->store();
  auto model = store.get(*out.result->product);
  EXPECT_EQ(model.kind, AssetKind::kModel);
  EXPECT_EQ(std::set<DatasetId>(model.parents.begin(), model.parents.end()), out.result->contributors);
  auto table = store.get(*out.result->training_table);
  EXPECT_EQ(std::set<DatasetId>(table.parents.begin(), table.parents.end()), out.result->contributors);
  EXPECT_EQ(out.result->state, ReleaseState::kSealed);
}

TEST(ExecuteTest, VerbatimQbeIsSatisfiedAndReleasedWhenOpen) {
  StationHarness h;
  h.add(h.alice, "name,city\nAnn,Oslo\nBo,Rome\nCy,Lima\n", "people");
  auto capsule = qbe_capsule({"name", "city"}, {{"Ann", "Oslo"}, {"Cy", "Lima"}});
  auto carol = h.user("carol");
  auto out = h.station->executor().execute(capsule, carol);
  ASSERT_EQ(out.status, ExecutionOutcome::Status::kSatisfied);
  EXPECT_EQ(out.result->dos.dos, 1.0);
  auto rel = h.station->executor().release(out.result->id, carol);
  ASSERT_TRUE(rel.released);
  EXPECT_EQ(rel.content.media_type, "text/csv");
  EXPECT_EQ(rel.content.body, "name,city\nAnn,Oslo\nBo,Rome\nCy,Lima\n");
  EXPECT_EQ(h.station->executor().result(out.result->id)->state, ReleaseState::kReleased);
  EXPECT_THROW(h.station->executor().release(out.result->id, h.user("dave")), Error);
}

TEST(ExecuteTest, NearTiedJoinBlocksThenResumesAfterAnswer) {
  StationHarness h;
  h.add(h.alice, read_source("data/demo/deliveries.csv"), "deliveries");
  h.add(h.bob, read_source("data/demo/contacts.csv"), "contacts");
  auto capsule = parse_capsule(read_source("docs/capsules/deliveries_qbe.json"));
  auto carol = h.user("carol");
  auto sub = h.station->submit(carol, capsule);
  ASSERT_EQ(sub.status, SubmissionStatus::kBlocked);
  ASSERT_EQ(sub.task_ids.size(), 1u);
  auto task = h.station->market().task(sub.task_ids[0]);
  EXPECT_EQ(task.kind, TaskKind::kJoinDisambiguation);
  EXPECT_NE(task.description.find("work_address"), std::string::npos);
  EXPECT_NE(task.description.find("home_address"), std::string::npos);
  EXPECT_EQ(h.station->balance(carol), 1000 - 30);

  auto dave = h.user("dave");
  h.station->claim(dave, task.id);
  auto answered = h.station->answer(dave, task.id, {0, ""});
  ASSERT_EQ(answered.resumed.size(), 1u);
  EXPECT_EQ(answered.resumed[0].status, SubmissionStatus::kSatisfied);
  EXPECT_EQ(h.station->balance(dave), 30);
  EXPECT_EQ(h.station->submission(carol, sub.id).runs, 2);
}

TEST(ExecuteTest, CachedSatisfactionAvoidsMaterialization) {
  StationHarness h;
  h.add(h.alice, kFlowersTrain, "flowers");
  auto capsule = classify_capsule();
  auto& ex = h.station->executor();
  auto first = ex.execute(capsule, h.user("carol"));
  ASSERT_EQ(first.status, ExecutionOutcome::Status::kSatisfied);
  EXPECT_EQ(first.materializations, 1u);
  auto assets_before = h.station->store().list().size();
  auto again = ex.execute(capsule, h.user("dave"));
  ASSERT_EQ(again.status, ExecutionOutcome::Status::kSatisfied);
  EXPECT_EQ(again.materializations, 0u);
  EXPECT_EQ(h.station->store().list().size(), assets_before);
  EXPECT_EQ(again.result->product, first.result->product);
  EXPECT_NE(again.result->id, first.result->id);
  EXPECT_NE(ex.audit().read().find("\"outcome\":\"cached\""), std::string::npos);
}

TEST(ExecuteTest, BudgetBoundsCandidatesEvaluated) {
  StationHarness h;
  // Every table covers the targets but none holds the example row.
  for (int i = 0; i < 8; ++i) {
    h.add(h.alice, "name,city\nn" + std::to_string(i) + ",c\nx,y\n", "t" + std::to_string(i));
  }
  auto capsule = qbe_capsule({"name", "city"}, {{"zz", "qq"}});
  for (std::size_t b = 1; b <= 10; ++b) {
    auto out = h.station->executor().execute(capsule, h.user("carol"), {b, 60});
    EXPECT_LE(out.candidates_evaluated, b);
    EXPECT_EQ(out.status, ExecutionOutcome::Status::kUnsatisfied);
  }
}

TEST(ExecuteTest, ClosedDataOfOthersIsNeverACandidate) {
  StationHarness h;
  h.add(h.bob, "name,city\nAnn,Oslo\n", "hidden", AccessMode::kClosed);
  auto capsule = qbe_capsule({"name", "city"}, {{"Ann", "Oslo"}});
  auto out = h.station->executor().execute(capsule, h.user("carol"));
  EXPECT_EQ(out.status, ExecutionOutcome::Status::kUnsatisfied);
  EXPECT_EQ(out.candidates_evaluated, 0u);
  // The owner may compute over their own closed data and read the result.
  auto own = h.station->executor().execute(capsule, h.bob.principal());
  ASSERT_EQ(own.status, ExecutionOutcome::Status::kSatisfied);
  EXPECT_TRUE(h.station->executor().release(own.result->id, h.bob.principal()).released);
}

TEST(ExecuteTest, GovernanceViolationsAreSkippedAndAudited) {
  StationHarness h([](StationConfig& c) { c.forbid_pii_derivation = true; });
  h.add(h.alice, "name,ssn\nAnn,111\nBo,222\n", "ids");
  auto capsule = qbe_capsule({"name", "ssn"}, {{"Ann", "111"}});
  auto out = h.station->executor().execute(capsule, h.user("carol"));
  EXPECT_EQ(out.status, ExecutionOutcome::Status::kUnsatisfied);
  EXPECT_EQ(out.materializations, 0u);
  EXPECT_NE(h.station->audit_log().find("\"governance\":\"violation\""), std::string::npos);
}

TEST(ExecuteTest, UnfundedRequesterCannotPostTasks) {
  StationHarness h;
  h.add(h.alice, read_source("data/demo/deliveries.csv"), "deliveries");
  h.add(h.bob, read_source("data/demo/contacts.csv"), "contacts");
  auto capsule = parse_capsule(read_source("docs/capsules/deliveries_qbe.json"));
  auto out = h.station->executor().execute(capsule, h.user("dave"));
  EXPECT_EQ(out.status, ExecutionOutcome::Status::kUnsatisfied);
  EXPECT_TRUE(out.task_ids.empty());
}

TEST(ExecuteTest, MissingWhyProfileBlocksUntilAnswered) {
  StationHarness h;
  auto flowers = h.add(h.alice, kFlowersTrain, "flowers");
  auto capsule = classify_capsule();
  capsule.trust.require_why_profile = true;
  auto carol = h.user("carol");
  auto sub = h.station->submit(carol, capsule);
  ASSERT_EQ(sub.status, SubmissionStatus::kBlocked);
  auto task = h.station->market().task(sub.task_ids.at(0));
  EXPECT_EQ(task.kind, TaskKind::kWhyProfileRequest);
  EXPECT_EQ(task.dataset, flowers);
  EXPECT_EQ(task.price, 50);
  EXPECT_NE(task.description.find("'flowers'"), std::string::npos);
  h.station->claim(h.user("dave"), task.id);
  auto answered = h.station->answer(h.user("dave"), task.id, {std::nullopt, "Field survey of petals"});
  ASSERT_EQ(answered.resumed.size(), 1u);
  EXPECT_EQ(answered.resumed[0].status, SubmissionStatus::kSatisfied);
  EXPECT_EQ(h.station->catalog().get(flowers)->why.text, "Field survey of petals");
}

TEST(ExecuteTest, IdenticalRunsProduceIdenticalOutcomes) {
  auto run = [] {
    StationHarness h;
    h.add(h.alice, read_source("data/demo/deliveries.csv"), "deliveries");
    h.add(h.bob, read_source("data/demo/contacts.csv"), "contacts");
    h.add(h.alice, kFlowersTrain, "flowers");
    auto carol = h.user("carol");
    std::string trace;
    for (const auto& c : {classify_capsule(), parse_capsule(read_source("docs/capsules/deliveries_qbe.json"))}) {
      auto out = h.station->executor().execute(c, carol);
      trace += std::string(outcome_status_name(out.status)) + ";";
      if (out.result) trace += out.result->id + ";" + out.result->product->hex() + ";";
      for (const auto& t : out.task_ids) trace += t + ";";
    }
    return trace + h.station->audit_log();
  };
  EXPECT_EQ(run(), run());
}

// Oracle equivalence on small single-table corpora: a capsule is satisfiable
// iff some table holds every attribute, each attribute matches at least the
// blend match fraction of example values, and enough example rows appear
// whole in one row.
TEST(ExecuteTest, VerdictsMatchBruteForceOnSmallCorpora) {
  std::mt19937 rng(17);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 25; ++trial) {
    StationHarness h;
    std::vector<Table> tables;
    int n_tables = 1 + rng() % 5;
    for (int t = 0; t < n_tables; ++t) {
      Table tbl;
      tbl.header = rng() % 4 == 0 ? std::vector<std::string>{"key", "other"}
                                  : std::vector<std::string>{"key", "val"};
      int rows = 2 + rng() % 4;
      for (int r = 0; r < rows; ++r) tbl.rows.push_back({vocab[rng() % 6], vocab[rng() % 6]});
      h.add(h.alice, write_csv(tbl), "t" + std::to_string(t));
      tables.push_back(tbl);
    }
    std::vector<std::vector<std::string>> examples;
    for (int e = 0; e < 2; ++e) examples.push_back({vocab[rng() % 6], vocab[rng() % 6]});
    double threshold = rng() % 2 ? 1.0 : 0.5;
    auto capsule = qbe_capsule({"key", "val"}, examples, threshold);

    bool oracle = false;
    for (const auto& tbl : tables) {
      if (tbl.header[1] != "val") continue;
      bool columns_ok = true;
      for (int col = 0; col < 2; ++col) {
        int hit = 0;
        for (const auto& ex : examples) {
          for (const auto& row : tbl.rows) {
            if (row[col] == ex[col]) {
              ++hit;
              break;
            }
          }
        }
        if (hit < 0.8 * examples.size()) columns_ok = false;
      }
      int whole = 0;
      for (const auto& ex : examples) {
        for (const auto& row : tbl.rows) {
          if (row == ex) {
            ++whole;
            break;
          }
        }
      }
      if (columns_ok && whole >= threshold * examples.size()) oracle = true;
    }
    auto out = h.station->executor().execute(capsule, h.user("carol"));
    EXPECT_EQ(out.status == ExecutionOutcome::Status::kSatisfied, oracle) << "trial " << trial;
  }
}

// ---------------------------------------------------------------------------
// Release

struct BrokeredFixture {
  StationHarness h;
  DatasetId table;
  std::string result_id;

  explicit BrokeredFixture(bool dp = false) {
    UploadPolicy p;
    p.access = AccessMode::kBrokered;
    if (dp) {
      p.access = AccessMode::kOpen;
      p.dp_filter = DpFilter{0.3, 0.1};
    }
    table = h.add(h.bob, "name,city\nAnn,Oslo\nBo,Rome\nCy,Lima\n", "people", p.access, &p);
    auto out = h.station->executor().execute(qbe_capsule({"name", "city"}, {{"Ann", "Oslo"}}),
                                             h.user("carol"));
    result_id = out.result->id;
  }
};

TEST(ReleaseTest, BrokeredNeedsApprovalThenOneTimeToken) {
  BrokeredFixture f;
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  auto sealed = ex.release(f.result_id, carol);
  ASSERT_FALSE(sealed.released);
  ASSERT_EQ(sealed.denials.size(), 1u);
  EXPECT_EQ(sealed.denials[0].reason, "NeedsApproval");
  EXPECT_TRUE(sealed.content.body.empty());
  auto request = *sealed.denials[0].request_id;
  EXPECT_EQ(ex.release(f.result_id, carol).denials[0].request_id, request);

  auto decision = f.h.station->decide(f.h.bob.principal(), request, true, {std::nullopt, 1});
  auto without = ex.release(f.result_id, carol);
  EXPECT_EQ(without.denials.at(0).reason, "TokenRequired");
  EXPECT_EQ(without.denials.at(0).request_id, request);

  auto once = ex.release(f.result_id, carol, {*decision.token});
  ASSERT_TRUE(once.released);
  EXPECT_NE(once.content.body.find("Ann"), std::string::npos);
  auto twice = ex.release(f.result_id, carol, {*decision.token});
  EXPECT_FALSE(twice.released);
  EXPECT_EQ(twice.denials.at(0).reason, "Exhausted");
  EXPECT_EQ(f.h.station->catalog().get(f.table)->who.accessed_by, std::set<std::string>{"carol"});
}

TEST(ReleaseTest, CorruptTokenIsBadMac) {
  BrokeredFixture f;
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  auto request = *ex.release(f.result_id, carol).denials[0].request_id;
  auto token = *f.h.station->decide(f.h.bob.principal(), request, true, {}).token;
  std::string bad = token;
  bad[5] = bad[5] == 'A' ? 'B' : 'A';
  EXPECT_EQ(ex.release(f.result_id, carol, {bad}).denials.at(0).reason, "BadMac");
  EXPECT_TRUE(ex.release(f.result_id, carol, {token}).released);
}

TEST(ReleaseTest, ExpiredTokenIsDenied) {
  BrokeredFixture f;
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  auto request = *ex.release(f.result_id, carol).denials[0].request_id;
  auto now = f.h.station->clock().now();
  auto token = *f.h.station->decide(f.h.bob.principal(), request, true, {now + 100, std::nullopt}).token;
  f.h.tick(101);
  EXPECT_EQ(ex.release(f.result_id, carol, {token}).denials.at(0).reason, "Expired");
}

TEST(ReleaseTest, CallersOwnTokenWinsOverForeignTokens) {
  BrokeredFixture f;
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  auto request = *ex.release(f.result_id, carol).denials[0].request_id;
  auto mine = *f.h.station->decide(f.h.bob.principal(), request, true, {std::nullopt, 1}).token;
  auto foreign = f.h.station->policy().mint_token("dave", {f.table}, {});
  EXPECT_EQ(ex.release(f.result_id, carol, {foreign}).denials.at(0).reason, "WrongSubject");
  EXPECT_TRUE(ex.release(f.result_id, carol, {foreign, mine}).released);
  EXPECT_EQ(ex.release(f.result_id, carol, {foreign, mine}).denials.at(0).reason, "Exhausted");
}

TEST(ReleaseTest, DeletedContributorRevokesAndPurges) {
  BrokeredFixture f;
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  auto request = *ex.release(f.result_id, carol).denials[0].request_id;
  auto token = *f.h.station->decide(f.h.bob.principal(), request, true, {}).token;
  auto deleted = f.h.station->forget(f.h.bob.principal(), f.table);
  auto out = ex.release(f.result_id, carol, {token});
  EXPECT_FALSE(out.released);
  ASSERT_EQ(out.denials.size(), 1u);
  EXPECT_EQ(out.denials[0].reason, "Revoked");
  EXPECT_EQ(out.denials[0].dataset, f.table);
  EXPECT_THROW(ex.release(f.result_id, carol, {token}), Error);
  for (const auto& id : ex.cache().referenced()) EXPECT_FALSE(deleted.count(id));
  EXPECT_EQ(f.h.station->verify_token(token, carol, {}).reason, DenyReason::kRevoked);
}

TEST(ReleaseTest, DpDatasetsReleaseOnlyNoisyCounts) {
  BrokeredFixture f(true);
  auto& ex = f.h.station->executor();
  auto carol = f.h.user("carol");
  for (int i = 0; i < 3; ++i) {
    auto out = ex.release(f.result_id, carol);
    ASSERT_TRUE(out.released);
    auto body = nlohmann::json::parse(out.content.body);
    EXPECT_TRUE(body.at("noised").get<bool>());
    EXPECT_EQ(out.content.body.find("Ann"), std::string::npos);
  }
  auto exhausted = ex.release(f.result_id, carol);
  EXPECT_FALSE(exhausted.released);
  EXPECT_EQ(exhausted.denials.at(0).reason, "BudgetExhausted");
}

TEST(ReleaseTest, DpContributorBlocksModelRelease) {
  StationHarness h;
  UploadPolicy p;
  p.access = AccessMode::kOpen;
  p.dp_filter = DpFilter{1.0, 0.1};
  h.add(h.alice, kFlowersTrain, "flowers", AccessMode::kOpen, &p);
  auto out = h.station->executor().execute(classify_capsule(), h.user("carol"));
  ASSERT_EQ(out.status, ExecutionOutcome::Status::kSatisfied);
  auto rel = h.station->executor().release(out.result->id, h.user("carol"));
  EXPECT_FALSE(rel.released);
  EXPECT_EQ(rel.denials.at(0).reason, "DpModelBlocked");
}

TEST(PredictTest, ServesReleasedModelsOnly) {
  StationHarness h;
  auto flowers = h.add(h.alice, kFlowersTrain, "flowers");
  auto carol = h.user("carol");
  auto& ex = h.station->executor();
  auto out = ex.execute(classify_capsule(), carol);
  auto model = *out.result->product;
  std::map<std::string, std::string> row{{"petal_length", "4.2"}, {"petal_width", "1.2"}};
  try {
    ex.predict(model, carol, row);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAccessDenied);
  }
  auto rel = ex.release(out.result->id, carol);
  ASSERT_TRUE(rel.released);
  auto handle = nlohmann::json::parse(rel.content.body);
  EXPECT_EQ(handle.at("model"), model.hex());
  EXPECT_FALSE(handle.contains("classes"));
  EXPECT_EQ(ex.predict(model, carol, row), "versicolor");
  EXPECT_EQ(ex.predict(model, carol, {{"petal_length", "1.1"}, {"petal_width", "0.1"}}), "setosa");

  try {
    ex.predict(h.station->store().allocate_id(), carol, row);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  h.station->forget(h.alice.principal(), flowers);
  try {
    ex.predict(model, carol, row);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRevoked);
  }
}

}  // namespace
}  // namespace station
