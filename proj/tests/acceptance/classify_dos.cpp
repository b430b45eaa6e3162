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

#include <cmath>
#include <map>
#include <sstream>

#include "acceptance.hpp"
#include "station/capsule.hpp"
#include "support/station_harness.hpp"

namespace station::acceptance {

namespace {

struct Sample {
  std::vector<double> x;
  std::string label;
};

std::vector<Sample> samples(const Table& t, const std::string& label) {
  auto li = *t.column_index(label);
  std::vector<Sample> out;
  for (const auto& row : t.rows) {
    Sample s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != li) s.x.push_back(std::stod(row[c]));
    }
    s.label = row[li];
    out.push_back(s);
  }
  return out;
}

// Nearest centroid in z-space with population standard deviations.
std::vector<std::string> oracle_predictions(const std::vector<Sample>& train,
                                            const std::vector<Sample>& test) {
  const std::size_t dims = train.front().x.size();
  std::vector<double> mean(dims), sd(dims);
  for (const auto& s : train) {
    for (std::size_t d = 0; d < dims; ++d) mean[d] += s.x[d] / train.size();
  }
  for (const auto& s : train) {
    for (std::size_t d = 0; d < dims; ++d) sd[d] += std::pow(s.x[d] - mean[d], 2) / train.size();
  }
  for (auto& v : sd) v = std::sqrt(v);
  std::map<std::string, std::vector<double>> centroid;
  std::map<std::string, int> count;
  for (const auto& s : train) {
    auto& c = centroid[s.label];
    c.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) c[d] += (s.x[d] - mean[d]) / sd[d];
    ++count[s.label];
  }
  for (auto& [label, c] : centroid) {
    for (auto& v : c) v /= count[label];
  }
  std::vector<std::string> out;
  for (const auto& s : test) {
    std::string best;
    double best_d = INFINITY;
    for (const auto& [label, c] : centroid) {
      double acc = 0;
      for (std::size_t d = 0; d < dims; ++d) acc += std::pow((s.x[d] - mean[d]) / sd[d] - c[d], 2);
      if (std::sqrt(acc) < best_d) {
        best_d = std::sqrt(acc);
        best = label;
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

Verdict check_classify_dos() {
  testing::StationHarness h;
  auto csv = read_file(source_dir() / "data/demo/flowers.csv");
  auto capsule = parse_capsule(read_file(source_dir() / "docs/capsules/classify.json"));
  h.add(h.alice, csv, "flowers");
  auto carol = h.user("carol");
  auto sub = h.station->submit(carol, capsule);

  const auto& payload = capsule.classify();
  auto train = samples(parse_csv(csv), payload.label_column);
  auto test_table = payload.test_table();
  auto test = samples(test_table, payload.label_column);
  auto expected = oracle_predictions(train, test);
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += expected[i] == test[i].label;
  double oracle_accuracy = static_cast<double>(correct) / test.size();

  std::ostringstream detail;
  detail << "threshold " << capsule.dos.threshold << ", status "
         << submission_status_name(sub.status) << ", accuracy " << sub.best_dos << ", oracle "
         << oracle_accuracy;
  if (sub.status != SubmissionStatus::kSatisfied || !sub.result_id) return {false, detail.str()};

  // The released model answers every test row exactly as the oracle does.
  auto released = h.station->release(carol, *sub.result_id, {});
  auto model = *h.station->executor().result(*sub.result_id)->product;
  int agree = 0;
  for (const auto& row : test_table.rows) {
    std::map<std::string, std::string> features;
    for (std::size_t c = 0; c < row.size(); ++c) features[test_table.header[c]] = row[c];
    features.erase(payload.label_column);
    agree += h.station->predict(carol, model, features) == expected[&row - &test_table.rows[0]];
  }
  detail << ", released " << (released.released ? "yes" : "no") << ", predictions agree "
         << agree << "/" << test.size();
  bool pass = sub.best_dos == 1.0 && oracle_accuracy == 1.0 && released.released &&
              agree == static_cast<int>(test.size());
  return {pass, detail.str()};
}

}  // namespace station::acceptance
