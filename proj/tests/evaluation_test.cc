// Copyright 2026 The tune-probe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tuneprobe/evaluation.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tuneprobe/common.h"

#include "tuneprobe/tasks.h"

namespace tuneprobe {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

TEST(Accuracy, Counts) {
  std::vector<int> labels(20, 0), pred(20, 0);
  for (int i = 13; i < 20; ++i) pred[i] = 1;
  EXPECT_DOUBLE_EQ(accuracy(pred, labels), 0.65);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), Error);
  EXPECT_THROW(accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), Error);
}

TEST(ConfusionMatrix, HandFixture) {
  // class 0: 4 samples, 3 right, 1 -> 2. class 1: 2 samples, both -> 0.
  // class 2: 0 samples.
  std::vector<int> labels = {0, 0, 0, 0, 1, 1};
  std::vector<int> pred = {0, 0, 0, 2, 0, 0};
  Confusion c = confusion(pred, labels, 3);
  EXPECT_DOUBLE_EQ(c.percent(0, 0), 75.0);
  EXPECT_DOUBLE_EQ(c.percent(0, 2), 25.0);
  EXPECT_DOUBLE_EQ(c.percent(1, 0), 100.0);
  EXPECT_EQ(c.percent.row(2).sum(), 0.0);
  EXPECT_FALSE(c.populated(2));
  EXPECT_TRUE(c.populated(1));
  EXPECT_DOUBLE_EQ(prior_weighted_diagonal(c), accuracy(pred, labels));
  EXPECT_THROW(confusion(std::vector<int>{3}, std::vector<int>{0}, 3), Error);
}

TEST(ConfusionMatrix, ConstantPredictor) {
  std::vector<int> labels = {0, 1, 1, 2, 2, 2};
  std::vector<int> pred(6, 2);
  Confusion c = confusion(pred, labels, 3);
  for (int r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(c.percent(r, 2), 100.0);
  EXPECT_DOUBLE_EQ(accuracy(pred, labels), zero_r(labels));
}

TEST(ConfusionProperty, RowsSumAndDiagonalMatchesAccuracy) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 7;
    std::uniform_int_distribution<int> cls(0, k - 1);
    std::vector<int> labels(50), pred(50);
    for (int i = 0; i < 50; ++i) {
      labels[i] = cls(rng);
      pred[i] = rng() % 3 == 0 ? labels[i] : cls(rng);
    }
    Confusion c = confusion(pred, labels, k);
    for (int r = 0; r < k; ++r) {
      if (c.populated(r)) {
        ASSERT_NEAR(c.percent.row(r).sum(), 100.0, 1e-9);
      }
    }
    ASSERT_NEAR(prior_weighted_diagonal(c), accuracy(pred, labels), 1e-12);
  }
}

EvalReport report_with(double acc, uint64_t seed, const std::string& stream = "unquantized") {
  std::vector<int> labels(10, 0), pred(10, 0);
  labels[9] = 1;
  const int wrong = static_cast<int>(std::lround((1.0 - acc) * 10));
  pred[9] = 1;
  for (int i = 0; i < wrong; ++i) pred[i] = 1;
  return single_report("hhh-vs-lll", stream, "linear", {"lll", "hhh"}, seed, pred, labels,
                       acc);
}

TEST(MeanReport, AveragesSeeds) {
  std::vector<EvalReport> three = {report_with(0.4, 0), report_with(0.5, 1),
                                   report_with(0.6, 2)};
  EvalReport m = mean_report(three);
  EXPECT_NEAR(m.mean_accuracy, 0.5, 1e-12);
  EXPECT_NEAR(m.dev_accuracy, 0.5, 1e-12);
  EXPECT_EQ(m.seeds, (std::vector<uint64_t>{0, 1, 2}));
  EXPECT_EQ(m.test_accuracies.size(), 3u);
  EXPECT_DOUBLE_EQ(m.zero_r, 0.9);
  EXPECT_NEAR(m.confusion.percent.row(0).sum(), 100.0, 1e-9);

  std::vector<EvalReport> mixed = {report_with(0.4, 0), report_with(0.5, 1, "codebook0")};
  EXPECT_THROW(mean_report(mixed), Error);
}

TEST(Improvement, RelativeToZeroR) {
  EXPECT_NEAR(improvement_pct(0.2825, 0.125), 126.0, 1e-9);
  EXPECT_DOUBLE_EQ(improvement_pct(0.5, 0.5), 0.0);
  EXPECT_THROW(improvement_pct(0.5, 0.0), Error);
}

TEST(Report, JsonRoundTrip) {
  EvalReport r = mean_report(std::vector<EvalReport>{report_with(0.7, 4), report_with(0.8, 5)});
  auto path = fs::temp_directory_path() / "tuneprobe_report_test.json";
  write_report(r, path);
  EvalReport back = read_report(path);
  fs::remove(path);
  EXPECT_EQ(back.problem, r.problem);
  EXPECT_EQ(back.seeds, r.seeds);
  EXPECT_EQ(back.test_accuracies, r.test_accuracies);
  EXPECT_DOUBLE_EQ(back.mean_accuracy, r.mean_accuracy);
  EXPECT_EQ(back.confusion.class_counts, r.confusion.class_counts);
  EXPECT_LT((back.confusion.percent - r.confusion.percent).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Emit, ResultsTableLayout) {
  std::vector<EvalReport> reports;
  std::vector<std::string> streams = {"codebook1", "unquantized"};
  for (int k = 0; k < 8; ++k) {
    if (k != 1) streams.push_back("codebook" + std::to_string(k));
  }
  for (const auto& name : problem_names()) {
    ClassificationProblem p = problem(name);
    for (const auto& s : streams) {
      std::vector<int> labels, pred;
      for (int c = 0; c < p.num_classes(); ++c) {
        labels.insert(labels.end(), 4, c);
        pred.insert(pred.end(), 4, (c + (s == "unquantized" ? 0 : 1)) % p.num_classes());
      }
      pred[0] = labels[0];
      reports.push_back(single_report(name, s, "linear", p.classes, 0, pred, labels, 0.5));
    }
  }
  auto dir = fs::temp_directory_path() / "tuneprobe_emit_test";
  fs::remove_all(dir);
  emit_results(reports, dir);
  auto lines = read_lines(dir / "results.csv");
  ASSERT_EQ(lines.size(), 46u);
  EXPECT_EQ(lines[0],
            "problem,stream,kind,seed_count,mean_test_acc,dev_acc,zero_r,improvement_pct");
  EXPECT_EQ(lines[1].substr(0, lines[1].find(',', 7)), "8class,unquantized");
  EXPECT_EQ(lines[2].substr(0, 17), "8class,codebook0,");
  EXPECT_EQ(lines[1], "8class,unquantized,linear,1,1.000000,0.500000,0.125000,700.00");
  for (const auto& name : problem_names()) {
    EXPECT_TRUE(fs::exists(dir / "plots" / (name + ".csv")));
    EXPECT_EQ(read_lines(dir / "plots" / (name + ".csv")).size(), 10u);
    EXPECT_TRUE(fs::exists(dir / "confusion" / (name + ".linear.codebook7.csv")));
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace tuneprobe
