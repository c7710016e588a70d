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

#include "tuneprobe/tasks.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "tuneprobe/common.h"

namespace tuneprobe {
namespace {

Tune tune(const char* code) { return *Tune::parse(code); }

TEST(Problems, EightClassIsIdentity) {
  ClassificationProblem p = problem("8class");
  ASSERT_EQ(p.num_classes(), 8);
  for (Tune t : all_tunes()) {
    EXPECT_EQ(p.classes[static_cast<std::size_t>(p.class_of(t))], t.code());
  }
}

TEST(Problems, FiveClassMerges) {
  ClassificationProblem p = problem("5class");
  ASSERT_EQ(p.num_classes(), 5);
  EXPECT_EQ(p.class_of(tune("llh")), p.class_of(tune("lhl")));
  EXPECT_EQ(p.class_of(tune("hll")), p.class_of(tune("hlh")));
  EXPECT_EQ(p.class_of(tune("hhh")), p.class_of(tune("hhl")));
  std::set<int> distinct;
  for (Tune t : all_tunes()) distinct.insert(p.class_of(t));
  EXPECT_EQ(distinct.size(), 5u);
  EXPECT_EQ(p.class_of(tune("lll")), 0);
  EXPECT_EQ(p.class_of(tune("lhh")), 2);
}

TEST(Problems, BinaryProblems) {
  ClassificationProblem hl = problem("hhh-vs-lll");
  int included = 0;
  for (Tune t : all_tunes()) included += hl.includes(t);
  EXPECT_EQ(included, 2);
  EXPECT_NE(hl.class_of(tune("hhh")), hl.class_of(tune("lll")));

  ClassificationProblem pa = problem("hxx-vs-lxx");
  for (Tune t : all_tunes()) EXPECT_EQ(pa.class_of(t), t.pitch_accent_high() ? 1 : 0);

  ClassificationProblem edge = problem("xll-vs-xhh");
  EXPECT_EQ(edge.class_of(tune("hll")), edge.class_of(tune("lll")));
  EXPECT_EQ(edge.class_of(tune("lhh")), edge.class_of(tune("hhh")));
  EXPECT_NE(edge.class_of(tune("lll")), edge.class_of(tune("hhh")));
  EXPECT_FALSE(edge.includes(tune("hlh")));
  EXPECT_FALSE(edge.includes(tune("lhl")));

  EXPECT_THROW(problem("9class"), Error);
  EXPECT_EQ(problem_names().size(), 5u);
}

TEST(ZeroR, BalancedAndSkewed) {
  std::vector<int> eight;
  for (int c = 0; c < 8; ++c) eight.insert(eight.end(), 10, c);
  EXPECT_DOUBLE_EQ(zero_r(eight), 0.125);

  // 5class on a balanced 8-tune corpus: two merged classes of 2 tunes.
  ClassificationProblem p = problem("5class");
  std::vector<int> five;
  for (Tune t : all_tunes()) five.insert(five.end(), 10, p.class_of(t));
  EXPECT_DOUBLE_EQ(zero_r(five), 0.25);

  EXPECT_DOUBLE_EQ(zero_r(std::vector<int>(7, 3)), 1.0);
  EXPECT_THROW(zero_r(std::vector<int>{}), Error);
}

std::vector<LabeledId> items(int per_label, int labels) {
  std::vector<LabeledId> out;
  for (int l = 0; l < labels; ++l) {
    for (int i = 0; i < per_label; ++i) {
      out.push_back({"u" + std::to_string(l) + "_" + std::to_string(i), l});
    }
  }
  return out;
}

TEST(Split, ProportionsPerLabel) {
  SplitAssignment s = stratified_split(items(100, 1), {}, 1);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.dev.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);

  SplitAssignment small = stratified_split(items(10, 1), {}, 1);
  EXPECT_EQ(small.train.size(), 7u);
  EXPECT_EQ(small.dev.size(), 2u);
  EXPECT_EQ(small.test.size(), 1u);

  EXPECT_THROW(stratified_split(items(2, 1), {}, 1), Error);
  EXPECT_THROW(stratified_split(items(10, 1), {0.5, 0.5, 0.5}, 1), Error);
}

TEST(SplitProperty, StratifiedDisjointAndComplete) {
  for (int per : {3, 7, 13, 40, 61}) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      auto all = items(per, 5);
      SplitAssignment s = stratified_split(all, {}, seed);
      std::map<std::string, int> label;
      for (const auto& it : all) label[it.id] = it.label;
      std::set<std::string> seen;
      for (const auto* part : {&s.train, &s.dev, &s.test}) {
        std::map<int, int> counts;
        for (const auto& id : *part) {
          ASSERT_TRUE(seen.insert(id).second) << id;
          ++counts[label[id]];
        }
        int lo = per, hi = 0;
        for (int l = 0; l < 5; ++l) {
          lo = std::min(lo, counts[l]);
          hi = std::max(hi, counts[l]);
        }
        ASSERT_LE(hi - lo, 1) << "per=" << per;
      }
      ASSERT_EQ(seen.size(), all.size());
    }
  }
}

TEST(Split, DeterministicAndInputOrderFree) {
  auto all = items(20, 3);
  SplitAssignment a = stratified_split(all, {}, 42);
  std::reverse(all.begin(), all.end());
  SplitAssignment b = stratified_split(all, {}, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_EQ(a.test, b.test);
  SplitAssignment c = stratified_split(all, {}, 43);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, FileRoundTripAndMissingFile) {
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / "tuneprobe_split_test.jsonl";
  SplitAssignment a = stratified_split(items(20, 2), {}, 5);
  write_split(a, path);
  SplitAssignment back = read_split(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.train, a.train);
  EXPECT_EQ(back.dev, a.dev);
  EXPECT_EQ(back.test, a.test);
  EXPECT_EQ(back.seed, 5u);

  try {
    read_split(dir / "tuneprobe_no_such_split.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing split"), std::string::npos);
  }
}

}  // namespace
}  // namespace tuneprobe
