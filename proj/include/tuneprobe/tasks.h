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

#ifndef TUNEPROBE_TASKS_H_
#define TUNEPROBE_TASKS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tuneprobe/tune.h"

namespace tuneprobe {

struct ClassificationProblem {
  static constexpr int kExcluded = -1;

  std::string name;
  std::vector<std::string> classes;
  std::array<int, Tune::kCount> tune_to_class{};  // indexed by Tune::bits()

  int num_classes() const { return static_cast<int>(classes.size()); }
  int class_of(Tune tune) const { return tune_to_class[tune.bits()]; }
  bool includes(Tune tune) const { return class_of(tune) != kExcluded; }
};

// 8class, 5class, hhh-vs-lll, hxx-vs-lxx, xll-vs-xhh, in that order.
const std::vector<std::string>& problem_names();

// Throws Error for an unknown name.
ClassificationProblem problem(std::string_view name);

// Majority-class share. Throws Error on empty input.
double zero_r(std::span<const int> labels);

struct LabeledId {
  std::string id;
  int label = 0;
};

struct SplitRatios {
  double train = 0.70;
  double dev = 0.15;
  double test = 0.15;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  uint64_t seed = 0;
};

// Per label: ids are sorted, shuffled with a seeded generator, then cut by
// largest-remainder allocation of the ratios. Remainder ties go to dev,
// then test, then train. Throws Error when a label has fewer than three ids
// or an id repeats.
SplitAssignment stratified_split(std::span<const LabeledId> items,
                                 const SplitRatios& ratios, uint64_t seed);

// Line-delimited {"id": ..., "split": "train|dev|test"} records.
void write_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split(const std::filesystem::path& path);

}  // namespace tuneprobe

#endif  // TUNEPROBE_TASKS_H_
