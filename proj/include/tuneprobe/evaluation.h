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

#ifndef TUNEPROBE_EVALUATION_H_
#define TUNEPROBE_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace tuneprobe {

// Share of matching entries. Throws Error on empty or unequal inputs.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct Confusion {
  Eigen::MatrixXd percent;          // (i, j): % of true-class-i predicted j
  std::vector<long> class_counts;   // true samples per class
  bool populated(int c) const { return class_counts[static_cast<std::size_t>(c)] > 0; }
};

// Rows of classes without samples are all zero and reported through
// class_counts. Throws Error for labels or predictions outside [0, d_c).
Confusion confusion(std::span<const int> predictions, std::span<const int> labels,
                    int num_classes);

// Sum over classes of prior * diagonal / 100.
double prior_weighted_diagonal(const Confusion& c);

struct EvalReport {
  std::string problem;
  std::string stream;
  std::string kind;
  std::vector<std::string> classes;
  std::vector<uint64_t> seeds;
  std::vector<double> test_accuracies;  // one per seed
  std::vector<double> dev_accuracies;   // one per seed
  double mean_accuracy = 0.0;
  double dev_accuracy = 0.0;  // mean of dev_accuracies
  double zero_r = 0.0;        // of the test labels
  Confusion confusion;        // averaged over seeds
};

// Report of one trained probe on its test set.
EvalReport single_report(std::string problem, std::string stream, std::string kind,
                         std::vector<std::string> classes, uint64_t seed,
                         std::span<const int> predictions, std::span<const int> labels,
                         double dev_accuracy);

// Element-wise mean over reports sharing (problem, stream, kind); seeds and
// per-seed accuracies are concatenated. Throws Error on mismatched keys.
EvalReport mean_report(std::span<const EvalReport> reports);

// (acc - zero_r) / zero_r * 100
double improvement_pct(double acc, double zero_r);

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
void write_report(const EvalReport& r, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

// One line per report, ordered by problem, kind and stream.
void write_results_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
void write_confusion_csv(const EvalReport& r, const std::filesystem::path& path);

// results.csv, plots/<problem>.csv (bar-chart data per stream and kind) and
// confusion/<problem>.<kind>.<stream>.csv under out_dir.
void emit_results(std::span<const EvalReport> reports, const std::filesystem::path& out_dir);

}  // namespace tuneprobe

#endif  // TUNEPROBE_EVALUATION_H_
