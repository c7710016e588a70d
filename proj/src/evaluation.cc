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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "tuneprobe/common.h"
#include "tuneprobe/latent_store.h"
#include "tuneprobe/tasks.h"

namespace tuneprobe {
namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int problem_rank(const std::string& name) {
  const auto& names = problem_names();
  auto it = std::find(names.begin(), names.end(), name);
  return static_cast<int>(it - names.begin());
}

int stream_rank(const std::string& name) {
  if (name == kUnquantizedStream) return -1;
  int k = 0;
  if (is_codebook_stream(name, &k)) return k;
  return 1 << 20;
}

auto sort_key(const EvalReport& r) {
  return std::make_tuple(problem_rank(r.problem), r.problem, r.kind, stream_rank(r.stream),
                         r.stream);
}

std::vector<const EvalReport*> sorted(std::span<const EvalReport> reports) {
  std::vector<const EvalReport*> out;
  for (const auto& r : reports) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const EvalReport* a, const EvalReport* b) {
    return sort_key(*a) < sort_key(*b);
  });
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw Error("accuracy of an empty prediction set");
  if (predictions.size() != labels.size()) {
    throw Error("accuracy: predictions and labels differ in length");
  }
  long hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels,
                    int num_classes) {
  if (predictions.size() != labels.size()) {
    throw Error("confusion: predictions and labels differ in length");
  }
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, num_classes);
  Confusion c;
  c.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int t = labels[i], p = predictions[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw Error("confusion: class index outside [0, " + std::to_string(num_classes) + ")");
    }
    counts(t, p) += 1.0;
    ++c.class_counts[static_cast<std::size_t>(t)];
  }
  c.percent = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (int r = 0; r < num_classes; ++r) {
    long n = c.class_counts[static_cast<std::size_t>(r)];
    if (n > 0) c.percent.row(r) = counts.row(r) * (100.0 / static_cast<double>(n));
  }
  return c;
}

double prior_weighted_diagonal(const Confusion& c) {
  long total = 0;
  for (long n : c.class_counts) total += n;
  if (total == 0) throw Error("confusion matrix has no samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < c.class_counts.size(); ++i) {
    sum += static_cast<double>(c.class_counts[i]) / static_cast<double>(total) *
           c.percent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) / 100.0;
  }
  return sum;
}

EvalReport single_report(std::string problem, std::string stream, std::string kind,
                         std::vector<std::string> classes, uint64_t seed,
                         std::span<const int> predictions, std::span<const int> labels,
                         double dev_accuracy) {
  EvalReport r;
  r.problem = std::move(problem);
  r.stream = std::move(stream);
  r.kind = std::move(kind);
  r.classes = std::move(classes);
  r.seeds = {seed};
  r.mean_accuracy = accuracy(predictions, labels);
  r.test_accuracies = {r.mean_accuracy};
  r.dev_accuracy = dev_accuracy;
  r.dev_accuracies = {dev_accuracy};
  r.zero_r = zero_r(labels);
  r.confusion = confusion(predictions, labels, static_cast<int>(r.classes.size()));
  return r;
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("mean_report of no reports");
  const EvalReport& first = reports.front();
  EvalReport out;
  out.problem = first.problem;
  out.stream = first.stream;
  out.kind = first.kind;
  out.classes = first.classes;
  out.zero_r = first.zero_r;
  out.confusion.class_counts = first.confusion.class_counts;
  out.confusion.percent = Eigen::MatrixXd::Zero(first.confusion.percent.rows(),
                                                first.confusion.percent.cols());
  double acc = 0.0, dev = 0.0;
  for (const EvalReport& r : reports) {
    if (r.problem != first.problem || r.stream != first.stream || r.kind != first.kind) {
      throw Error("mean_report: reports differ in (problem, stream, kind)");
    }
    if (r.classes != first.classes ||
        r.confusion.class_counts != first.confusion.class_counts) {
      throw Error("mean_report: reports were computed on different test sets");
    }
    out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
    out.test_accuracies.insert(out.test_accuracies.end(), r.test_accuracies.begin(),
                               r.test_accuracies.end());
    out.dev_accuracies.insert(out.dev_accuracies.end(), r.dev_accuracies.begin(),
                              r.dev_accuracies.end());
    out.confusion.percent += r.confusion.percent;
    acc += r.mean_accuracy;
    dev += r.dev_accuracy;
  }
  const double n = static_cast<double>(reports.size());
  out.confusion.percent /= n;
  out.mean_accuracy = acc / n;
  out.dev_accuracy = dev / n;
  return out;
}

double improvement_pct(double acc, double zr) {
  if (!(zr > 0.0)) throw Error("zero_r must be positive");
  return (acc - zr) / zr * 100.0;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.confusion.percent.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(r.confusion.percent.cols()));
    for (Eigen::Index j = 0; j < r.confusion.percent.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = r.confusion.percent(i, j);
    }
    rows.push_back(row);
  }
  return {{"problem", r.problem},
          {"stream", r.stream},
          {"kind", r.kind},
          {"classes", r.classes},
          {"seeds", r.seeds},
          {"test_accuracies", r.test_accuracies},
          {"dev_accuracies", r.dev_accuracies},
          {"mean_accuracy", r.mean_accuracy},
          {"dev_accuracy", r.dev_accuracy},
          {"zero_r", r.zero_r},
          {"class_counts", r.confusion.class_counts},
          {"confusion_percent", rows}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.problem = j.at("problem").get<std::string>();
    r.stream = j.at("stream").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
    r.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    r.test_accuracies = j.at("test_accuracies").get<std::vector<double>>();
    r.dev_accuracies = j.at("dev_accuracies").get<std::vector<double>>();
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.dev_accuracy = j.at("dev_accuracy").get<double>();
    r.zero_r = j.at("zero_r").get<double>();
    r.confusion.class_counts = j.at("class_counts").get<std::vector<long>>();
    auto rows = j.at("confusion_percent").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(r.classes.size());
    if (static_cast<Eigen::Index>(rows.size()) != n ||
        static_cast<Eigen::Index>(r.confusion.class_counts.size()) != n) {
      throw Error("confusion matrix does not match the class list");
    }
    r.confusion.percent.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
        throw Error("confusion matrix row has the wrong length");
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        r.confusion.percent(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_report(const EvalReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << to_json(r).dump(2) << "\n";
  if (!out) throw Error("write failed for " + path.string());
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read report " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_results_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "problem,stream,kind,seed_count,mean_test_acc,dev_acc,zero_r,improvement_pct\n";
  for (const EvalReport* r : sorted(reports)) {
    out << r->problem << ',' << r->stream << ',' << r->kind << ',' << r->seeds.size() << ','
        << fmt(r->mean_accuracy) << ',' << fmt(r->dev_accuracy) << ',' << fmt(r->zero_r)
        << ',' << fmt(improvement_pct(r->mean_accuracy, r->zero_r), 2) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

void write_confusion_csv(const EvalReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "true\\predicted";
  for (const auto& c : r.classes) out << ',' << c;
  out << ",n\n";
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    out << r.classes[i];
    for (std::size_t j = 0; j < r.classes.size(); ++j) {
      out << ',' << fmt(r.confusion.percent(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)), 4);
    }
    out << ',' << r.confusion.class_counts[i] << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

void emit_results(std::span<const EvalReport> reports, const std::filesystem::path& out_dir) {
  write_results_csv(reports, out_dir / "results.csv");
  std::map<std::string, std::vector<const EvalReport*>> by_problem;
  for (const EvalReport* r : sorted(reports)) by_problem[r->problem].push_back(r);
  for (const auto& [name, rows] : by_problem) {
    auto out = open_out(out_dir / "plots" / (name + ".csv"));
    out << "stream,kind,mean_test_acc,min_test_acc,max_test_acc,zero_r\n";
    for (const EvalReport* r : rows) {
      auto [lo, hi] = std::minmax_element(r->test_accuracies.begin(), r->test_accuracies.end());
      out << r->stream << ',' << r->kind << ',' << fmt(r->mean_accuracy) << ','
          << fmt(lo == r->test_accuracies.end() ? r->mean_accuracy : *lo) << ','
          << fmt(hi == r->test_accuracies.end() ? r->mean_accuracy : *hi) << ','
          << fmt(r->zero_r) << '\n';
    }
    if (!out) throw Error("write failed for plot data of " + name);
  }
  for (const EvalReport* r : sorted(reports)) {
    write_confusion_csv(*r, out_dir / "confusion" /
                                (r->problem + "." + r->kind + "." + r->stream + ".csv"));
  }
}

}  // namespace tuneprobe
