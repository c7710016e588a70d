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
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "json.hpp"
#include "tuneprobe/common.h"

namespace tuneprobe {

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {
      "8class", "5class", "hhh-vs-lll", "hxx-vs-lxx", "xll-vs-xhh"};
  return names;
}

ClassificationProblem problem(std::string_view name) {
  ClassificationProblem p;
  p.name = std::string(name);
  p.tune_to_class.fill(ClassificationProblem::kExcluded);
  auto set = [&p](std::string_view code, int cls) {
    p.tune_to_class[Tune::parse(code)->bits()] = cls;
  };
  if (name == "8class") {
    for (Tune t : all_tunes()) {
      p.classes.push_back(t.code());
      p.tune_to_class[t.bits()] = t.bits();
    }
  } else if (name == "5class") {
    p.classes = {"lll", "llh+lhl", "lhh", "hll+hlh", "hhh+hhl"};
    set("lll", 0);
    set("llh", 1);
    set("lhl", 1);
    set("lhh", 2);
    set("hll", 3);
    set("hlh", 3);
    set("hhh", 4);
    set("hhl", 4);
  } else if (name == "hhh-vs-lll") {
    p.classes = {"lll", "hhh"};
    set("lll", 0);
    set("hhh", 1);
  } else if (name == "hxx-vs-lxx") {
    p.classes = {"lxx", "hxx"};
    for (Tune t : all_tunes()) p.tune_to_class[t.bits()] = t.pitch_accent_high();
  } else if (name == "xll-vs-xhh") {
    p.classes = {"xll", "xhh"};
    set("lll", 0);
    set("hll", 0);
    set("lhh", 1);
    set("hhh", 1);
  } else {
    throw Error("unknown classification problem \"" + std::string(name) + "\"");
  }
  return p;
}

double zero_r(std::span<const int> labels) {
  if (labels.empty()) throw Error("zero_r of an empty label set");
  std::map<int, long> counts;
  for (int l : labels) ++counts[l];
  long best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

SplitAssignment stratified_split(std::span<const LabeledId> items,
                                 const SplitRatios& ratios, uint64_t seed) {
  const double total = ratios.train + ratios.dev + ratios.test;
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw Error("split ratios must be non-negative and sum to 1");
  }
  std::map<int, std::vector<std::string>> by_label;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item.id).second) {
      throw Error("stratified_split: duplicate id " + item.id);
    }
    by_label[item.label].push_back(item.id);
  }

  SplitAssignment out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  // Order of preference for remainder ties: dev, test, train.
  const std::array<int, 3> tie_order = {1, 2, 0};
  const std::array<double, 3> r = {ratios.train, ratios.dev, ratios.test};
  std::array<std::vector<std::string>*, 3> dest = {&out.train, &out.dev, &out.test};

  for (auto& [label, ids] : by_label) {
    const long n = static_cast<long>(ids.size());
    if (n < 3) {
      throw Error("stratified_split: label " + std::to_string(label) + " has " +
                  std::to_string(n) + " ids, need at least 3");
    }
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);

    std::array<long, 3> take{};
    std::array<double, 3> frac{};
    long assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double quota = r[s] * static_cast<double>(n);
      take[s] = static_cast<long>(std::floor(quota + 1e-9));
      frac[s] = std::max(0.0, quota - static_cast<double>(take[s]));
      assigned += take[s];
    }
    std::array<int, 3> order = tie_order;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return frac[a] > frac[b] + 1e-9;
    });
    for (long left = n - assigned, i = 0; left > 0; --left, ++i) ++take[order[i % 3]];

    long pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (long c = 0; c < take[s]; ++c) dest[s]->push_back(ids[pos++]);
    }
  }
  return out;
}

void write_split(const SplitAssignment& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write split file " + path.string());
  auto emit = [&out](const std::vector<std::string>& ids, const char* name) {
    for (const auto& id : ids) {
      out << nlohmann::json{{"id", id}, {"split", name}}.dump() << "\n";
    }
  };
  out << nlohmann::json{{"seed", split.seed}}.dump() << "\n";
  emit(split.train, "train");
  emit(split.dev, "dev");
  emit(split.test, "test");
  if (!out) throw Error("write failed for " + path.string());
}

SplitAssignment read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing split: " + path.string());
  SplitAssignment split;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("seed")) {
        split.seed = j["seed"].get<uint64_t>();
        continue;
      }
      std::string id = j.at("id").get<std::string>();
      std::string which = j.at("split").get<std::string>();
      if (which == "train") {
        split.train.push_back(id);
      } else if (which == "dev") {
        split.dev.push_back(id);
      } else if (which == "test") {
        split.test.push_back(id);
      } else {
        throw Error("unknown split name \"" + which + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return split;
}

}  // namespace tuneprobe
